#!/usr/bin/env python
"""
Testes Unitarios - Filtro de Particulas
=======================================

Inicializacao, predicao, atualizacao de pesos, reamostragem estratificada
e o passo completo do filtro.

Uso:
    pytest tests/test_particle_filter.py -v
    NEEDLE_RUN_SLOW=1 pytest tests/test_particle_filter.py -v -m slow
"""

import os
import sys
from pathlib import Path

import numpy as np
import pytest
from dotenv import load_dotenv
from scipy.spatial.transform import Rotation

# Configuracao de paths
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))
load_dotenv(PROJECT_ROOT / '.env')

from tracking.conic_geometry import CameraIntrinsics  # noqa: E402
from tracking.errors import AllParticlesDegenerate, InvalidInput, MissingLabel  # noqa: E402
from tracking.needle_state import (  # noqa: E402
    Action,
    MotionNoise,
    NeedleModel,
    Pose6D,
    apply_motion,
    pose_error,
    project_landmark,
)
from tracking.observation import (  # noqa: E402
    DetectionSet,
    InitialHypothesis,
    ObservationModelSpec,
    ObservationNoiseConfig,
    ObservationVariant,
    initial_hypotheses,
)
from tracking.particle_filter import (  # noqa: E402
    FilterConfig,
    ParticleSet,
    effective_count,
    hypothesis_noise,
    initialize,
    initialize_from_detections,
    normalize_log_weights,
    predict,
    sample_initial,
    step,
    stratified_indices,
    stratified_resample,
    update_weights,
)
from tracking.simulator import NoiseSpec, TrajectorySpec, simulate  # noqa: E402

K = CameraIntrinsics(800.0, 800.0, 128.0, 128.0)
MODEL = NeedleModel()
TRUTH = Pose6D((0.0, 0.0, 0.2), (0.6, -0.3, 0.2))
NEAR_CAMERA = CameraIntrinsics(1000.0, 1000.0, 320.0, 240.0, 640, 480)
NEAR_TRUTH = Pose6D((0.0, 0.0, 0.08), (0.6, -0.3, 0.2))
TWO_POINTS_EM = ObservationModelSpec(ObservationVariant.TWO_POINTS_EM, ObservationNoiseConfig(point_sigma_px=1.0))


def noiseless_detections(pose: Pose6D, frame: int = 0, body_angles=(0.6, 1.5, 2.4), camera: CameraIntrinsics = K) -> DetectionSet:
    return DetectionSet(
        frame=frame,
        labeled={"tail": project_landmark(pose, MODEL, "tail", camera), "tip": project_landmark(pose, MODEL, "tip", camera)},
        body=tuple(project_landmark(pose, MODEL, angle, camera) for angle in body_angles),
    )


def uniform_set(positions, rotvecs, seed: int = 0) -> ParticleSet:
    count = len(positions)
    return ParticleSet(positions, rotvecs, np.full(count, 1.0 / count), np.random.default_rng(seed))


# =============================================================================
# TESTES - Pesos
# =============================================================================
class TestEffectiveCount:
    """Testes para effective_count e normalize_log_weights."""

    def test_pesos_uniformes(self):
        assert effective_count(np.full(100, 0.01)) == pytest.approx(100.0)

    def test_uma_particula(self):
        assert effective_count([1.0, 0.0, 0.0, 0.0]) == pytest.approx(1.0)

    def test_duas_particulas(self):
        assert effective_count([0.5, 0.5, 0.0, 0.0]) == pytest.approx(2.0)

    def test_log_pesos_grandes(self):
        """Deslocamento pelo maximo evita overflow."""
        np.testing.assert_allclose(normalize_log_weights(np.array([1000.0, 1000.0])), [0.5, 0.5])

    def test_nan_vira_peso_zero(self):
        weights = normalize_log_weights(np.array([0.0, np.nan, 0.0]))
        np.testing.assert_allclose(weights, [0.5, 0.0, 0.5])

    def test_todos_infinitos(self):
        with pytest.raises(AllParticlesDegenerate):
            normalize_log_weights(np.full(3, -np.inf))


# =============================================================================
# TESTES - Inicializacao
# =============================================================================
class TestSampleInitial:
    """Testes para sample_initial e initialize."""

    def test_deterministico(self):
        config = FilterConfig(particles=500, seed=42)
        first = sample_initial(TRUTH, config.initial_noise, config)
        second = sample_initial(TRUTH, config.initial_noise, config)

        np.testing.assert_array_equal(first.positions, second.positions)
        np.testing.assert_array_equal(first.rotvecs, second.rotvecs)

    def test_pesos_uniformes_e_media(self):
        """Media amostral a menos de 4 sigma / sqrt(N) de p0 em cada eixo."""
        config = FilterConfig(particles=5000, seed=1)
        particles = sample_initial(TRUTH, config.initial_noise, config)

        np.testing.assert_allclose(particles.weights, 1.0 / 5000)
        bound = 4.0 / np.sqrt(5000)
        assert np.all(np.abs(particles.positions.mean(axis=0) - TRUTH.b) < bound * 0.005)
        offsets = (Rotation.from_rotvec(particles.rotvecs) * TRUTH.rotation().inv()).as_rotvec()
        assert np.all(np.abs(offsets.mean(axis=0)) < bound * np.radians(5.0))

    def test_mistura_divide_particulas(self):
        """Duas hipoteses sem ruido: 6 copias da primeira, 5 da segunda."""
        other = Pose6D((0.001, 0.0, 0.21), (-0.6, 0.3, 0.2))
        config = FilterConfig(particles=11, initial_noise=MotionNoise.zero())
        state = initialize([TRUTH, other], config, MODEL, K)

        np.testing.assert_allclose(state.particles.positions[:6], np.tile(TRUTH.b, (6, 1)))
        np.testing.assert_allclose(state.particles.positions[6:], np.tile(other.b, (5, 1)))

    def test_um_ruido_por_hipotese(self):
        other = Pose6D((0.001, 0.0, 0.21), (-0.6, 0.3, 0.2))
        config = FilterConfig(particles=10)
        state = initialize([TRUTH, other], config, MODEL, K, noises=[MotionNoise.zero(), MotionNoise.zero()])
        np.testing.assert_allclose(state.particles.positions[:5], np.tile(TRUTH.b, (5, 1)))

    def test_ruidos_e_hipoteses_descasados(self):
        with pytest.raises(InvalidInput):
            initialize([TRUTH, TRUTH], FilterConfig(particles=10), MODEL, K, noises=[MotionNoise.zero()])

    def test_sem_hipoteses(self):
        with pytest.raises(InvalidInput):
            initialize([], FilterConfig(particles=10), MODEL, K)

    def test_configuracao_invalida(self):
        with pytest.raises(InvalidInput):
            FilterConfig(particles=1)
        with pytest.raises(InvalidInput):
            FilterConfig(particles=10, neff_threshold=20.0)


# =============================================================================
# TESTES - Predicao e atualizacao
# =============================================================================
class TestPredictUpdate:
    """Testes para predict e update_weights."""

    def test_predicao_sem_ruido(self):
        particles = uniform_set(np.tile(TRUTH.b, (4, 1)), np.tile(TRUTH.q, (4, 1)))
        action = Action((0.001, 0.0, 0.0))

        moved = predict(particles, action, MotionNoise.zero())

        np.testing.assert_allclose(moved.positions, np.tile(TRUTH.b + [0.001, 0, 0], (4, 1)))
        np.testing.assert_array_equal(moved.weights, particles.weights)

    def test_predicao_com_ruido_muda_posicoes(self):
        particles = uniform_set(np.tile(TRUTH.b, (50, 1)), np.tile(TRUTH.q, (50, 1)))
        moved = predict(particles, Action.zero(), MotionNoise.from_std(0.001, 0.01))
        assert moved.positions.std(axis=0).min() > 0

    def test_covariancia_da_predicao(self):
        """Covariancia amostral do deslocamento a 15% da covariancia do ruido."""
        noise = MotionNoise.from_std(0.001, 0.01)
        particles = uniform_set(np.tile(TRUTH.b, (5000, 1)), np.tile(TRUTH.q, (5000, 1)), seed=8)

        moved = predict(particles, Action.zero(), noise)

        offsets = (Rotation.from_rotvec(moved.rotvecs) * TRUTH.rotation().inv()).as_rotvec()
        deltas = np.hstack([moved.positions - TRUTH.b, offsets])
        sample = np.cov(deltas, rowvar=False)
        expected = np.diag(noise.covariance)
        np.testing.assert_allclose(np.diag(sample), expected, rtol=0.15)
        off_diagonal = sample - np.diag(np.diag(sample))
        assert np.all(np.abs(off_diagonal) < 0.15 * np.sqrt(np.outer(expected, expected)))

    def test_particulas_identicas(self):
        """Mesma pose em todas as particulas: pesos continuam uniformes."""
        particles = uniform_set(np.tile(TRUTH.b, (20, 1)), np.tile(TRUTH.q, (20, 1)))
        updated = update_weights(particles, noiseless_detections(TRUTH), TWO_POINTS_EM, MODEL, K)
        np.testing.assert_allclose(updated.weights, 1.0 / 20)

    def test_particula_verdadeira_tem_maior_peso(self):
        config = FilterConfig(particles=100, initial_noise=MotionNoise.from_std(0.002, float(np.radians(2.0))), seed=5)
        particles = sample_initial(TRUTH, config.initial_noise, config)
        particles.positions[0] = TRUTH.b
        particles.rotvecs[0] = TRUTH.q

        updated = update_weights(particles, noiseless_detections(TRUTH), TWO_POINTS_EM, MODEL, K)

        assert int(np.argmax(updated.weights)) == 0
        assert updated.weights.sum() == pytest.approx(1.0)

    def test_todas_atras_da_camera(self):
        behind = uniform_set(np.tile([0.0, 0.0, -0.2], (10, 1)), np.zeros((10, 3)))
        with pytest.raises(AllParticlesDegenerate):
            update_weights(behind, noiseless_detections(TRUTH), TWO_POINTS_EM, MODEL, K)

    def test_label_exigido_ausente(self):
        particles = uniform_set(np.tile(TRUTH.b, (5, 1)), np.tile(TRUTH.q, (5, 1)))
        detections = noiseless_detections(TRUTH)
        without_tip = DetectionSet(0, {"tail": detections.point("tail")}, detections.body)
        with pytest.raises(MissingLabel):
            update_weights(particles, without_tip, TWO_POINTS_EM, MODEL, K)


# =============================================================================
# TESTES - Reamostragem
# =============================================================================
class TestStratifiedResample:
    """Testes para a reamostragem estratificada."""

    def test_peso_concentrado(self):
        indices = stratified_indices(np.array([1.0, 0.0, 0.0, 0.0]), np.random.default_rng(0))
        np.testing.assert_array_equal(indices, [0, 0, 0, 0])

    def test_pesos_uniformes_preservam_particulas(self):
        indices = stratified_indices(np.full(8, 1.0 / 8), np.random.default_rng(3))
        np.testing.assert_array_equal(indices, np.arange(8))

    def test_limite_de_descendentes(self):
        """|copias_i - N w_i| < 2 para qualquer vetor de pesos."""
        rng = np.random.default_rng(11)
        for _ in range(200):
            weights = rng.random(50) ** 3
            weights /= weights.sum()
            counts = np.bincount(stratified_indices(weights, rng), minlength=50)
            assert counts.sum() == 50
            assert np.all(np.abs(counts - 50 * weights) < 2)

    def test_descendentes_de_peso_03(self):
        """Peso 0.3 entre 10 particulas gera de 2 a 4 copias."""
        rng = np.random.default_rng(12)
        weights = np.full(10, 0.7 / 9)
        weights[4] = 0.3
        for _ in range(500):
            copies = int(np.sum(stratified_indices(weights, rng) == 4))
            assert 2 <= copies <= 4

    def test_preserva_a_media(self):
        """Media simples apos reamostrar a ~1/sqrt(N) da media ponderada anterior."""
        rng = np.random.default_rng(6)
        count = 5000
        positions = TRUTH.b + rng.normal(0, 0.001, (count, 3))
        weights = rng.random(count)
        weights /= weights.sum()
        particles = ParticleSet(positions, np.tile(TRUTH.q, (count, 1)), weights, rng)

        resampled = stratified_resample(particles)

        before = np.average(positions, axis=0, weights=weights)
        assert np.all(np.abs(resampled.positions.mean(axis=0) - before) < 3 * 0.001 / np.sqrt(count))

    def test_pesos_voltam_a_uniforme(self):
        particles = ParticleSet(
            np.arange(12, dtype=float).reshape(4, 3), np.zeros((4, 3)),
            np.array([0.7, 0.1, 0.1, 0.1]), np.random.default_rng(0),
        )
        resampled = stratified_resample(particles)

        np.testing.assert_allclose(resampled.weights, 0.25)
        assert resampled.size == 4


# =============================================================================
# TESTES - Inicializacao pelas deteccoes
# =============================================================================
class TestInitializeFromDetections:
    """Testes para hypothesis_noise e initialize_from_detections."""

    def test_sem_covariancia_usa_ruido_inicial(self):
        config = FilterConfig()
        assert hypothesis_noise(InitialHypothesis(TRUTH, 0.0), config) is config.initial_noise

    def test_covariancia_pequena_e_inflada(self):
        config = FilterConfig()
        fit = np.diag([1e-8] * 3 + [1e-5] * 3)
        noise = hypothesis_noise(InitialHypothesis(TRUTH, 0.0, fit), config)
        expected = 4.0 * np.diag(fit) + np.diag(config.motion_noise.covariance)
        np.testing.assert_allclose(np.diag(noise.covariance), expected)

    def test_covariancia_grande_e_limitada(self):
        """Nenhum eixo passa do desvio do ruido inicial (5 mm / 5 graus)."""
        config = FilterConfig()
        fit = np.diag([1e-2] * 3 + [1.0] * 3)
        fit[0, 1] = fit[1, 0] = 5e-3
        noise = hypothesis_noise(InitialHypothesis(TRUTH, 0.0, fit), config)

        stds = np.sqrt(np.diag(noise.covariance))
        np.testing.assert_allclose(stds, np.sqrt(np.diag(config.initial_noise.covariance)))
        assert noise.covariance[0, 1] > 0
        assert np.all(np.linalg.eigvalsh(noise.covariance) > -1e-15)

    def test_primeira_hipotese_em_torno_da_verdade(self):
        """Bloco de particulas da melhor hipotese centrado na pose verdadeira."""
        spec = ObservationModelSpec(ObservationVariant.TWO_POINTS_EM, ObservationNoiseConfig(point_sigma_px=0.5))
        config = FilterConfig(particles=2000, observation=spec, seed=9)
        detections = noiseless_detections(NEAR_TRUTH, frame=3, camera=NEAR_CAMERA)

        state = initialize_from_detections(detections, config, MODEL, NEAR_CAMERA)

        count = len(initial_hypotheses(detections, MODEL, NEAR_CAMERA, 0.5, config.initial_tolerance_px))
        block = state.particles.positions[: config.particles // count]
        assert state.frame == 3
        assert state.particles.size == 2000
        assert np.linalg.norm(block.mean(axis=0) - NEAR_TRUTH.b) < 0.001

    def test_tolerancia_configurada(self):
        assert FilterConfig(hypothesis_tolerance_px=2.0).initial_tolerance_px == 2.0
        spec = ObservationModelSpec(ObservationVariant.TWO_POINTS_EM, ObservationNoiseConfig(point_sigma_px=0.1))
        assert FilterConfig(observation=spec).initial_tolerance_px == 0.5
        with pytest.raises(InvalidInput):
            FilterConfig(hypothesis_tolerance_px=0.0)

    def test_sem_cauda(self):
        detections = noiseless_detections(TRUTH)
        without_tail = DetectionSet(0, {"tip": detections.point("tip")}, detections.body)
        with pytest.raises(MissingLabel):
            initialize_from_detections(without_tail, FilterConfig(particles=10), MODEL, K)


# =============================================================================
# TESTES - Passo completo
# =============================================================================
class TestStep:
    """Testes para step."""

    def test_pesos_normalizados(self):
        config = FilterConfig(particles=300, observation=TWO_POINTS_EM, seed=2)
        state = initialize([TRUTH], config, MODEL, K)
        for frame in range(1, 6):
            state, _ = step(state, Action.zero(), noiseless_detections(TRUTH, frame))
            assert state.particles.weights.sum() == pytest.approx(1.0)
            assert np.all(state.particles.weights >= 0)
        assert state.frame == 5

    def test_deterministico(self):
        """Mesma semente e mesmas deteccoes: mesmas estimativas."""
        config = FilterConfig(particles=200, observation=TWO_POINTS_EM, seed=9)
        estimates = []
        for _ in range(2):
            state = initialize([TRUTH], config, MODEL, K)
            run = []
            for frame in range(1, 8):
                state, estimate = step(state, Action.zero(), noiseless_detections(TRUTH, frame))
                run.append(estimate.as_array())
            estimates.append(np.array(run))
        np.testing.assert_array_equal(estimates[0], estimates[1])

    def test_sem_ruido_acompanha_a_verdade(self):
        """Ruidos nulos e inicializacao na verdade: estimativa segue a trajetoria."""
        config = FilterConfig(
            particles=50,
            motion_noise=MotionNoise.zero(),
            initial_noise=MotionNoise.zero(),
            observation=TWO_POINTS_EM,
        )
        frames = simulate(TrajectorySpec.moving(steps=12, initial_pose=TRUTH), NoiseSpec(sigma_px=0.0), MODEL, K)
        state = initialize([frames[0].truth], config, MODEL, K)
        for frame in frames[1:]:
            state, estimate = step(state, frame.action, frame.detections)
            position_mm, orientation_deg = pose_error(estimate, frame.truth)
            assert position_mm < 1e-6
            assert orientation_deg < 1e-6

    def test_update_pulado(self):
        """Ajuste de elipse impossivel (3 pontos): so a predicao acontece."""
        spec = ObservationModelSpec(ObservationVariant.ONE_POINT_EP)
        config = FilterConfig(particles=100, observation=spec, seed=4)
        state = initialize([TRUTH], config, MODEL, K)

        state, estimate = step(state, Action.zero(), noiseless_detections(TRUTH, 1, body_angles=(1.5,)))

        assert state.skipped_updates == 1
        assert state.resamples == 0
        np.testing.assert_allclose(state.particles.weights, 1.0 / 100)
        assert pose_error(estimate, TRUTH)[0] < 3.0

    def test_convergencia_sem_ruido(self):
        """Inicio deslocado 5 mm / 5 graus converge com deteccoes exatas."""
        offset = apply_motion(TRUTH, Action((0.005, 0.0, 0.0), (0.0, 0.0, float(np.radians(5.0)))))
        config = FilterConfig(particles=1000, observation=TWO_POINTS_EM, seed=3)
        state = initialize([offset], config, MODEL, K)
        for frame in range(1, 101):
            state, estimate = step(state, Action.zero(), noiseless_detections(TRUTH, frame))

        position_mm, orientation_deg = pose_error(estimate, TRUTH)
        assert position_mm < 1.0
        assert orientation_deg < 1.0
        assert state.resamples > 0


# =============================================================================
# TESTES - Escala de benchmark
# =============================================================================
@pytest.mark.slow
@pytest.mark.skipif(not os.getenv("NEEDLE_RUN_SLOW"), reason="NEEDLE_RUN_SLOW nao configurada")
class TestConvergenceSlow:
    """Convergencia com 5000 particulas em varias sementes."""

    @pytest.mark.parametrize("seed", range(10))
    def test_converge_de_5mm_5graus(self, seed):
        offset = apply_motion(TRUTH, Action((0.005, 0.0, 0.0), (0.0, 0.0, float(np.radians(5.0)))))
        config = FilterConfig(particles=5000, observation=TWO_POINTS_EM, seed=seed)
        state = initialize([offset], config, MODEL, K)
        for frame in range(1, 201):
            state, estimate = step(state, Action.zero(), noiseless_detections(TRUTH, frame))

        position_mm, orientation_deg = pose_error(estimate, TRUTH)
        assert position_mm < 0.5
        assert orientation_deg < 0.2


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
