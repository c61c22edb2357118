#!/usr/bin/env python
"""
Testes Unitarios - Modelos de Observacao
========================================

Verossimilhancas Point, EM, EP, Pose e FPS e a variancia propagada do
residuo EM.

Uso:
    pytest tests/test_observation.py -v
"""

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

from tracking.conic_geometry import (  # noqa: E402
    CameraIntrinsics,
    EllipseParams,
    PixelPoint,
    coeffs_to_params,
    conic_residual_batch,
    project_circle,
)
from tracking.errors import InvalidInput, MeasurementUnavailable, MissingLabel, UnknownLabel  # noqa: E402
from tracking.needle_state import NeedleModel, Pose6D, pose_error, project_landmark  # noqa: E402
from tracking.observation import (  # noqa: E402
    FAR_RESIDUAL_PX,
    VARIANCE_FLOOR,
    DetectionSet,
    ObservationModelSpec,
    ObservationNoiseConfig,
    ObservationVariant,
    combined_log_likelihood,
    em_log_likelihood,
    em_residual,
    em_variance,
    em_variance_batch,
    ep_log_likelihood,
    ep_observation,
    fps_log_likelihood,
    initial_hypotheses,
    point_log_likelihood,
    pose_baseline_log_likelihood,
    reconstruct_from_detections,
    refine_pose,
    refinement_residuals,
)

K = CameraIntrinsics(800.0, 800.0, 128.0, 128.0)
MODEL = NeedleModel()
NOISE = ObservationNoiseConfig(point_sigma_px=1.0)
BODY_ANGLES = (0.6, 1.5, 2.4)


def random_pose(rng: np.random.Generator, spread: float = 0.01, max_tilt: float = 60.0) -> Pose6D:
    position = (rng.uniform(-spread, spread), rng.uniform(-spread, spread), rng.uniform(0.15, 0.25))
    angles = [rng.uniform(-np.pi, np.pi), np.radians(rng.uniform(20.0, max_tilt)), rng.uniform(-np.pi, np.pi)]
    return Pose6D(position, tuple(Rotation.from_euler("zxz", angles).as_rotvec()))


def noiseless_detections(pose: Pose6D, body_angles=BODY_ANGLES, frame: int = 0, camera: CameraIntrinsics = K) -> DetectionSet:
    return DetectionSet(
        frame=frame,
        labeled={"tail": project_landmark(pose, MODEL, "tail", camera), "tip": project_landmark(pose, MODEL, "tip", camera)},
        body=tuple(project_landmark(pose, MODEL, angle, camera) for angle in body_angles),
    )


def shifted(pose: Pose6D, offset) -> Pose6D:
    return Pose6D.from_arrays(pose.b + np.asarray(offset, dtype=float), pose.q)


# =============================================================================
# TESTES - DetectionSet
# =============================================================================
class TestDetectionSet:
    """Testes para DetectionSet."""

    def test_sem_deteccoes(self):
        with pytest.raises(InvalidInput):
            DetectionSet(frame=0)

    def test_label_ausente(self):
        detections = DetectionSet(0, {"tip": PixelPoint(1.0, 2.0)})
        with pytest.raises(MissingLabel):
            detections.point("tail")

    def test_ordem_dos_pontos(self):
        """Rotulados primeiro, depois os de corpo na ordem original."""
        detections = DetectionSet(0, {"tail": PixelPoint(1, 1)}, (PixelPoint(2, 2), PixelPoint(3, 3)))
        assert [p.x for p in detections.all_points()] == [1, 2, 3]
        assert detections.count == 3


# =============================================================================
# TESTES - Point
# =============================================================================
class TestPointLikelihood:
    """Testes para point_log_likelihood."""

    pose = Pose6D((0.0, 0.0, 0.2), (0.3, -0.2, 0.1))

    def test_no_landmark(self):
        """Deteccao exata com Sigma = I tem log-densidade -log(2 pi)."""
        detection = project_landmark(self.pose, MODEL, "tail", K)
        value = point_log_likelihood(self.pose, MODEL, K, detection, "tail", NOISE)
        assert value == pytest.approx(-np.log(2 * np.pi))

    def test_um_pixel_fora(self):
        """1 px em x reduz 0.5."""
        pixel = project_landmark(self.pose, MODEL, "tail", K)
        value = point_log_likelihood(self.pose, MODEL, K, PixelPoint(pixel.x + 1.0, pixel.y), "tail", NOISE)
        assert value == pytest.approx(-np.log(2 * np.pi) - 0.5)

    def test_densidade_integra_um(self):
        """Soma da densidade numa grade fina de pixels ~ 1 (sigma = 2)."""
        noise = ObservationNoiseConfig(point_sigma_px=2.0)
        center = project_landmark(self.pose, MODEL, "tip", K)
        offsets = np.arange(-16.0, 16.5, 1.0)
        total = sum(
            np.exp(point_log_likelihood(self.pose, MODEL, K, PixelPoint(center.x + dx, center.y + dy), "tip", noise))
            for dx in offsets for dy in offsets
        )
        assert total == pytest.approx(1.0, abs=1e-3)

    def test_label_desconhecido(self):
        with pytest.raises(UnknownLabel):
            point_log_likelihood(self.pose, MODEL, K, PixelPoint(0, 0), "olho", NOISE)

    def test_atras_da_camera_tem_peso_zero(self):
        pose = Pose6D((0.0, 0.0, -0.2), (0.0, 0.0, 0.0))
        assert point_log_likelihood(pose, MODEL, K, PixelPoint(0, 0), "tail", NOISE) == -np.inf

    def test_decresce_com_a_distancia(self):
        pixel = project_landmark(self.pose, MODEL, "tail", K)
        values = [
            point_log_likelihood(self.pose, MODEL, K, PixelPoint(pixel.x + d, pixel.y), "tail", NOISE)
            for d in (0.0, 0.5, 1.0, 2.0, 4.0)
        ]
        assert all(a > b for a, b in zip(values, values[1:]))


# =============================================================================
# TESTES - EM
# =============================================================================
class TestEllipseMatching:
    """Testes para residuo, variancia e verossimilhanca EM."""

    def test_residuo_nulo_no_arco(self):
        """Pontos sem ruido do proprio arco tem residuo ~ 0."""
        rng = np.random.default_rng(7)
        for _ in range(30):
            pose = random_pose(rng)
            for angle in rng.uniform(0, np.pi, 4):
                point = project_landmark(pose, MODEL, float(angle), K)
                assert abs(em_residual(pose, MODEL, K, point)) < 1e-9

    def test_variancia_exemplo(self):
        """Circulo (-0.01, 0, -0.01, 0, 0), ponto (10, 0), sigma 1 -> 0.04."""
        coeffs = np.array([[-0.01, 0.0, -0.01, 0.0, 0.0]])
        point = np.array([[10.0, 0.0]])
        assert em_variance_batch(coeffs, point, 1.0)[0, 0] == pytest.approx(0.04)
        assert em_variance_batch(coeffs, point, 0.0)[0, 0] == VARIANCE_FLOOR

    @pytest.mark.parametrize("sigma", [0.5, 1.0, 1.5])
    def test_variancia_monte_carlo(self, sigma):
        """Variancia empirica do residuo ~ variancia propagada (10%)."""
        rng = np.random.default_rng(int(sigma * 10))
        for pose in (Pose6D((0.0, 0.0, 0.2), (0.0, 0.0, 0.0)), Pose6D((0.003, -0.002, 0.18), (0.4, 0.2, 0.0))):
            coeffs = project_circle(pose, MODEL.radius, K)
            assert coeffs_to_params(coeffs).height >= 15.0
            point = project_landmark(pose, MODEL, 1.1, K)

            samples = point.as_array() + sigma * rng.standard_normal((1_000_000, 2))
            residuals = conic_residual_batch(coeffs.as_array()[None], samples)[0]
            predicted = em_variance(pose, MODEL, K, point, sigma)

            assert residuals.var() == pytest.approx(predicted, rel=0.10)

    @pytest.mark.parametrize("sigma", [0.5, 1.0, 1.5])
    def test_variancia_em_poses_aleatorias(self, sigma):
        """20 pares pose/ponto com semi-eixos >= 20 px: variancia empirica a 10% da propagada."""
        rng = np.random.default_rng(100 + int(sigma * 10))
        camera = CameraIntrinsics(1000.0, 1000.0, 320.0, 240.0, 640, 480)
        checked = 0
        while checked < 20:
            position = (rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01), rng.uniform(0.07, 0.1))
            angles = [rng.uniform(-np.pi, np.pi), np.radians(rng.uniform(0.0, 60.0)), rng.uniform(-np.pi, np.pi)]
            pose = Pose6D(position, tuple(Rotation.from_euler("zxz", angles).as_rotvec()))
            coeffs = project_circle(pose, MODEL.radius, camera)
            params = coeffs_to_params(coeffs)
            if min(params.width, params.height) < 20.0:
                continue
            point = project_landmark(pose, MODEL, float(rng.uniform(0.0, MODEL.arc_extent)), camera)

            samples = point.as_array() + sigma * rng.standard_normal((200_000, 2))
            residuals = conic_residual_batch(coeffs.as_array()[None], samples)[0]
            predicted = em_variance(pose, MODEL, camera, point, sigma)

            assert residuals.var() == pytest.approx(predicted, rel=0.10)
            checked += 1

    def test_media_do_residuo(self):
        """Media do residuo ruidoso fica no vies de segunda ordem."""
        rng = np.random.default_rng(9)
        pose = Pose6D((0.0, 0.0, 0.2), (0.3, 0.1, 0.0))
        coeffs = project_circle(pose, MODEL.radius, K)
        point = project_landmark(pose, MODEL, 0.8, K)
        samples = point.as_array() + 0.5 * rng.standard_normal((100_000, 2))
        residuals = conic_residual_batch(coeffs.as_array()[None], samples)[0]
        standard_error = residuals.std() / np.sqrt(len(residuals))
        # Termo de segunda ordem desloca a media em (a + c) sigma^2
        bias = (coeffs.a + coeffs.c) * 0.25
        assert abs(residuals.mean() - bias) < 4 * standard_error

    def test_pontos_na_conica(self):
        """Cada termo vale -0.5 log(2 pi var) quando o residuo e zero."""
        pose = Pose6D((0.0, 0.0, 0.2), (0.3, -0.2, 0.1))
        points = [project_landmark(pose, MODEL, angle, K) for angle in BODY_ANGLES]
        expected = sum(-0.5 * np.log(2 * np.pi * em_variance(pose, MODEL, K, p, 1.0)) for p in points)
        assert em_log_likelihood(pose, MODEL, K, points, 1.0) == pytest.approx(expected, abs=1e-6)

    def test_lista_vazia(self):
        with pytest.raises(InvalidInput):
            em_log_likelihood(Pose6D((0, 0, 0.2), (0, 0, 0)), MODEL, K, [], 1.0)

    def test_discrimina_profundidade(self):
        """Pose verdadeira supera a deslocada 5 mm no eixo optico."""
        rng = np.random.default_rng(13)
        for _ in range(100):
            # Agulha centrada: o eixo optico cruza o interior da elipse
            pose = random_pose(rng, spread=0.0, max_tilt=45.0)
            points = noiseless_detections(pose).body
            true_value = em_log_likelihood(pose, MODEL, K, points, 0.5)
            displaced = em_log_likelihood(shifted(pose, (0, 0, 0.005)), MODEL, K, points, 0.5)
            assert true_value > displaced


# =============================================================================
# TESTES - EP
# =============================================================================
class TestEllipseParameters:
    """Testes para ep_observation e ep_log_likelihood."""

    pose = Pose6D((0.002, -0.001, 0.2), (0.5, -0.2, 0.3))

    def test_cinco_pontos_sem_ruido(self):
        expected = coeffs_to_params(project_circle(self.pose, MODEL.radius, K))
        observed = ep_observation(noiseless_detections(self.pose))
        np.testing.assert_allclose(observed.as_array(), expected.as_array(), atol=1e-5)

    def test_quatro_pontos(self):
        detections = noiseless_detections(self.pose, body_angles=(1.0, 2.0))
        with pytest.raises(InvalidInput):
            ep_observation(detections)

    def test_maximo(self):
        """Observacao igual a projecao atinge -0.5 log((2 pi)^5 det)."""
        noise = ObservationNoiseConfig()
        observed = coeffs_to_params(project_circle(self.pose, MODEL.radius, K))
        expected = -0.5 * np.log((2 * np.pi) ** 5 * np.linalg.det(noise.ep_covariance))
        assert ep_log_likelihood(self.pose, MODEL, K, observed, noise.ep_covariance) == pytest.approx(expected)

    def test_periodicidade_da_rotacao(self):
        """theta + pi e (h, w, theta + pi/2) descrevem a mesma observacao."""
        observed = coeffs_to_params(project_circle(self.pose, MODEL.radius, K))
        turned = EllipseParams(observed.center, observed.width, observed.height, observed.rotation + np.pi)
        swapped = EllipseParams(observed.center, observed.height, observed.width, observed.rotation + np.pi / 2)
        reference = ep_log_likelihood(self.pose, MODEL, K, observed)

        assert ep_log_likelihood(self.pose, MODEL, K, turned) == pytest.approx(reference)
        assert ep_log_likelihood(self.pose, MODEL, K, swapped) == pytest.approx(reference)

    def test_discrimina_profundidade(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            pose = random_pose(rng)
            observed = coeffs_to_params(project_circle(pose, MODEL.radius, K))
            assert ep_log_likelihood(pose, MODEL, K, observed) > ep_log_likelihood(shifted(pose, (0, 0, 0.005)), MODEL, K, observed)


# =============================================================================
# TESTES - Baselines
# =============================================================================
class TestBaselines:
    """Testes para Pose e FPS."""

    pose = Pose6D((0.0, 0.001, 0.2), (0.3, -0.2, 0.1))

    def test_pose_maximo(self):
        noise = ObservationNoiseConfig()
        expected = -0.5 * np.log((2 * np.pi) ** 6 * np.linalg.det(noise.pose_covariance))
        assert pose_baseline_log_likelihood(self.pose, self.pose, noise.pose_covariance) == pytest.approx(expected)

    def test_pose_um_sigma(self):
        """Deslocamento de 1 sigma em x reduz 0.5."""
        noise = ObservationNoiseConfig()
        peak = pose_baseline_log_likelihood(self.pose, self.pose, noise.pose_covariance)
        offset = pose_baseline_log_likelihood(shifted(self.pose, (0.005, 0, 0)), self.pose, noise.pose_covariance)
        assert peak - offset == pytest.approx(0.5)

    def test_fps_registro_exato(self):
        """Deteccoes nos angulos registrados: soma dos maximos."""
        detections = noiseless_detections(self.pose, body_angles=MODEL.body_registration_angles())
        value = fps_log_likelihood(self.pose, MODEL, K, detections, noise=NOISE)
        assert value == pytest.approx(-5 * np.log(2 * np.pi))

    def test_fps_registro_imperfeito(self):
        """Ponto gerado em 0.4 do arco e registrado em 0.5 perde verossimilhanca."""
        correct = noiseless_detections(self.pose, body_angles=(0.5 * np.pi,))
        wrong = noiseless_detections(self.pose, body_angles=(0.4 * np.pi,))
        assert fps_log_likelihood(self.pose, MODEL, K, wrong, noise=NOISE) < fps_log_likelihood(self.pose, MODEL, K, correct, noise=NOISE)

    def test_fps_soma_de_termos(self):
        """FPS e a soma dos termos Point no registro fixo."""
        rng = np.random.default_rng(2)
        detections = noiseless_detections(self.pose)
        noisy = DetectionSet(
            0,
            {k: PixelPoint(p.x + rng.normal(), p.y + rng.normal()) for k, p in detections.labeled.items()},
            tuple(PixelPoint(p.x + rng.normal(), p.y + rng.normal()) for p in detections.body),
        )
        expected = sum(point_log_likelihood(self.pose, MODEL, K, p, label, NOISE) for label, p in noisy.labeled.items())
        expected += sum(
            point_log_likelihood(self.pose, MODEL, K, p, float(angle), NOISE)
            for p, angle in zip(noisy.body, MODEL.body_registration_angles())
        )
        assert fps_log_likelihood(self.pose, MODEL, K, noisy, noise=NOISE) == pytest.approx(expected)

    def test_fps_angulo_nao_registrado(self):
        detections = noiseless_detections(self.pose)
        with pytest.raises(UnknownLabel):
            fps_log_likelihood(self.pose, MODEL, K, detections, assumed_angles={"tail": 0.0}, noise=NOISE)

    def test_reconstrucao_de_deteccoes(self):
        """Cauda + ponta + corpo sem ruido recuperam a pose."""
        poses = reconstruct_from_detections(noiseless_detections(self.pose), MODEL, K)
        assert pose_error(poses[0], self.pose)[0] < 0.1


# =============================================================================
# TESTES - Hipoteses iniciais
# =============================================================================
class TestInitialHypotheses:
    """Testes para refine_pose e initial_hypotheses."""

    pose = Pose6D((0.001, -0.002, 0.2), (0.6, -0.3, 0.2))

    def test_residuos_nulos_na_verdade(self):
        residuals = refinement_residuals(self.pose, noiseless_detections(self.pose), MODEL, K)
        assert residuals.shape == (7,)
        np.testing.assert_allclose(residuals, 0.0, atol=1e-6)

    def test_residuos_atras_da_camera(self):
        behind = Pose6D((0.0, 0.0, -0.2), (0.0, 0.0, 0.0))
        residuals = refinement_residuals(behind, noiseless_detections(self.pose), MODEL, K)
        assert (residuals == FAR_RESIDUAL_PX).all()

    def test_refinamento_recupera_a_verdade(self):
        """Partindo de 0.5 mm / 1 grau da verdade, volta a ela."""
        start = Pose6D.from_arrays(
            self.pose.b + np.array([0.0005, 0.0, 0.0]),
            (Rotation.from_rotvec([0.0, np.radians(1.0), 0.0]) * self.pose.rotation()).as_rotvec(),
        )
        hypothesis = refine_pose(start, noiseless_detections(self.pose), MODEL, K, sigma_px=1.0)

        position_mm, orientation_deg = pose_error(hypothesis.pose, self.pose)
        assert position_mm < 0.01
        assert orientation_deg < 0.01
        assert hypothesis.score < 1e-3

    def test_covariancia_do_ajuste(self):
        detections = noiseless_detections(self.pose)
        start = shifted(self.pose, (0.0005, -0.0003, 0.001))
        coarse = refine_pose(start, detections, MODEL, K, sigma_px=1.0).covariance
        fine = refine_pose(start, detections, MODEL, K, sigma_px=0.5).covariance

        assert coarse.shape == (6, 6)
        np.testing.assert_allclose(coarse, coarse.T)
        assert np.all(np.linalg.eigvalsh(coarse) > 0)
        np.testing.assert_allclose(fine, 0.25 * coarse, rtol=1e-6)

    def test_poucos_residuos_sem_covariancia(self):
        """Cauda e ponta sozinhas (4 residuos) nao determinam 6 graus de liberdade."""
        full = noiseless_detections(self.pose)
        detections = DetectionSet(0, full.labeled)
        start = shifted(self.pose, (0.0005, 0.0, 0.0))
        assert refine_pose(start, detections, MODEL, K, sigma_px=1.0).covariance is None

    def test_verdade_e_a_melhor_hipotese(self):
        hypotheses = initial_hypotheses(noiseless_detections(self.pose), MODEL, K, sigma_px=1.0, tolerance_px=0.5)

        assert hypotheses
        assert pose_error(hypotheses[0].pose, self.pose)[0] < 0.01
        assert pose_error(hypotheses[0].pose, self.pose)[1] < 0.01
        scores = [h.score for h in hypotheses]
        assert scores == sorted(scores)
        assert scores[-1] - scores[0] < 0.5

    def test_com_ruido_contem_pose_proxima(self):
        """Camera de 1000 px a 8 cm, ruido de 0.5 px."""
        rng = np.random.default_rng(5)
        camera = CameraIntrinsics(1000.0, 1000.0, 320.0, 240.0, 640, 480)
        truth = Pose6D((0.0, 0.0, 0.08), (0.6, -0.3, 0.2))
        detections = noiseless_detections(truth, camera=camera)
        noisy = DetectionSet(
            0,
            {k: PixelPoint(p.x + 0.5 * rng.normal(), p.y + 0.5 * rng.normal()) for k, p in detections.labeled.items()},
            tuple(PixelPoint(p.x + 0.5 * rng.normal(), p.y + 0.5 * rng.normal()) for p in detections.body),
        )
        hypotheses = initial_hypotheses(noisy, MODEL, camera, sigma_px=0.5, tolerance_px=1.5)
        orientation = min(pose_error(h.pose, truth)[1] for h in hypotheses)
        assert orientation < 5.0

    def test_sem_cauda(self):
        detections = noiseless_detections(self.pose)
        without_tail = DetectionSet(0, {"tip": detections.labeled["tip"]}, detections.body)
        with pytest.raises(MissingLabel):
            initial_hypotheses(without_tail, MODEL, K, sigma_px=1.0, tolerance_px=0.5)

    def test_poucos_pontos(self):
        detections = noiseless_detections(self.pose, body_angles=(1.5,))
        with pytest.raises(InvalidInput):
            initial_hypotheses(detections, MODEL, K, sigma_px=1.0, tolerance_px=0.5)


# =============================================================================
# TESTES - Combinacao
# =============================================================================
class TestCombined:
    """Testes para combined_log_likelihood."""

    spec = ObservationModelSpec(ObservationVariant.TWO_POINTS_EM, NOISE)

    def test_maximo_local(self):
        """Deslocamento lateral de 1 mm sempre reduz TwoPointsEM."""
        rng = np.random.default_rng(23)
        for _ in range(50):
            pose = random_pose(rng)
            detections = noiseless_detections(pose)
            peak = combined_log_likelihood(self.spec, pose, MODEL, K, detections)
            assert np.isfinite(peak)
            for offset in np.vstack([np.eye(3)[:2], -np.eye(3)[:2]]) * 0.001:
                assert combined_log_likelihood(self.spec, shifted(pose, offset), MODEL, K, detections) < peak

    def test_soma_de_componentes(self):
        """TwoPointsEM = cauda + ponta + EM nos pontos de corpo."""
        pose = Pose6D((0.001, 0.0, 0.19), (0.2, 0.5, -0.1))
        rng = np.random.default_rng(4)
        clean = noiseless_detections(pose)
        detections = DetectionSet(
            0,
            {k: PixelPoint(p.x + rng.normal(), p.y + rng.normal()) for k, p in clean.labeled.items()},
            tuple(PixelPoint(p.x + rng.normal(), p.y + rng.normal()) for p in clean.body),
        )
        expected = (
            point_log_likelihood(pose, MODEL, K, detections.point("tail"), "tail", NOISE)
            + point_log_likelihood(pose, MODEL, K, detections.point("tip"), "tip", NOISE)
            + em_log_likelihood(pose, MODEL, K, list(detections.body), 1.0)
        )
        assert combined_log_likelihood(self.spec, pose, MODEL, K, detections) == pytest.approx(expected)

    def test_permutacao_dos_pontos_de_corpo(self):
        pose = Pose6D((0.0, 0.0, 0.2), (0.3, -0.2, 0.1))
        detections = noiseless_detections(pose)
        reordered = DetectionSet(0, detections.labeled, tuple(reversed(detections.body)))
        for variant in (ObservationVariant.ONE_POINT_EM, ObservationVariant.TWO_POINTS_EP):
            spec = ObservationModelSpec(variant, NOISE)
            probe = shifted(pose, (0.0005, 0, 0))
            assert combined_log_likelihood(spec, probe, MODEL, K, reordered) == pytest.approx(
                combined_log_likelihood(spec, probe, MODEL, K, detections)
            )

    def test_sem_cauda(self):
        pose = Pose6D((0.0, 0.0, 0.2), (0.3, -0.2, 0.1))
        detections = noiseless_detections(pose)
        without_tail = DetectionSet(0, {"tip": detections.point("tip")}, detections.body)
        spec = ObservationModelSpec(ObservationVariant.ONE_POINT_EM, NOISE)
        with pytest.raises(MissingLabel):
            combined_log_likelihood(spec, pose, MODEL, K, without_tail)

    def test_ep_com_ajuste_degenerado(self):
        """Pontos colineares tornam a feature EP indisponivel."""
        detections = DetectionSet(
            0,
            {"tail": PixelPoint(100.0, 100.0), "tip": PixelPoint(140.0, 100.0)},
            (PixelPoint(110.0, 100.0), PixelPoint(120.0, 100.0), PixelPoint(130.0, 100.0)),
        )
        spec = ObservationModelSpec(ObservationVariant.ONE_POINT_EP, NOISE)
        with pytest.raises(MeasurementUnavailable):
            combined_log_likelihood(spec, Pose6D((0, 0, 0.2), (0, 0, 0)), MODEL, K, detections)

    def test_variantes_de_pontos(self):
        """OnePoint usa so a cauda; TwoPoints soma a ponta."""
        pose = Pose6D((0.0, 0.0, 0.2), (0.3, -0.2, 0.1))
        detections = noiseless_detections(pose)
        one = combined_log_likelihood(ObservationModelSpec(ObservationVariant.ONE_POINT, NOISE), pose, MODEL, K, detections)
        two = combined_log_likelihood(ObservationModelSpec(ObservationVariant.TWO_POINTS, NOISE), pose, MODEL, K, detections)
        assert one == pytest.approx(-np.log(2 * np.pi))
        assert two == pytest.approx(-2 * np.log(2 * np.pi))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
