"""
Filtro de Particulas
====================

Filtro bootstrap sobre poses 6D da agulha:

    predict  -> modelo de movimento com ruido Gaussiano
    update   -> pesos multiplicados pela verossimilhanca (em log)
    resample -> estratificado quando N_eff cai abaixo do limiar
    estimate -> media ponderada (posicao) + media cordal (orientacao)

Ordem de consumo do gerador por passo: predict sorteia N x 6 normais,
resample (quando ocorre) sorteia N uniformes. Mesma semente, mesmas
deteccoes -> mesma sequencia de estimativas.
"""

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import structlog
from scipy.spatial.transform import Rotation

from .conic_geometry import CameraIntrinsics
from .errors import AllParticlesDegenerate, InvalidInput, MeasurementUnavailable
from .needle_state import (
    Action,
    MotionNoise,
    NeedleModel,
    Pose6D,
    apply_motion_batch,
    poses_from_arrays,
    weighted_mean_pose,
)
from .observation import (
    DetectionSet,
    InitialHypothesis,
    ObservationModelSpec,
    PoseBatch,
    batch_log_likelihood,
    initial_hypotheses,
    prepare_observation,
)

logger = structlog.get_logger(__name__)

INITIAL_INFLATION = 2.0
MIN_HYPOTHESIS_TOLERANCE_PX = 0.5


# =============================================================================
# TIPOS
# =============================================================================
@dataclass
class ParticleSet:
    """N particulas (posicao, vetor de rotacao), pesos normalizados e gerador."""
    positions: np.ndarray
    rotvecs: np.ndarray
    weights: np.ndarray
    rng: np.random.Generator

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        self.rotvecs = np.asarray(self.rotvecs, dtype=float).reshape(-1, 3)
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if not (len(self.positions) == len(self.rotvecs) == len(self.weights)):
            raise InvalidInput("Posicoes, rotacoes e pesos com tamanhos diferentes")

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def poses(self) -> List[Pose6D]:
        return list(poses_from_arrays(self.positions, self.rotvecs))

    def with_arrays(self, positions=None, rotvecs=None, weights=None) -> "ParticleSet":
        return ParticleSet(
            positions=self.positions if positions is None else positions,
            rotvecs=self.rotvecs if rotvecs is None else rotvecs,
            weights=self.weights if weights is None else weights,
            rng=self.rng,
        )


@dataclass(frozen=True)
class FilterConfig:
    """Parametros do filtro; neff_threshold None significa N/2."""
    particles: int = 5000
    motion_noise: MotionNoise = field(default_factory=lambda: MotionNoise.from_std(0.0002, float(np.radians(0.2))))
    initial_noise: MotionNoise = field(default_factory=lambda: MotionNoise.from_std(0.005, float(np.radians(5.0))))
    observation: ObservationModelSpec = field(default_factory=ObservationModelSpec)
    neff_threshold: Optional[float] = None
    seed: int = 0
    hypothesis_tolerance_px: Optional[float] = None

    def __post_init__(self):
        if self.particles < 2:
            raise InvalidInput(f"Filtro exige ao menos 2 particulas: {self.particles}")
        if self.neff_threshold is not None and not 0 < self.neff_threshold <= self.particles:
            raise InvalidInput(f"Limiar de N_eff fora de (0, N]: {self.neff_threshold}")
        if self.seed < 0:
            raise InvalidInput(f"Semente deve ser nao negativa: {self.seed}")
        if self.hypothesis_tolerance_px is not None and not self.hypothesis_tolerance_px > 0:
            raise InvalidInput(f"Tolerancia de hipoteses deve ser positiva: {self.hypothesis_tolerance_px}")

    @property
    def initial_tolerance_px(self) -> float:
        """Folga de residuo (px) para manter uma hipotese inicial; None = 3 sigma, minimo 0.5."""
        if self.hypothesis_tolerance_px is not None:
            return float(self.hypothesis_tolerance_px)
        return max(MIN_HYPOTHESIS_TOLERANCE_PX, 3.0 * self.observation.noise.point_sigma_px)

    @property
    def resample_threshold(self) -> float:
        return self.particles / 2.0 if self.neff_threshold is None else float(self.neff_threshold)


@dataclass
class FilterState:
    """Estado do rastreamento entre frames."""
    particles: ParticleSet
    config: FilterConfig
    model: NeedleModel
    K: CameraIntrinsics
    frame: int = 0
    skipped_updates: int = 0
    resamples: int = 0


# =============================================================================
# INICIALIZACAO
# =============================================================================
def _perturb(pose: Pose6D, noise: MotionNoise, rng: np.random.Generator, count: int) -> Tuple[np.ndarray, np.ndarray]:
    draws = noise.sample(rng, count)
    positions = pose.b + draws[:, :3]
    rotvecs = (Rotation.from_rotvec(draws[:, 3:]) * pose.rotation()).as_rotvec().reshape(-1, 3)
    return positions, rotvecs


def sample_initial(p0: Pose6D, initial_noise: MotionNoise, config: FilterConfig) -> ParticleSet:
    """N particulas em torno de p0 com covariancia initial_noise, pesos uniformes."""
    rng = np.random.default_rng(config.seed)
    positions, rotvecs = _perturb(p0, initial_noise, rng, config.particles)
    weights = np.full(config.particles, 1.0 / config.particles)
    return ParticleSet(positions, rotvecs, weights, rng)


def sample_initial_mixture(
    poses: Sequence[Pose6D],
    initial_noise: Union[MotionNoise, Sequence[MotionNoise]],
    config: FilterConfig,
) -> ParticleSet:
    """
    Divide as particulas entre varias hipoteses iniciais (ex.: as duas
    poses espelhadas de uma reconstrucao ambigua). `initial_noise` pode
    ser um ruido comum ou um por hipotese.
    """
    if not poses:
        raise InvalidInput("Mistura inicial exige ao menos uma pose")
    noises = [initial_noise] * len(poses) if isinstance(initial_noise, MotionNoise) else list(initial_noise)
    if len(noises) != len(poses):
        raise InvalidInput(f"{len(poses)} hipoteses com {len(noises)} ruidos iniciais")
    if len(poses) == 1:
        return sample_initial(poses[0], noises[0], config)

    rng = np.random.default_rng(config.seed)
    counts = np.full(len(poses), config.particles // len(poses))
    counts[: config.particles % len(poses)] += 1
    chunks = [_perturb(pose, noise, rng, int(count)) for pose, noise, count in zip(poses, noises, counts)]
    positions = np.vstack([chunk[0] for chunk in chunks])
    rotvecs = np.vstack([chunk[1] for chunk in chunks])
    weights = np.full(config.particles, 1.0 / config.particles)
    return ParticleSet(positions, rotvecs, weights, rng)


def initialize(
    poses: Sequence[Pose6D],
    config: FilterConfig,
    model: NeedleModel,
    K: CameraIntrinsics,
    frame: int = 0,
    noises: Optional[Sequence[MotionNoise]] = None,
) -> FilterState:
    """Estado inicial a partir de uma ou mais poses candidatas."""
    particles = sample_initial_mixture(list(poses), config.initial_noise if noises is None else noises, config)
    logger.debug("filtro_inicializado", particulas=config.particles, hipoteses=len(poses), frame=frame)
    return FilterState(particles=particles, config=config, model=model, K=K, frame=frame)


def hypothesis_noise(hypothesis: InitialHypothesis, config: FilterConfig) -> MotionNoise:
    """
    Espalhamento inicial de uma hipotese: covariancia do ajuste inflada
    (desvio x INITIAL_INFLATION) mais o ruido de movimento, limitada por
    eixo ao desvio de config.initial_noise. Sem covariancia do ajuste, usa
    config.initial_noise.
    """
    if hypothesis.covariance is None:
        return config.initial_noise
    covariance = INITIAL_INFLATION ** 2 * hypothesis.covariance + config.motion_noise.covariance
    stds = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    limits = np.sqrt(np.clip(np.diag(config.initial_noise.covariance), 0.0, None))
    shrink = np.minimum(1.0, np.divide(limits, stds, out=np.ones(6), where=stds > 0))
    covariance = shrink[:, None] * covariance * shrink[None, :]
    return MotionNoise(0.5 * (covariance + covariance.T))


def initialize_from_detections(
    detections: DetectionSet,
    config: FilterConfig,
    model: NeedleModel,
    K: CameraIntrinsics,
) -> FilterState:
    """
    Inicializacao automatica: hipoteses refinadas da reconstrucao do frame,
    cada uma com o espalhamento dado pelo condicionamento do ajuste.

    Raises:
        MissingLabel / InvalidInput / GeometryError: reconstrucao impossivel
    """
    sigma = config.observation.noise.point_sigma_px
    hypotheses = initial_hypotheses(detections, model, K, sigma, config.initial_tolerance_px)
    return initialize(
        [h.pose for h in hypotheses],
        config,
        model,
        K,
        frame=detections.frame,
        noises=[hypothesis_noise(h, config) for h in hypotheses],
    )


# =============================================================================
# ETAPAS DO FILTRO
# =============================================================================
def predict(particles: ParticleSet, action: Action, motion_noise: MotionNoise) -> ParticleSet:
    """Propaga cada particula pelo modelo de movimento; pesos inalterados."""
    noise = motion_noise.sample(particles.rng, particles.size)
    positions, rotvecs = apply_motion_batch(particles.positions, particles.rotvecs, action, noise)
    return particles.with_arrays(positions=positions, rotvecs=rotvecs)


def normalize_log_weights(log_weights: np.ndarray) -> np.ndarray:
    """
    Pesos normalizados a partir de log-pesos (deslocados pelo maximo).

    Raises:
        AllParticlesDegenerate: nenhum log-peso finito
    """
    log_weights = np.where(np.isnan(log_weights), -np.inf, log_weights)
    peak = np.max(log_weights)
    if not np.isfinite(peak):
        raise AllParticlesDegenerate("Todas as particulas com peso zero")
    weights = np.exp(log_weights - peak)
    return weights / weights.sum()


def update_weights(
    particles: ParticleSet,
    detections: DetectionSet,
    spec: ObservationModelSpec,
    model: NeedleModel,
    K: CameraIntrinsics,
) -> ParticleSet:
    """
    Multiplica os pesos pela verossimilhanca da variante.

    Raises:
        MeasurementUnavailable: feature do frame indisponivel (pular update)
        AllParticlesDegenerate: todas as verossimilhancas zeradas
    """
    prepared = prepare_observation(spec, detections, model, K)
    log_likelihood = batch_log_likelihood(prepared, PoseBatch(particles.positions, particles.rotvecs), model, K)
    with np.errstate(divide="ignore"):
        log_weights = np.log(particles.weights) + log_likelihood
    return particles.with_arrays(weights=normalize_log_weights(log_weights))


def effective_count(weights) -> float:
    """N_eff = 1 / sum(w^2) para pesos normalizados."""
    weights = np.asarray(weights, dtype=float)
    return float(1.0 / np.sum(weights ** 2))


def stratified_indices(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Indices dos pais: uma uniforme por estrato [i/N, (i+1)/N)."""
    count = len(weights)
    positions = (np.arange(count) + rng.random(count)) / count
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0
    return np.minimum(np.searchsorted(cumulative, positions, side="right"), count - 1)


def stratified_resample(particles: ParticleSet) -> ParticleSet:
    """Reamostragem estratificada; pesos voltam a 1/N."""
    indices = stratified_indices(particles.weights, particles.rng)
    return ParticleSet(
        positions=particles.positions[indices],
        rotvecs=particles.rotvecs[indices],
        weights=np.full(particles.size, 1.0 / particles.size),
        rng=particles.rng,
    )


def step(state: FilterState, action: Action, detections: DetectionSet) -> Tuple[FilterState, Pose6D]:
    """
    Um passo completo: predict -> update -> resample se N_eff < limiar -> estimativa.

    Frames sem feature disponivel so fazem a predicao.

    Raises:
        AllParticlesDegenerate: divergencia (chamador decide reinicializar)
    """
    config = state.config
    particles = predict(state.particles, action, config.motion_noise)
    skipped = state.skipped_updates
    resamples = state.resamples

    try:
        particles = update_weights(particles, detections, config.observation, state.model, state.K)
    except MeasurementUnavailable as error:
        skipped += 1
        logger.debug("update_pulado", frame=detections.frame, motivo=str(error))
    else:
        if effective_count(particles.weights) < config.resample_threshold:
            particles = stratified_resample(particles)
            resamples += 1

    estimate = weighted_mean_pose(particles)
    new_state = replace(
        state,
        particles=particles,
        frame=detections.frame,
        skipped_updates=skipped,
        resamples=resamples,
    )
    return new_state, estimate
