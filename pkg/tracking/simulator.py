"""
Simulador de Trajetorias e Deteccoes
====================================

Gera trajetorias de referencia (agulha parada ou em movimento), deteccoes
ruidosas por frame e executa experimentos completos (simular -> inicializar
-> rastrear) com varias tentativas independentes.

Ordem de consumo do gerador por frame em render_detections:
    1. body_count uniformes (angulos dos pontos de corpo)
    2. (2 + body_count) x 2 normais padrao (ruido de pixel)
    3. body_count uniformes de oclusao, so quando dropout > 0
"""

import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog
from joblib import Parallel, delayed

from .conic_geometry import Z_MIN, CameraIntrinsics, PixelPoint
from .errors import BehindCamera, GeometryError, InvalidInput, OutOfView, TrackingError
from .needle_state import TAIL, TIP, Action, NeedleModel, Pose6D, apply_motion, pose_error, project_landmarks_batch
from .observation import DetectionSet
from .particle_filter import FilterConfig, initialize_from_detections, step

logger = structlog.get_logger(__name__)

VISIBILITY_SAMPLES = 65


# =============================================================================
# TIPOS
# =============================================================================
class MotionKind(str, Enum):
    """Tipo de movimento da agulha."""
    STATIC = "static"
    MOVING = "moving"


def default_initial_pose() -> Pose6D:
    """Agulha a 8 cm da camera, inclinada."""
    return Pose6D((0.0, 0.0, 0.08), (0.6, -0.3, 0.2))


def moving_actions(
    steps: int,
    step_translation_m: float = 0.0005,
    direction: Sequence[float] = (1.0, 0.5, 0.3),
    step_rotation_rad: float = float(np.radians(0.5)),
    axis: Sequence[float] = (0.3, 1.0, 0.5),
    reverse_every: int = 40,
) -> Tuple[Action, ...]:
    """
    Acoes da trajetoria padrao: translacao ao longo de uma reta inclinada e
    rotacao em torno de um eixo fixo, invertendo o sentido a cada
    `reverse_every` passos (a agulha oscila em torno da pose inicial).
    """
    direction = np.asarray(direction, dtype=float)
    direction /= np.linalg.norm(direction)
    axis = np.asarray(axis, dtype=float)
    axis /= np.linalg.norm(axis)

    actions = []
    for index in range(steps - 1):
        sign = 1.0 if ((index + reverse_every // 2) // reverse_every) % 2 == 0 else -1.0
        actions.append(Action(
            tuple(sign * step_translation_m * direction),
            tuple(sign * step_rotation_rad * axis),
        ))
    return tuple(actions)


@dataclass(frozen=True)
class TrajectorySpec:
    """Trajetoria de referencia: T poses, acoes entre poses consecutivas."""
    kind: MotionKind = MotionKind.STATIC
    initial_pose: Pose6D = field(default_factory=default_initial_pose)
    steps: int = 300
    actions: Tuple[Action, ...] = ()
    margin_px: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "kind", MotionKind(self.kind))
        object.__setattr__(self, "actions", tuple(self.actions))
        if self.steps < 1:
            raise InvalidInput(f"Trajetoria exige T >= 1: {self.steps}")
        if self.kind is MotionKind.STATIC and self.actions:
            raise InvalidInput("Trajetoria estatica nao aceita acoes")
        if self.kind is MotionKind.MOVING and len(self.actions) != self.steps - 1:
            raise InvalidInput(f"Trajetoria com {self.steps} poses exige {self.steps - 1} acoes, recebeu {len(self.actions)}")

    @classmethod
    def static(cls, steps: int = 300, initial_pose: Optional[Pose6D] = None, margin_px: float = 10.0) -> "TrajectorySpec":
        return cls(MotionKind.STATIC, initial_pose or default_initial_pose(), steps, (), margin_px)

    @classmethod
    def moving(cls, steps: int = 300, initial_pose: Optional[Pose6D] = None, margin_px: float = 10.0, **kwargs) -> "TrajectorySpec":
        return cls(MotionKind.MOVING, initial_pose or default_initial_pose(), steps, moving_actions(steps, **kwargs), margin_px)


@dataclass(frozen=True)
class NoiseSpec:
    """Ruido de pixel das deteccoes, semente e probabilidade de oclusao por ponto de corpo."""
    sigma_px: float = 1.0
    seed: int = 0
    dropout: float = 0.0

    def __post_init__(self):
        if not self.sigma_px >= 0:
            raise InvalidInput(f"sigma_px deve ser >= 0: {self.sigma_px}")
        if not 0.0 <= self.dropout < 1.0:
            raise InvalidInput(f"dropout deve estar em [0, 1): {self.dropout}")
        if self.seed < 0:
            raise InvalidInput(f"Semente deve ser nao negativa: {self.seed}")


@dataclass(frozen=True)
class SimFrame:
    """Frame simulado com verdade de referencia e angulos reais dos pontos de corpo."""
    frame: int
    truth: Pose6D
    action: Action
    detections: DetectionSet
    body_angles: Tuple[float, ...] = ()


@dataclass(frozen=True)
class TrialOutcome:
    """Resultado de uma tentativa."""
    trial: int
    position_errors: Tuple[float, ...] = ()
    orientation_errors: Tuple[float, ...] = ()
    runtime_per_frame: float = float("nan")
    failed: bool = False
    reason: str = ""


@dataclass(frozen=True)
class ErrorSummary:
    """Media e desvio dos erros entre tentativas para uma condicao."""
    variant: str
    motion: str
    sigma: float
    pos_mean_mm: float
    pos_std_mm: float
    ori_mean_deg: float
    ori_std_deg: float
    runtime_s_per_frame: float
    failures: int
    trials: int

    @classmethod
    def from_outcomes(cls, outcomes: Sequence[TrialOutcome], variant: str = "", motion: str = "", sigma: float = float("nan")) -> "ErrorSummary":
        succeeded = [o for o in outcomes if not o.failed]
        if succeeded:
            pos = np.array([np.mean(o.position_errors) for o in succeeded])
            ori = np.array([np.mean(o.orientation_errors) for o in succeeded])
            runtime = float(np.mean([o.runtime_per_frame for o in succeeded]))
            stats = (float(pos.mean()), float(pos.std()), float(ori.mean()), float(ori.std()))
        else:
            stats = (float("nan"),) * 4
            runtime = float("nan")
        return cls(variant, motion, float(sigma), *stats, runtime, len(outcomes) - len(succeeded), len(outcomes))


# =============================================================================
# TRAJETORIA
# =============================================================================
def check_visibility(pose: Pose6D, model: NeedleModel, K: CameraIntrinsics, margin_px: float, frame: int = 0) -> None:
    """
    Raises:
        OutOfView: agulha atras da camera ou fora da imagem com margem
    """
    angles = np.linspace(0.0, model.arc_extent, VISIBILITY_SAMPLES)
    pixels, depths = project_landmarks_batch(pose.rotation_matrix()[None], pose.b[None], model.local_points(angles), K)
    if np.any(depths <= Z_MIN):
        raise OutOfView(f"Frame {frame}: agulha atras da camera")
    if not np.all(K.contains(pixels, margin_px)):
        raise OutOfView(f"Frame {frame}: agulha fora da imagem (margem {margin_px} px)")


def generate_trajectory(
    spec: TrajectorySpec,
    model: Optional[NeedleModel] = None,
    K: Optional[CameraIntrinsics] = None,
) -> List[Tuple[Pose6D, Action]]:
    """
    Poses de referencia e a acao que leva a pose anterior a cada uma
    (acao nula no frame 0). Com modelo e camera, verifica a visibilidade.

    Raises:
        OutOfView: alguma pose viola a visibilidade
    """
    pose = spec.initial_pose
    sequence = [(pose, Action.zero())]
    for action in spec.actions:
        pose = apply_motion(pose, action)
        sequence.append((pose, action))
    while len(sequence) < spec.steps:
        sequence.append((spec.initial_pose, Action.zero()))

    if model is not None and K is not None:
        for frame, (pose, _) in enumerate(sequence):
            check_visibility(pose, model, K, spec.margin_px, frame)
    return sequence


# =============================================================================
# DETECCOES
# =============================================================================
def _render(
    pose: Pose6D,
    model: NeedleModel,
    K: CameraIntrinsics,
    noise: NoiseSpec,
    rng: np.random.Generator,
    frame: int,
) -> Tuple[DetectionSet, Tuple[float, ...]]:
    count = model.body_count
    edges = np.linspace(0.0, model.arc_extent, count + 1)
    draws = rng.random(count)
    draws = np.where(draws == 0.0, 0.5, draws)
    body_angles = edges[:-1] + (edges[1:] - edges[:-1]) * draws

    angles = np.concatenate([[0.0, model.arc_extent], body_angles])
    pixels, depths = project_landmarks_batch(pose.rotation_matrix()[None], pose.b[None], model.local_points(angles), K)
    pixels, depths = pixels[0], depths[0]
    if np.any(depths <= Z_MIN):
        raise BehindCamera(f"Frame {frame}: landmark atras da camera")
    if not np.all(K.contains(pixels)):
        raise OutOfView(f"Frame {frame}: landmark fora da imagem")

    noisy = pixels + noise.sigma_px * rng.standard_normal(pixels.shape)

    keep = np.ones(count, dtype=bool)
    if noise.dropout > 0:
        keep = rng.random(count) >= noise.dropout

    detections = DetectionSet(
        frame=frame,
        labeled={TAIL: PixelPoint(*noisy[0]), TIP: PixelPoint(*noisy[1])},
        body=tuple(PixelPoint(*noisy[2 + i]) for i in range(count) if keep[i]),
    )
    return detections, tuple(float(a) for a, k in zip(body_angles, keep) if k)


def render_detections(
    pose: Pose6D,
    model: NeedleModel,
    K: CameraIntrinsics,
    noise: NoiseSpec,
    rng: np.random.Generator,
    frame: int = 0,
) -> DetectionSet:
    """
    Cauda, ponta e um ponto de corpo por terco do arco, projetados e com
    ruido N(0, sigma^2 I). Deteccoes fora da imagem nao sao recortadas.

    Raises:
        BehindCamera / OutOfView
    """
    return _render(pose, model, K, noise, rng, frame)[0]


def simulate(
    traj: TrajectorySpec,
    noise: NoiseSpec,
    model: NeedleModel,
    K: CameraIntrinsics,
    rng: Optional[np.random.Generator] = None,
) -> List[SimFrame]:
    """Sequencia completa de frames simulados."""
    rng = np.random.default_rng(noise.seed) if rng is None else rng
    frames = []
    for index, (pose, action) in enumerate(generate_trajectory(traj, model, K)):
        detections, body_angles = _render(pose, model, K, noise, rng, index)
        frames.append(SimFrame(index, pose, action, detections, body_angles))
    return frames


# =============================================================================
# EXPERIMENTO
# =============================================================================
def trial_seed(base_seed: int, trial: int) -> np.random.SeedSequence:
    """Semente da tentativa: SeedSequence(base, spawn_key=(trial,))."""
    return np.random.SeedSequence(base_seed, spawn_key=(trial,))


def run_trial(
    trial: int,
    traj: TrajectorySpec,
    noise: NoiseSpec,
    model: NeedleModel,
    K: CameraIntrinsics,
    filter_config: FilterConfig,
) -> TrialOutcome:
    """Simula, inicializa pelas hipoteses reconstruidas do frame 0 e rastreia os demais frames."""
    frames = simulate(traj, noise, model, K, rng=np.random.default_rng(trial_seed(noise.seed, trial)))
    if len(frames) < 2:
        raise InvalidInput("Experimento exige ao menos 2 frames")

    config = replace(filter_config, seed=int(trial_seed(filter_config.seed, trial).generate_state(1)[0]))

    try:
        state = initialize_from_detections(frames[0].detections, config, model, K)
    except (GeometryError, InvalidInput) as error:
        logger.warning("inicializacao_falhou", tentativa=trial, erro=str(error))
        return TrialOutcome(trial, failed=True, reason=f"inicializacao: {error}")

    position_errors, orientation_errors = [], []
    started = time.perf_counter()
    try:
        for frame in frames[1:]:
            state, estimate = step(state, frame.action, frame.detections)
            pos_err, ori_err = pose_error(estimate, frame.truth)
            position_errors.append(pos_err)
            orientation_errors.append(ori_err)
    except TrackingError as error:
        logger.warning("tentativa_divergiu", tentativa=trial, frame=frame.frame, erro=str(error))
        return TrialOutcome(trial, failed=True, reason=f"frame {frame.frame}: {error}")
    elapsed = time.perf_counter() - started

    return TrialOutcome(
        trial=trial,
        position_errors=tuple(position_errors),
        orientation_errors=tuple(orientation_errors),
        runtime_per_frame=elapsed / (len(frames) - 1),
    )


def run_experiment(
    traj: TrajectorySpec,
    noise: NoiseSpec,
    model: NeedleModel,
    K: CameraIntrinsics,
    filter_config: FilterConfig,
    trials: int,
    n_jobs: int = 1,
    variant: str = "",
    motion: str = "",
) -> ErrorSummary:
    """
    Executa `trials` tentativas independentes (em paralelo com joblib quando
    n_jobs != 1) e resume os erros por tentativa.
    """
    if trials < 1:
        raise InvalidInput(f"Quantidade de tentativas deve ser >= 1: {trials}")

    outcomes = Parallel(n_jobs=n_jobs)(
        delayed(run_trial)(trial, traj, noise, model, K, filter_config) for trial in range(trials)
    )
    summary = ErrorSummary.from_outcomes(
        outcomes,
        variant=variant or filter_config.observation.variant.value,
        motion=motion or traj.kind.value,
        sigma=noise.sigma_px,
    )
    logger.info(
        "experimento_concluido",
        variante=summary.variant,
        movimento=summary.motion,
        sigma=summary.sigma,
        erro_pos_mm=round(summary.pos_mean_mm, 3),
        erro_ori_deg=round(summary.ori_mean_deg, 3),
        falhas=summary.failures,
    )
    return summary
