"""
Modelos de Observacao
=====================

Features de observacao por frame e verossimilhancas usadas pelo filtro:

    Point  - landmark rotulado (cauda/ponta) projetado, ruido Gaussiano
    EM     - residuo da conica projetada nos pontos detectados
             (variancia propagada do ruido de pixel)
    EP     - parametros da elipse ajustada vs. elipse projetada
    Pose   - pose reconstruida da elipse + cauda (baseline)
    FPS    - todos os pontos com registro 3D fixo (baseline)

Toda avaliacao e vetorizada no eixo das particulas: uma particula
invalida (atras da camera, projecao degenerada) recebe log-densidade
-inf em vez de levantar excecao.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy.optimize import least_squares
from scipy.spatial.transform import Rotation
from scipy.stats import multivariate_normal, norm

from .conic_geometry import (
    STATUS_OK,
    Z_MIN,
    CameraIntrinsics,
    EllipseParams,
    PixelPoint,
    circle_pose_candidates,
    coeffs_to_params,
    coeffs_to_params_batch,
    conic_residual_batch,
    fit_ellipse,
    project_circle,
    project_circle_batch,
    reconstruct_circle_pose,
    wrap_half_turn,
)
from .errors import (
    AmbiguityUnresolved,
    GeometryError,
    InvalidCovariance,
    InvalidInput,
    MeasurementUnavailable,
    MissingLabel,
    UnknownLabel,
)
from .needle_state import BODY, TAIL, TIP, NeedleModel, Pose6D, project_landmarks_batch

logger = structlog.get_logger(__name__)

VARIANCE_FLOOR = 1e-12

# Refinamento da pose inicial
FAR_RESIDUAL_PX = 1e6
REFINE_SCALE = np.array([1e-3] * 3 + [1e-2] * 3)
MAX_INFORMATION_CONDITION = 1e12


# =============================================================================
# TIPOS
# =============================================================================
class ObservationVariant(str, Enum):
    """Combinacoes de features comparadas no benchmark."""
    POSE = "Pose"
    FPS = "FPS"
    ONE_POINT = "OnePoint"
    TWO_POINTS = "TwoPoints"
    ONE_POINT_EP = "OnePointEP"
    TWO_POINTS_EP = "TwoPointsEP"
    ONE_POINT_EM = "OnePointEM"
    TWO_POINTS_EM = "TwoPointsEM"

    @property
    def point_labels(self) -> Tuple[str, ...]:
        """Landmarks avaliados com o termo Point."""
        if self in (ObservationVariant.POSE, ObservationVariant.FPS):
            return ()
        if self.value.startswith("Two"):
            return (TAIL, TIP)
        return (TAIL,)

    @property
    def required_labels(self) -> Tuple[str, ...]:
        if self is ObservationVariant.POSE:
            return (TAIL,)
        return self.point_labels

    @property
    def uses_em(self) -> bool:
        return self.value.endswith("EM")

    @property
    def uses_ep(self) -> bool:
        return self.value.endswith("EP")


@dataclass(frozen=True)
class DetectionSet:
    """Pontos detectados em um frame: rotulados (tail/tip) e de corpo."""
    frame: int
    labeled: Mapping[str, PixelPoint] = field(default_factory=dict)
    body: Tuple[PixelPoint, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "labeled", dict(self.labeled))
        object.__setattr__(self, "body", tuple(self.body))
        if BODY in self.labeled:
            raise InvalidInput(f"'{BODY}' e reservado para pontos nao rotulados")
        for point in list(self.labeled.values()) + list(self.body):
            if not isinstance(point, PixelPoint):
                raise InvalidInput(f"Deteccao deve ser PixelPoint: {point!r}")
        if self.count < 1:
            raise InvalidInput(f"Frame {self.frame} sem deteccoes")

    @property
    def count(self) -> int:
        return len(self.labeled) + len(self.body)

    def point(self, label: str) -> PixelPoint:
        try:
            return self.labeled[label]
        except KeyError:
            raise MissingLabel(f"Frame {self.frame} sem o label {label!r}") from None

    def all_points(self) -> List[PixelPoint]:
        return list(self.labeled.values()) + list(self.body)

    def body_labels(self) -> List[str]:
        return [f"{BODY}_{index + 1}" for index in range(len(self.body))]


@dataclass(frozen=True)
class ObservationNoiseConfig:
    """
    Ruido das observacoes.

    point_sigma_px vale para todo label sem valor proprio em label_sigma_px;
    ep_std e pose_std sao desvios padrao das covariancias diagonais de EP
    (px, px, px, px, rad) e Pose (m x3, rad x3).
    """
    point_sigma_px: float = 1.0
    label_sigma_px: Tuple[Tuple[str, float], ...] = ()
    ep_std: Tuple[float, ...] = (2.0, 2.0, 4.0, 4.0, float(np.radians(5.0)))
    pose_std: Tuple[float, ...] = (0.005, 0.005, 0.005) + (float(np.radians(5.0)),) * 3

    def __post_init__(self):
        object.__setattr__(self, "label_sigma_px", tuple((str(k), float(v)) for k, v in self.label_sigma_px))
        object.__setattr__(self, "ep_std", tuple(float(v) for v in self.ep_std))
        object.__setattr__(self, "pose_std", tuple(float(v) for v in self.pose_std))
        sigmas = [self.point_sigma_px] + [v for _, v in self.label_sigma_px]
        if min(sigmas) <= 0:
            raise InvalidCovariance(f"Desvios de pixel devem ser positivos: {sigmas}")
        if len(self.ep_std) != 5 or min(self.ep_std) <= 0:
            raise InvalidCovariance(f"ep_std precisa de 5 valores positivos: {self.ep_std}")
        if len(self.pose_std) != 6 or min(self.pose_std) <= 0:
            raise InvalidCovariance(f"pose_std precisa de 6 valores positivos: {self.pose_std}")

    def sigma_for(self, label: str) -> float:
        return dict(self.label_sigma_px).get(label, self.point_sigma_px)

    def point_covariance(self, label: str) -> np.ndarray:
        return self.sigma_for(label) ** 2 * np.eye(2)

    @property
    def ep_covariance(self) -> np.ndarray:
        return np.diag(np.square(self.ep_std))

    @property
    def pose_covariance(self) -> np.ndarray:
        return np.diag(np.square(self.pose_std))


@dataclass(frozen=True)
class ObservationModelSpec:
    """Variante de observacao e seu ruido."""
    variant: ObservationVariant = ObservationVariant.TWO_POINTS_EM
    noise: ObservationNoiseConfig = field(default_factory=ObservationNoiseConfig)

    def __post_init__(self):
        object.__setattr__(self, "variant", ObservationVariant(self.variant))


# =============================================================================
# LOTE DE POSES
# =============================================================================
class PoseBatch:
    """Poses de N particulas com rotacoes ja materializadas."""

    def __init__(self, positions: np.ndarray, rotvecs: np.ndarray):
        self.positions = np.asarray(positions, dtype=float).reshape(-1, 3)
        self.rotvecs = np.asarray(rotvecs, dtype=float).reshape(-1, 3)
        self.rotation = Rotation.from_rotvec(self.rotvecs)
        self.matrices = self.rotation.as_matrix().reshape(-1, 3, 3)

    @classmethod
    def from_poses(cls, poses: Sequence[Pose6D]) -> "PoseBatch":
        return cls(np.vstack([p.b for p in poses]), np.vstack([p.q for p in poses]))

    @property
    def size(self) -> int:
        return len(self.positions)


def _gaussian_logpdf(residuals: np.ndarray, covariance: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Log-densidade Gaussiana linha a linha; linhas invalidas viram -inf."""
    safe = np.where(valid[:, None], residuals, 0.0)
    values = np.atleast_1d(multivariate_normal.logpdf(safe, mean=np.zeros(covariance.shape[0]), cov=covariance))
    return np.where(valid, values.reshape(len(safe)), -np.inf)


# =============================================================================
# TERMOS VETORIZADOS
# =============================================================================
def point_terms_batch(
    batch: PoseBatch,
    model: NeedleModel,
    K: CameraIntrinsics,
    angles: np.ndarray,
    observed: np.ndarray,
    sigmas: np.ndarray,
) -> np.ndarray:
    """Soma dos termos Point de M landmarks para N poses."""
    if len(angles) == 0:
        return np.zeros(batch.size)
    pixels, depths = project_landmarks_batch(batch.matrices, batch.positions, model.local_points(angles), K)
    valid = np.all(depths > Z_MIN, axis=1)
    offsets = np.where(valid[:, None, None], pixels - observed[None], 0.0)
    terms = norm.logpdf(offsets, scale=np.asarray(sigmas)[None, :, None])
    return np.where(valid, terms.sum(axis=(1, 2)), -np.inf)


def em_variance_batch(coeffs: np.ndarray, points: np.ndarray, sigma: float) -> np.ndarray:
    """Variancia propagada do residuo da conica, (N, M)."""
    a, b, c, d, e = (coeffs[:, i:i + 1] for i in range(5))
    x, y = points[None, :, 0], points[None, :, 1]
    grad_x = a * x + b * y + d
    grad_y = b * x + c * y + e
    return np.maximum(4.0 * (grad_x ** 2 + grad_y ** 2) * sigma ** 2, VARIANCE_FLOOR)


def em_terms_batch(coeffs: np.ndarray, valid: np.ndarray, points: np.ndarray, sigma: float) -> np.ndarray:
    """Soma dos termos EM de M pontos para N conicas."""
    if len(points) == 0:
        return np.where(valid, 0.0, -np.inf)
    safe = np.where(valid[:, None], coeffs, 0.0)
    residuals = conic_residual_batch(safe, points)
    variances = em_variance_batch(safe, points, sigma)
    terms = norm.logpdf(residuals, scale=np.sqrt(variances)).sum(axis=1)
    return np.where(valid, terms, -np.inf)


def ep_terms_batch(coeffs: np.ndarray, valid: np.ndarray, observed: EllipseParams, covariance: np.ndarray) -> np.ndarray:
    """Termo EP: parametros observados vs. projetados para N conicas."""
    # Linhas invalidas recebem um circulo qualquer para nao gerar NaN
    placeholder = np.array([-1.0, 0.0, -1.0, 0.0, 0.0])
    params, status = coeffs_to_params_batch(np.where(valid[:, None], coeffs, placeholder))
    ok = valid & (status == STATUS_OK) & (params[:, 3] > 0)
    residuals = observed.as_array()[None] - params
    residuals[:, 4] = wrap_half_turn(residuals[:, 4])
    return _gaussian_logpdf(residuals, covariance, ok)


def pose_terms_batch(batch: PoseBatch, reconstructed: Pose6D, covariance: np.ndarray) -> np.ndarray:
    """Termo Pose: [delta b; delta q] contra a pose reconstruida."""
    delta_b = batch.positions - reconstructed.b
    delta_q = (batch.rotation * reconstructed.rotation().inv()).as_rotvec().reshape(-1, 3)
    return _gaussian_logpdf(np.hstack([delta_b, delta_q]), covariance, np.ones(batch.size, dtype=bool))


# =============================================================================
# FEATURES DO FRAME
# =============================================================================
def ep_observation(detections: DetectionSet) -> EllipseParams:
    """
    Elipse ajustada a todos os pontos detectados.

    Raises:
        InvalidInput: menos de 5 pontos
        DegenerateConfiguration / NotAnEllipse / NumericalFailure
    """
    return coeffs_to_params(fit_ellipse(detections.all_points()))


def reconstruct_from_detections(
    detections: DetectionSet,
    model: NeedleModel,
    K: CameraIntrinsics,
    ambiguity_tolerance_px: float = 0.5,
) -> List[Pose6D]:
    """
    Poses reconstruidas da elipse ajustada + cauda, melhor primeiro.

    Uma unica pose quando a reconstrucao e inequivoca; quando ha empate
    dentro da tolerancia, todos os candidatos empatados.
    """
    anchor = detections.point(TAIL)
    coeffs = fit_ellipse(detections.all_points())
    known = model.landmark_angles
    landmarks = {known[label]: pixel for label, pixel in detections.labeled.items() if label != TAIL and label in known}
    try:
        pose = reconstruct_circle_pose(
            coeffs, model.radius, K, anchor, known[TAIL],
            landmarks=landmarks, arc_points=detections.body, arc_extent=model.arc_extent,
            ambiguity_tolerance_px=ambiguity_tolerance_px,
        )
    except AmbiguityUnresolved as error:
        best = error.candidates[0].score
        return [c.pose for c in error.candidates if c.score - best < ambiguity_tolerance_px]
    return [pose]


# =============================================================================
# HIPOTESES INICIAIS
# =============================================================================
@dataclass(frozen=True)
class InitialHypothesis:
    """
    Pose refinada para iniciar o filtro.

    covariance e a covariancia 6x6 [posicao (m), rotacao (rad)] do ajuste,
    no mesmo referencial do ruido de movimento; None quando o ajuste nao
    a determina.
    """
    pose: Pose6D
    score: float
    covariance: Optional[np.ndarray] = None


def _perturbed(base: Pose6D, delta: np.ndarray) -> Tuple[np.ndarray, Rotation]:
    return base.b + delta[:3], Rotation.from_rotvec(delta[3:]) * base.rotation()


def refinement_residuals(
    pose: Pose6D,
    detections: DetectionSet,
    model: NeedleModel,
    K: CameraIntrinsics,
) -> np.ndarray:
    """
    Residuos (px) de uma pose contra as deteccoes do frame: deslocamento
    dos landmarks rotulados e distancia aproximada (residuo da conica
    sobre 2|grad|) dos pontos de corpo a elipse projetada.
    """
    known = model.landmark_angles
    labels = [label for label in detections.labeled if label in known]
    pixels, depths = project_landmarks_batch(
        pose.rotation_matrix()[None], pose.b[None], model.local_points([known[label] for label in labels]), K,
    )
    if np.any(depths <= Z_MIN):
        return np.full(2 * len(labels) + len(detections.body), FAR_RESIDUAL_PX)
    observed = np.array([detections.labeled[label].as_array() for label in labels]).reshape(-1, 2)
    residuals = [(pixels[0] - observed).ravel()]

    if detections.body:
        points = np.array([p.as_array() for p in detections.body])
        try:
            coeffs = project_circle(pose, model.radius, K).as_array()[None]
        except GeometryError:
            return np.full(2 * len(labels) + len(points), FAR_RESIDUAL_PX)
        distances = conic_residual_batch(coeffs, points)[0] / np.sqrt(em_variance_batch(coeffs, points, 1.0)[0])
        residuals.append(distances)
    return np.concatenate(residuals)


def refine_pose(
    pose: Pose6D,
    detections: DetectionSet,
    model: NeedleModel,
    K: CameraIntrinsics,
    sigma_px: float,
) -> InitialHypothesis:
    """
    Minimos quadrados (scipy) da pose inicial contra as deteccoes.

    A covariancia e sigma^2 (J^T J)^-1 no ponto final; fica None quando
    J^T J e mal condicionada. Se a otimizacao falhar, a pose de entrada
    volta com seu residuo e sem covariancia.
    """
    def residuals(delta):
        position, rotation = _perturbed(pose, delta)
        return refinement_residuals(Pose6D.from_arrays(position, rotation.as_rotvec()), detections, model, K)

    start = residuals(np.zeros(6))
    start_score = float(np.sqrt(np.mean(start ** 2)))
    try:
        result = least_squares(residuals, np.zeros(6), x_scale=REFINE_SCALE)
    except (ValueError, np.linalg.LinAlgError) as error:
        logger.debug("refinamento_falhou", erro=str(error))
        return InitialHypothesis(pose, start_score)

    score = float(np.sqrt(np.mean(result.fun ** 2)))
    if not np.isfinite(score) or score > start_score:
        return InitialHypothesis(pose, start_score)

    position, rotation = _perturbed(pose, result.x)
    refined = Pose6D.from_arrays(position, rotation.as_rotvec())
    information = result.jac.T @ result.jac
    covariance = None
    if len(result.fun) >= 6 and np.linalg.cond(information) < MAX_INFORMATION_CONDITION:
        covariance = sigma_px ** 2 * np.linalg.inv(information)
        covariance = 0.5 * (covariance + covariance.T)
    return InitialHypothesis(refined, score, covariance)


def _distinct(pose: Pose6D, others: Sequence[InitialHypothesis]) -> bool:
    for other in others:
        position_gap = np.linalg.norm(pose.b - other.pose.b)
        rotation_gap = (pose.rotation() * other.pose.rotation().inv()).magnitude()
        if position_gap < 1e-5 and rotation_gap < 1e-4:
            return False
    return True


def initial_hypotheses(
    detections: DetectionSet,
    model: NeedleModel,
    K: CameraIntrinsics,
    sigma_px: float,
    tolerance_px: float,
) -> List[InitialHypothesis]:
    """
    Hipoteses para iniciar o filtro, melhor primeiro.

    Todos os candidatos da reconstrucao (as duas orientacoes do plano e os
    dois sentidos da normal) sao refinados contra as deteccoes; ficam os
    distintos cujo residuo RMS esta a menos de `tolerance_px` do melhor.
    As duas poses espelhadas projetam a mesma elipse e so se separam pela
    perspectiva nos landmarks, por isso ambas costumam ficar.

    Raises:
        MissingLabel: sem cauda
        InvalidInput / GeometryError: reconstrucao impossivel
    """
    anchor = detections.point(TAIL)
    coeffs = fit_ellipse(detections.all_points())
    known = model.landmark_angles
    landmarks = {known[label]: pixel for label, pixel in detections.labeled.items() if label != TAIL and label in known}
    candidates = circle_pose_candidates(
        coeffs, model.radius, K, anchor, known[TAIL],
        landmarks=landmarks, arc_points=detections.body, arc_extent=model.arc_extent,
    )

    refined: List[InitialHypothesis] = []
    for candidate in candidates:
        hypothesis = refine_pose(candidate.pose, detections, model, K, sigma_px)
        if _distinct(hypothesis.pose, refined):
            refined.append(hypothesis)
    refined.sort(key=lambda hypothesis: hypothesis.score)

    best = refined[0].score
    kept = [hypothesis for hypothesis in refined if hypothesis.score - best < tolerance_px]
    logger.debug(
        "hipoteses_iniciais",
        frame=detections.frame,
        candidatos=len(refined),
        mantidas=len(kept),
        residuos=[round(h.score, 3) for h in refined],
    )
    return kept


def fps_registration(model: NeedleModel, detections: DetectionSet) -> Dict[str, float]:
    """Registro fixo: labels no angulo do modelo, corpo em (i+1)/(n+1) do arco."""
    registration = {label: model.angle_of(label) for label in detections.labeled}
    angles = model.body_registration_angles(len(detections.body))
    registration.update(zip(detections.body_labels(), angles))
    return registration


@dataclass
class PreparedObservation:
    """Features de um frame, calculadas uma vez e avaliadas para todas as particulas."""
    spec: ObservationModelSpec
    point_angles: np.ndarray = field(default_factory=lambda: np.zeros(0))
    point_pixels: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    point_sigmas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    em_points: Optional[np.ndarray] = None
    em_sigma: float = 1.0
    ep_obs: Optional[EllipseParams] = None
    reconstructed: Optional[Pose6D] = None


def _point_rows(labels: Sequence[str], pixels: Sequence[PixelPoint], angles: Mapping[str, float], noise):
    sigma_labels = [BODY if label.startswith(f"{BODY}_") else label for label in labels]
    return (
        np.array([angles[label] for label in labels], dtype=float),
        np.array([p.as_array() for p in pixels], dtype=float).reshape(-1, 2),
        np.array([noise.sigma_for(label) for label in sigma_labels], dtype=float),
    )


def prepare_observation(
    spec: ObservationModelSpec,
    detections: DetectionSet,
    model: NeedleModel,
    K: CameraIntrinsics,
    assumed_angles: Optional[Mapping[str, float]] = None,
) -> PreparedObservation:
    """
    Monta as features do frame para a variante.

    Raises:
        MissingLabel: falta label exigido pela variante
        UnknownLabel: label sem angulo no modelo
        MeasurementUnavailable: ajuste de elipse / reconstrucao falhou
    """
    variant = spec.variant
    noise = spec.noise
    for label in variant.required_labels:
        detections.point(label)

    prepared = PreparedObservation(spec=spec)

    if variant is ObservationVariant.FPS:
        registration = dict(assumed_angles) if assumed_angles is not None else fps_registration(model, detections)
        labels = list(detections.labeled) + detections.body_labels()
        missing = [label for label in labels if label not in registration]
        if missing:
            raise UnknownLabel(f"Deteccoes sem angulo registrado: {missing}")
        prepared.point_angles, prepared.point_pixels, prepared.point_sigmas = _point_rows(
            labels, detections.all_points(), registration, noise,
        )
        return prepared

    if variant is ObservationVariant.POSE:
        try:
            prepared.reconstructed = reconstruct_from_detections(detections, model, K)[0]
        except (GeometryError, InvalidInput) as error:
            raise MeasurementUnavailable(f"Frame {detections.frame}: reconstrucao falhou ({error})") from error
        return prepared

    point_labels = list(variant.point_labels)
    angles = {label: model.angle_of(label) for label in point_labels}
    prepared.point_angles, prepared.point_pixels, prepared.point_sigmas = _point_rows(
        point_labels, [detections.point(label) for label in point_labels], angles, noise,
    )

    if variant.uses_em:
        remaining = [p for label, p in detections.labeled.items() if label not in point_labels]
        remaining += list(detections.body)
        prepared.em_points = np.array([p.as_array() for p in remaining], dtype=float).reshape(-1, 2)
        prepared.em_sigma = noise.sigma_for(BODY)

    if variant.uses_ep:
        try:
            prepared.ep_obs = ep_observation(detections)
        except (GeometryError, InvalidInput) as error:
            raise MeasurementUnavailable(f"Frame {detections.frame}: ajuste de elipse falhou ({error})") from error

    return prepared


def batch_log_likelihood(
    prepared: PreparedObservation,
    batch: PoseBatch,
    model: NeedleModel,
    K: CameraIntrinsics,
) -> np.ndarray:
    """Log-verossimilhanca da variante para N poses, (N,)."""
    noise = prepared.spec.noise

    if prepared.reconstructed is not None:
        return pose_terms_batch(batch, prepared.reconstructed, noise.pose_covariance)

    total = point_terms_batch(
        batch, model, K, prepared.point_angles, prepared.point_pixels, prepared.point_sigmas,
    )
    if prepared.em_points is not None or prepared.ep_obs is not None:
        coeffs, valid = project_circle_batch(batch.matrices, batch.positions, model.radius, K)
        if prepared.em_points is not None:
            total = total + em_terms_batch(coeffs, valid, prepared.em_points, prepared.em_sigma)
        if prepared.ep_obs is not None:
            total = total + ep_terms_batch(coeffs, valid, prepared.ep_obs, noise.ep_covariance)
    return total


# =============================================================================
# OPERACOES POR POSE
# =============================================================================
def point_log_likelihood(
    pose: Pose6D,
    model: NeedleModel,
    K: CameraIntrinsics,
    detection: PixelPoint,
    label: str,
    noise: ObservationNoiseConfig,
) -> float:
    """Log-densidade do pixel detectado dado o landmark projetado."""
    angle = model.angle_of(label)
    batch = PoseBatch.from_poses([pose])
    sigma = noise.sigma_for(label)
    return float(point_terms_batch(batch, model, K, np.array([angle]), detection.as_array()[None], np.array([sigma]))[0])


def em_residual(pose: Pose6D, model: NeedleModel, K: CameraIntrinsics, point: PixelPoint) -> float:
    """Residuo da conica projetada no ponto detectado."""
    coeffs = project_circle(pose, model.radius, K)
    return float(conic_residual_batch(coeffs.as_array()[None], point.as_array()[None])[0, 0])


def em_variance(pose: Pose6D, model: NeedleModel, K: CameraIntrinsics, point: PixelPoint, sigma: float) -> float:
    """Variancia do residuo EM propagada do ruido de pixel (x_hat ~ x)."""
    coeffs = project_circle(pose, model.radius, K)
    return float(em_variance_batch(coeffs.as_array()[None], point.as_array()[None], sigma)[0, 0])


def em_log_likelihood(
    pose: Pose6D,
    model: NeedleModel,
    K: CameraIntrinsics,
    points: Sequence[PixelPoint],
    sigma: float,
) -> float:
    """Soma dos termos EM (pontos independentes)."""
    if not points:
        raise InvalidInput("Termo EM exige pelo menos um ponto")
    coeffs = project_circle(pose, model.radius, K)
    pts = np.array([p.as_array() for p in points], dtype=float)
    return float(em_terms_batch(coeffs.as_array()[None], np.array([True]), pts, sigma)[0])


def ep_log_likelihood(
    pose: Pose6D,
    model: NeedleModel,
    K: CameraIntrinsics,
    obs: EllipseParams,
    covariance=None,
) -> float:
    """Log-densidade do residuo entre elipse observada e projetada."""
    covariance = ObservationNoiseConfig().ep_covariance if covariance is None else np.asarray(covariance, dtype=float)
    coeffs = project_circle(pose, model.radius, K)
    return float(ep_terms_batch(coeffs.as_array()[None], np.array([True]), obs, covariance)[0])


def pose_baseline_log_likelihood(pose: Pose6D, reconstructed: Pose6D, covariance=None) -> float:
    """Log-densidade Gaussiana em [delta b; delta q]."""
    covariance = ObservationNoiseConfig().pose_covariance if covariance is None else np.asarray(covariance, dtype=float)
    return float(pose_terms_batch(PoseBatch.from_poses([pose]), reconstructed, covariance)[0])


def fps_log_likelihood(
    pose: Pose6D,
    model: NeedleModel,
    K: CameraIntrinsics,
    detections: DetectionSet,
    assumed_angles: Optional[Mapping[str, float]] = None,
    noise: Optional[ObservationNoiseConfig] = None,
) -> float:
    """Termos Point de todas as deteccoes com registro fixo de angulos."""
    spec = ObservationModelSpec(ObservationVariant.FPS, noise or ObservationNoiseConfig())
    prepared = prepare_observation(spec, detections, model, K, assumed_angles=assumed_angles)
    return float(batch_log_likelihood(prepared, PoseBatch.from_poses([pose]), model, K)[0])


def combined_log_likelihood(
    spec: ObservationModelSpec,
    pose: Pose6D,
    model: NeedleModel,
    K: CameraIntrinsics,
    detections: DetectionSet,
) -> float:
    """Soma dos termos da variante para uma pose."""
    prepared = prepare_observation(spec, detections, model, K)
    return float(batch_log_likelihood(prepared, PoseBatch.from_poses([pose]), model, K)[0])
