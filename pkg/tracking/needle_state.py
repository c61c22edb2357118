"""
Estado da Agulha - Pose 6D e Movimento
======================================

Pose da agulha no referencial da camera, composicao de rotacoes em
eixo-angulo, modelo de movimento com ruido e projecao de landmarks.

Rotacoes usam scipy.spatial.transform.Rotation (quaternions internamente,
com ramo de angulo pequeno tratado pela propria biblioteca).
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple, Union

import numpy as np
from scipy.spatial.transform import Rotation

from .conic_geometry import Z_MIN, CameraIntrinsics, PixelPoint, project_to_pixels
from .errors import (
    BehindCamera,
    DegenerateOrientationMean,
    InvalidCovariance,
    InvalidInput,
    UnknownLabel,
)

Vector3 = Tuple[float, float, float]

TAIL = "tail"
TIP = "tip"
BODY = "body"


def canonical_rotvec(rotvec) -> np.ndarray:
    """Reduz o angulo do vetor de rotacao a [0, pi] sem tocar vetores ja canonicos."""
    rotvec = np.asarray(rotvec, dtype=float).reshape(3)
    angle = float(np.linalg.norm(rotvec))
    if angle <= np.pi:
        return rotvec
    axis = rotvec / angle
    angle = np.fmod(angle, 2 * np.pi)
    if angle > np.pi:
        angle = 2 * np.pi - angle
        axis = -axis
    return axis * angle


def _as_vector3(values, name: str) -> Vector3:
    array = np.asarray(values, dtype=float).reshape(-1)
    if array.shape != (3,) or not np.all(np.isfinite(array)):
        raise InvalidInput(f"{name} deve ter 3 componentes finitas: {values}")
    return (float(array[0]), float(array[1]), float(array[2]))


# =============================================================================
# TIPOS
# =============================================================================
@dataclass(frozen=True)
class Pose6D:
    """
    Pose da agulha: posicao b (m) do centro do circulo e vetor de
    rotacao q (rad) levando o referencial da agulha ao da camera.
    """
    position: Vector3
    rotvec: Vector3

    def __post_init__(self):
        object.__setattr__(self, "position", _as_vector3(self.position, "position"))
        q = _as_vector3(self.rotvec, "rotvec")
        object.__setattr__(self, "rotvec", _as_vector3(canonical_rotvec(q), "rotvec"))

    @classmethod
    def from_arrays(cls, position, rotvec) -> "Pose6D":
        return cls(tuple(np.asarray(position, dtype=float)), tuple(np.asarray(rotvec, dtype=float)))

    @property
    def b(self) -> np.ndarray:
        return np.array(self.position)

    @property
    def q(self) -> np.ndarray:
        return np.array(self.rotvec)

    def rotation(self) -> Rotation:
        return Rotation.from_rotvec(self.q)

    def rotation_matrix(self) -> np.ndarray:
        return self.rotation().as_matrix()

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.b, self.q])


@dataclass(frozen=True)
class Action:
    """Incremento de movimento: translacao a_b (m) e rotacao a_q (rad)."""
    translation: Vector3 = (0.0, 0.0, 0.0)
    rotation: Vector3 = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "translation", _as_vector3(self.translation, "translation"))
        object.__setattr__(self, "rotation", _as_vector3(self.rotation, "rotation"))

    @property
    def a_b(self) -> np.ndarray:
        return np.array(self.translation)

    @property
    def a_q(self) -> np.ndarray:
        return np.array(self.rotation)

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.a_b, self.a_q])

    @classmethod
    def zero(cls) -> "Action":
        return cls()


class MotionNoise:
    """
    Ruido Gaussiano 6D [posicao (m), rotacao (rad)] do modelo de movimento.

    A covariancia e validada na construcao por decomposicao espectral;
    o fator de amostragem V * sqrt(lambda) gera ruido exatamente nulo
    quando a covariancia e zero.
    """

    def __init__(self, covariance):
        covariance = np.asarray(covariance, dtype=float)
        if covariance.shape != (6, 6) or not np.all(np.isfinite(covariance)):
            raise InvalidCovariance(f"Covariancia de movimento deve ser 6x6 finita, recebeu {covariance.shape}")
        scale = max(1.0, float(np.max(np.abs(covariance))))
        if not np.allclose(covariance, covariance.T, atol=1e-12 * scale, rtol=0.0):
            raise InvalidCovariance("Covariancia de movimento nao e simetrica")
        eigvals, eigvecs = np.linalg.eigh(covariance)
        if eigvals[0] < -1e-12 * scale:
            raise InvalidCovariance(f"Covariancia de movimento nao e PSD (autovalor {eigvals[0]:.3e})")
        self.covariance = covariance
        self._factor = eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))

    @classmethod
    def from_std(cls, position_std_m: float, rotation_std_rad: float) -> "MotionNoise":
        """Covariancia diagonal a partir de desvios padrao por eixo."""
        stds = np.array([position_std_m] * 3 + [rotation_std_rad] * 3, dtype=float)
        if np.any(stds < 0):
            raise InvalidCovariance("Desvios padrao devem ser nao negativos")
        return cls(np.diag(stds ** 2))

    @classmethod
    def zero(cls) -> "MotionNoise":
        return cls(np.zeros((6, 6)))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Amostras (count, 6); consome count*6 normais do gerador."""
        return rng.standard_normal((count, 6)) @ self._factor.T

    def __repr__(self) -> str:
        return f"MotionNoise(std={np.sqrt(np.diag(self.covariance)).round(6).tolist()})"


@dataclass(frozen=True)
class NeedleModel:
    """
    Geometria da agulha: arco de circulo de raio r no plano x-y local,
    com a cauda no angulo 0 e a ponta em `arc_extent`.
    """
    radius: float = 0.0054
    arc_extent: float = np.pi
    body_count: int = 3
    extra_landmarks: Tuple[Tuple[str, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidInput(f"Raio da agulha deve ser positivo: {self.radius}")
        if not 0 < self.arc_extent <= 2 * np.pi:
            raise InvalidInput(f"Extensao do arco deve estar em (0, 2pi]: {self.arc_extent}")
        if self.body_count < 0:
            raise InvalidInput(f"Quantidade de pontos de corpo invalida: {self.body_count}")
        object.__setattr__(self, "extra_landmarks", tuple((str(k), float(v)) for k, v in self.extra_landmarks))

    @property
    def landmark_angles(self) -> Dict[str, float]:
        angles = {TAIL: 0.0, TIP: float(self.arc_extent)}
        angles.update(dict(self.extra_landmarks))
        return angles

    def angle_of(self, label_or_angle: Union[str, float]) -> float:
        """Angulo do landmark; numeros passam direto."""
        if isinstance(label_or_angle, str):
            try:
                return self.landmark_angles[label_or_angle]
            except KeyError:
                raise UnknownLabel(f"Label desconhecido: {label_or_angle!r}") from None
        return float(label_or_angle)

    def body_registration_angles(self, count: Optional[int] = None) -> np.ndarray:
        """Angulos fixos (i+1)/(n+1) * extensao usados para registrar pontos de corpo."""
        count = self.body_count if count is None else count
        return (np.arange(count) + 1.0) / (count + 1.0) * self.arc_extent

    def local_points(self, angles) -> np.ndarray:
        angles = np.atleast_1d(np.asarray(angles, dtype=float))
        return self.radius * np.column_stack([np.cos(angles), np.sin(angles), np.zeros_like(angles)])


# =============================================================================
# OPERACOES
# =============================================================================
def compose_axis_angle(first, second) -> np.ndarray:
    """Vetor de rotacao de R(first) * R(second); aceita lotes (N, 3)."""
    return (Rotation.from_rotvec(first) * Rotation.from_rotvec(second)).as_rotvec()


def apply_motion_batch(
    positions: np.ndarray,
    rotvecs: np.ndarray,
    action: Action,
    noise: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Modelo de movimento para N particulas.

    b' = b + a_b + w_b
    q' = w_q o (a_q o q)
    """
    positions = np.asarray(positions, dtype=float).reshape(-1, 3)
    rotvecs = np.asarray(rotvecs, dtype=float).reshape(-1, 3)
    noise = np.asarray(noise, dtype=float).reshape(-1, 6)

    new_positions = positions + action.a_b + noise[:, :3]
    moved = Rotation.from_rotvec(action.a_q) * Rotation.from_rotvec(rotvecs)
    new_rotvecs = (Rotation.from_rotvec(noise[:, 3:]) * moved).as_rotvec()
    return new_positions, new_rotvecs.reshape(-1, 3)


def apply_motion(pose: Pose6D, action: Action, noise_sample=None) -> Pose6D:
    """Aplica a acao (e uma amostra de ruido 6D, opcional) a uma pose."""
    noise = np.zeros(6) if noise_sample is None else np.asarray(noise_sample, dtype=float)
    positions, rotvecs = apply_motion_batch(pose.b[None], pose.q[None], action, noise[None])
    return Pose6D.from_arrays(positions[0], rotvecs[0])


def project_landmarks_batch(
    rotations: np.ndarray,
    positions: np.ndarray,
    local_points: np.ndarray,
    K: CameraIntrinsics,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Projeta M pontos locais da agulha para N poses.

    Args:
        rotations: (N, 3, 3)
        positions: (N, 3)
        local_points: (M, 3)

    Returns:
        (pixels (N, M, 2), profundidades (N, M))
    """
    camera_points = np.einsum("nij,mj->nmi", rotations, local_points) + positions[:, None, :]
    return project_to_pixels(camera_points, K), camera_points[..., 2]


def project_landmark(
    pose: Pose6D,
    model: NeedleModel,
    label_or_angle: Union[str, float],
    K: CameraIntrinsics,
) -> PixelPoint:
    """
    Pixel do landmark (label ou angulo) na pose dada.

    Raises:
        UnknownLabel: label fora do modelo
        BehindCamera: landmark com z <= z_min
    """
    angle = model.angle_of(label_or_angle)
    pixels, depths = project_landmarks_batch(
        pose.rotation_matrix()[None], pose.b[None], model.local_points(angle), K,
    )
    if depths[0, 0] <= Z_MIN:
        raise BehindCamera(f"Landmark {label_or_angle!r} atras da camera (z = {depths[0, 0]:.4f} m)")
    return PixelPoint(float(pixels[0, 0, 0]), float(pixels[0, 0, 1]))


def weighted_mean_arrays(
    positions: np.ndarray,
    rotvecs: np.ndarray,
    weights: np.ndarray,
) -> Pose6D:
    """
    Media ponderada: aritmetica na posicao e cordal na orientacao
    (quaternions alinhados em sinal a particula de maior peso).

    Raises:
        DegenerateOrientationMean: soma de quaternions com norma < 1e-6
    """
    weights = np.asarray(weights, dtype=float)
    position = weights @ np.asarray(positions, dtype=float)

    quats = Rotation.from_rotvec(rotvecs).as_quat().reshape(-1, 4)
    reference = quats[int(np.argmax(weights))]
    signs = np.where(quats @ reference < 0, -1.0, 1.0)
    summed = weights @ (quats * signs[:, None])
    norm = float(np.linalg.norm(summed))
    if norm < 1e-6:
        raise DegenerateOrientationMean(f"Soma de quaternions quase nula ({norm:.2e})")
    rotvec = Rotation.from_quat(summed / norm).as_rotvec()
    return Pose6D.from_arrays(position, rotvec)


def weighted_mean_pose(particles) -> Pose6D:
    """Estimativa do filtro a partir de um ParticleSet."""
    return weighted_mean_arrays(particles.positions, particles.rotvecs, particles.weights)


def pose_error(estimate: Pose6D, truth: Pose6D) -> Tuple[float, float]:
    """Erro de posicao (mm) e de orientacao (graus) entre duas poses."""
    position_mm = float(np.linalg.norm(estimate.b - truth.b) * 1000.0)
    relative = estimate.rotation() * truth.rotation().inv()
    return position_mm, float(np.degrees(relative.magnitude()))


def poses_from_arrays(positions: np.ndarray, rotvecs: np.ndarray) -> Iterable[Pose6D]:
    for position, rotvec in zip(positions, rotvecs):
        yield Pose6D.from_arrays(position, rotvec)
