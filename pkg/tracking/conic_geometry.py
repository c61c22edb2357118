"""
Geometria Projetiva de Circulos e Elipses
=========================================

Responsabilidade TECNICA:
- Ajuste de elipse a pontos detectados (forma geral com termo constante 1)
- Conversao coeficientes <-> parametros (centro, largura, altura, rotacao)
- Projecao de um circulo 3D na imagem (cone de projecao)
- Reconstrucao da pose do circulo a partir da elipse projetada

Representacao interna: conica homogenea 3x3
    [[a, b, d],
     [b, c, e],
     [d, e, f]]
A normalizacao para f = 1 so acontece na fronteira do modulo.

Todas as funcoes sao puras; os valores retornados sao imutaveis.
"""

from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy.spatial.transform import Rotation

from .errors import (
    AmbiguityUnresolved,
    BehindCamera,
    DegenerateConfiguration,
    DegenerateNormalization,
    InvalidInput,
    InvalidParams,
    NotAnEllipse,
    NumericalFailure,
)

if TYPE_CHECKING:
    from .needle_state import Pose6D

logger = structlog.get_logger(__name__)

# Profundidade minima (m) de qualquer ponto do circulo
Z_MIN = 1e-3
# |f| relativo ao maior coeficiente abaixo disso -> conica pela origem do pixel
NORMALIZATION_TOL = 1e-12
# Argumentos de raiz em [-SQRT_CLAMP, 0) viram 0
SQRT_CLAMP = 1e-12
MAX_CONDITION = 1e12
# Amostras do arco usadas para distancia ponto-arco na reconstrucao
ARC_SAMPLES = 721

STATUS_OK = 0
STATUS_NOT_ELLIPSE = 1
STATUS_NUMERICAL = 2


# =============================================================================
# TIPOS
# =============================================================================
@dataclass(frozen=True)
class CameraIntrinsics:
    """Camera pinhole sem distorcao (fx, fy, cx, cy em pixels)."""
    fx: float
    fy: float
    cx: float
    cy: float
    width: int = 256
    height: int = 256

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise InvalidInput(f"Focais devem ser positivas: fx={self.fx}, fy={self.fy}")
        if not (self.width > 0 and self.height > 0):
            raise InvalidInput(f"Tamanho de imagem invalido: {self.width}x{self.height}")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([
            [self.fx, 0.0, self.cx],
            [0.0, self.fy, self.cy],
            [0.0, 0.0, 1.0],
        ])

    @property
    def inverse(self) -> np.ndarray:
        return np.array([
            [1.0 / self.fx, 0.0, -self.cx / self.fx],
            [0.0, 1.0 / self.fy, -self.cy / self.fy],
            [0.0, 0.0, 1.0],
        ])

    def contains(self, pixels: np.ndarray, margin: float = 0.0) -> np.ndarray:
        """Mascara de pixels dentro da imagem com margem."""
        pixels = np.asarray(pixels, dtype=float)
        x, y = pixels[..., 0], pixels[..., 1]
        return (
            (x >= margin) & (x <= self.width - margin)
            & (y >= margin) & (y <= self.height - margin)
        )


@dataclass(frozen=True)
class PixelPoint:
    """Coordenada de pixel; pode estar fora da imagem (nao e recortada)."""
    x: float
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise InvalidInput(f"Pixel com coordenada nao finita: ({self.x}, {self.y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class EllipseCoefficients:
    """Coeficientes de a*x^2 + 2b*xy + c*y^2 + 2d*x + 2e*y + 1 = 0."""
    a: float
    b: float
    c: float
    d: float
    e: float

    @property
    def discriminant(self) -> float:
        return self.b * self.b - self.a * self.c

    @property
    def is_ellipse(self) -> bool:
        return bool(self.discriminant < 0)

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d, self.e], dtype=float)

    @classmethod
    def from_array(cls, values) -> "EllipseCoefficients":
        a, b, c, d, e = (float(v) for v in values)
        return cls(a, b, c, d, e)


@dataclass(frozen=True)
class EllipseParams:
    """
    Elipse em forma (centro, largura, altura, rotacao).

    Largura e altura sao semi-eixos em pixels. A forma e sempre canonica:
    largura >= altura e rotacao em [-pi/2, pi/2).
    """
    center: PixelPoint
    width: float
    height: float
    rotation: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise InvalidParams(f"Eixos devem ser positivos: w={self.width}, h={self.height}")
        width, height, rotation = self.width, self.height, self.rotation
        if width < height:
            width, height = height, width
            rotation = rotation + np.pi / 2
        object.__setattr__(self, "width", float(width))
        object.__setattr__(self, "height", float(height))
        object.__setattr__(self, "rotation", float(wrap_half_turn(rotation)))

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.center.x, self.center.y, self.width, self.height, self.rotation],
            dtype=float,
        )

    @classmethod
    def from_array(cls, values) -> "EllipseParams":
        cx, cy, w, h, theta = (float(v) for v in values)
        return cls(PixelPoint(cx, cy), w, h, theta)


def wrap_half_turn(angle):
    """Reduz angulos ao intervalo [-pi/2, pi/2) (periodo pi)."""
    return np.mod(np.asarray(angle, dtype=float) + np.pi / 2, np.pi) - np.pi / 2


# =============================================================================
# CONVERSOES DE REPRESENTACAO
# =============================================================================
def conic_matrix(coeffs: EllipseCoefficients) -> np.ndarray:
    """Matriz homogenea 3x3 da conica normalizada."""
    a, b, c, d, e = coeffs.as_array()
    return np.array([[a, b, d], [b, c, e], [d, e, 1.0]])


def _normalize_conics(conics: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Normaliza conicas homogeneas (N, 3, 3) para termo constante 1.

    Returns:
        (coeficientes (N, 5), mascara de normalizacao valida)
    """
    conics = np.asarray(conics, dtype=float)
    scale = np.max(np.abs(conics), axis=(1, 2))
    constant = conics[:, 2, 2]
    valid = np.abs(constant) >= NORMALIZATION_TOL * scale
    safe = np.where(valid, constant, 1.0)
    coeffs = np.stack([
        conics[:, 0, 0], conics[:, 0, 1], conics[:, 1, 1],
        conics[:, 0, 2], conics[:, 1, 2],
    ], axis=1) / safe[:, None]
    return coeffs, valid


def coeffs_from_matrix(conic: np.ndarray) -> EllipseCoefficients:
    """
    Converte a matriz homogenea para a forma com termo constante 1.

    Raises:
        DegenerateNormalization: conica passa pela origem do pixel
    """
    coeffs, valid = _normalize_conics(np.asarray(conic, dtype=float)[None])
    if not valid[0]:
        raise DegenerateNormalization("Conica passa pela origem do pixel; termo constante ~ 0")
    return EllipseCoefficients.from_array(coeffs[0])


# =============================================================================
# AJUSTE DE ELIPSE
# =============================================================================
def _as_point_array(points) -> np.ndarray:
    rows = [p.as_array() if isinstance(p, PixelPoint) else np.asarray(p, dtype=float) for p in points]
    if not rows:
        return np.zeros((0, 2))
    return np.vstack(rows).reshape(-1, 2)


def fit_ellipse(points: Sequence[PixelPoint]) -> EllipseCoefficients:
    """
    Ajusta a forma geral da elipse aos pontos (solucao exata com 5 pontos,
    minimos quadrados de ||D*theta + 1|| acima disso).

    Args:
        points: Pelo menos 5 pixels

    Returns:
        Coeficientes da elipse

    Raises:
        InvalidInput: menos de 5 pontos
        DegenerateConfiguration: matriz de projeto sem posto completo
        NotAnEllipse: conica ajustada nao e elipse
    """
    pts = _as_point_array(points)
    if len(pts) < 5:
        raise InvalidInput(f"Ajuste de elipse exige 5 pontos, recebeu {len(pts)}")

    x, y = pts[:, 0], pts[:, 1]
    design = np.column_stack([x * x, 2 * x * y, y * y, 2 * x, 2 * y])
    rhs = -np.ones(len(pts))

    # Escala de colunas nao altera o minimizador, so o condicionamento
    column_scale = np.linalg.norm(design, axis=0)
    if np.any(column_scale == 0):
        raise DegenerateConfiguration("Matriz de projeto com coluna nula (pontos colineares?)")
    scaled = design / column_scale

    rank = np.linalg.matrix_rank(scaled)
    condition = np.linalg.cond(scaled)
    if rank < 5 or not np.isfinite(condition) or condition > MAX_CONDITION:
        raise DegenerateConfiguration(
            f"Matriz de projeto degenerada (posto={rank}, condicao={condition:.3e})"
        )

    if len(pts) == 5:
        solution = np.linalg.solve(scaled, rhs)
    else:
        solution = np.linalg.lstsq(scaled, rhs, rcond=None)[0]

    coeffs = EllipseCoefficients.from_array(solution / column_scale)
    if not coeffs.is_ellipse:
        raise NotAnEllipse(f"Conica ajustada nao e elipse (b^2 - ac = {coeffs.discriminant:.3e})")
    return coeffs


# =============================================================================
# COEFICIENTES <-> PARAMETROS
# =============================================================================
def coeffs_to_params_batch(coeffs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Versao vetorizada de coeffs_to_params.

    Args:
        coeffs: Array (N, 5) com [a, b, c, d, e]

    Returns:
        (parametros (N, 5) = [cx, cy, w, h, theta] canonicos,
         status (N,) com STATUS_OK / STATUS_NOT_ELLIPSE / STATUS_NUMERICAL)
    """
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    a, b, c, d, e = coeffs.T

    disc = b * b - a * c
    status = np.where(disc < 0, STATUS_OK, STATUS_NOT_ELLIPSE)

    numerator = 2 * (a * e * e + c * d * d + b * b - 2 * b * d * e - a * c)
    root = np.sqrt((a - c) ** 2 + 4 * b * b)

    with np.errstate(divide="ignore", invalid="ignore"):
        cx = (c * d - b * e) / disc
        cy = (a * e - b * d) / disc
        w_arg = numerator / (disc * (-root - (a + c)))
        h_arg = numerator / (disc * (root - (a + c)))

    bad = ~np.isfinite(w_arg) | ~np.isfinite(h_arg) | (w_arg < -SQRT_CLAMP) | (h_arg < -SQRT_CLAMP)
    status = np.where((status == STATUS_OK) & bad, STATUS_NUMERICAL, status)

    w = np.sqrt(np.clip(np.nan_to_num(w_arg), 0.0, None))
    h = np.sqrt(np.clip(np.nan_to_num(h_arg), 0.0, None))
    # Direcao do eixo associado a w
    theta = 0.5 * np.arctan2(2 * b, a - c)

    swap = w < h
    width = np.where(swap, h, w)
    height = np.where(swap, w, h)
    theta = wrap_half_turn(np.where(swap, theta + np.pi / 2, theta))

    params = np.column_stack([cx, cy, width, height, theta])
    return params, status


def coeffs_to_params(coeffs: EllipseCoefficients) -> EllipseParams:
    """
    Converte coeficientes em (centro, largura, altura, rotacao) canonicos.

    Raises:
        NotAnEllipse: discriminante nao negativo
        NumericalFailure: argumento de raiz negativo alem da tolerancia
    """
    params, status = coeffs_to_params_batch(coeffs.as_array()[None])
    if status[0] == STATUS_NOT_ELLIPSE:
        raise NotAnEllipse(f"Coeficientes nao descrevem elipse (b^2 - ac = {coeffs.discriminant:.3e})")
    if status[0] == STATUS_NUMERICAL or params[0, 3] <= 0:
        raise NumericalFailure("Argumento de raiz negativo ao extrair eixos da elipse")
    return EllipseParams.from_array(params[0])


def params_to_coeffs(params: EllipseParams) -> EllipseCoefficients:
    """
    Inverso de coeffs_to_params.

    Raises:
        InvalidParams: eixos nao positivos
        DegenerateNormalization: elipse passa pela origem do pixel
    """
    if not (params.width > 0 and params.height > 0):
        raise InvalidParams(f"Eixos devem ser positivos: w={params.width}, h={params.height}")

    cos_t, sin_t = np.cos(params.rotation), np.sin(params.rotation)
    axes = np.array([[cos_t, -sin_t], [sin_t, cos_t]])
    quadratic = axes @ np.diag([1.0 / params.width ** 2, 1.0 / params.height ** 2]) @ axes.T
    center = params.center.as_array()

    linear = -quadratic @ center
    constant = center @ quadratic @ center - 1.0

    conic = np.empty((3, 3))
    conic[:2, :2] = quadratic
    conic[:2, 2] = linear
    conic[2, :2] = linear
    conic[2, 2] = constant
    return coeffs_from_matrix(conic)


def conic_residual(coeffs: EllipseCoefficients, point: PixelPoint) -> float:
    """Valor de a*x^2 + 2b*xy + c*y^2 + 2d*x + 2e*y + 1 no ponto."""
    return float(conic_residual_batch(coeffs.as_array()[None], point.as_array()[None])[0, 0])


def conic_residual_batch(coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
    """
    Residuos de N conicas em M pontos.

    Args:
        coeffs: (N, 5)
        points: (M, 2)

    Returns:
        Array (N, M)
    """
    coeffs = np.atleast_2d(coeffs)
    points = np.atleast_2d(points)
    a, b, c, d, e = (coeffs[:, i:i + 1] for i in range(5))
    x, y = points[None, :, 0], points[None, :, 1]
    return a * x * x + 2 * b * x * y + c * y * y + 2 * d * x + 2 * e * y + 1.0


# =============================================================================
# PROJECAO
# =============================================================================
def project_to_pixels(points_camera: np.ndarray, K: CameraIntrinsics) -> np.ndarray:
    """Projecao pinhole de pontos (..., 3) no referencial da camera."""
    points_camera = np.asarray(points_camera, dtype=float)
    z = points_camera[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = K.fx * points_camera[..., 0] / z + K.cx
        v = K.fy * points_camera[..., 1] / z + K.cy
    return np.stack([u, v], axis=-1)


def circle_image_conics(
    rotations: np.ndarray,
    positions: np.ndarray,
    radius: float,
    K: CameraIntrinsics,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Conica homogenea da imagem de N circulos e a menor profundidade de cada um.

    O circulo fica no plano x-y local, centrado na origem do referencial da
    agulha. Um raio m da camera toca o circulo quando
        m^T [delta^2 I - delta (b n^T + n b^T) + (|b|^2 - r^2) n n^T] m = 0
    com n a normal do plano e delta = n . b. Na imagem: C = K^-T Q K^-1.

    Args:
        rotations: (N, 3, 3) matrizes de rotacao agulha -> camera
        positions: (N, 3) centros do circulo (m)

    Returns:
        (conicas (N, 3, 3), profundidade minima (N,))
    """
    rotations = np.asarray(rotations, dtype=float).reshape(-1, 3, 3)
    positions = np.asarray(positions, dtype=float).reshape(-1, 3)

    normals = rotations[:, :, 2]
    delta = np.einsum("ni,ni->n", normals, positions)
    center_sq = np.einsum("ni,ni->n", positions, positions)

    identity = np.eye(3)[None]
    cross = positions[:, :, None] * normals[:, None, :]
    cone = (
        delta[:, None, None] ** 2 * identity
        - delta[:, None, None] * (cross + np.transpose(cross, (0, 2, 1)))
        + (center_sq - radius ** 2)[:, None, None] * normals[:, :, None] * normals[:, None, :]
    )

    k_inv = K.inverse
    conics = np.einsum("ji,njk,kl->nil", k_inv, cone, k_inv)

    in_plane_z = np.hypot(rotations[:, 2, 0], rotations[:, 2, 1])
    min_depth = positions[:, 2] - radius * in_plane_z
    return conics, min_depth


def project_circle_batch(
    rotations: np.ndarray,
    positions: np.ndarray,
    radius: float,
    K: CameraIntrinsics,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Coeficientes normalizados da elipse projetada para N poses.

    Returns:
        (coeficientes (N, 5), mascara de validade (N,)): invalido quando o
        circulo cruza z_min, a conica passa pela origem ou nao e elipse.
    """
    conics, min_depth = circle_image_conics(rotations, positions, radius, K)
    coeffs, normalized = _normalize_conics(conics)
    disc = coeffs[:, 1] ** 2 - coeffs[:, 0] * coeffs[:, 2]
    valid = (min_depth > Z_MIN) & normalized & (disc < 0) & np.all(np.isfinite(coeffs), axis=1)
    return coeffs, valid


def project_circle(pose: "Pose6D", radius: float, K: CameraIntrinsics) -> EllipseCoefficients:
    """
    Elipse da imagem de um circulo de raio `radius` na pose dada.

    Raises:
        BehindCamera: algum ponto do circulo com z <= z_min
        DegenerateNormalization: conica passa pela origem do pixel
        NotAnEllipse: projecao degenerada (plano do circulo pelo centro optico)
    """
    conics, min_depth = circle_image_conics(pose.rotation_matrix()[None], pose.b[None], radius, K)
    if min_depth[0] <= Z_MIN:
        raise BehindCamera(f"Circulo atras da camera (z minimo = {min_depth[0]:.4f} m)")
    coeffs = coeffs_from_matrix(conics[0])
    if not coeffs.is_ellipse:
        raise NotAnEllipse("Projecao do circulo nao e uma elipse")
    return coeffs


# =============================================================================
# RECONSTRUCAO DA POSE DO CIRCULO
# =============================================================================
@dataclass(frozen=True)
class CirclePoseCandidate:
    """Pose candidata e seu erro RMS de reprojecao (px)."""
    pose: "Pose6D"
    score: float


def _plane_normals(cone: np.ndarray) -> List[np.ndarray]:
    """Normais das secoes circulares do cone (duas, possivelmente iguais)."""
    eigvals, eigvecs = np.linalg.eigh(cone)
    low, mid, high = eigvals
    span = high - low
    if not span > 0:
        raise NumericalFailure("Cone de projecao degenerado")
    weight_high = np.sqrt(max(high - mid, 0.0) / span)
    weight_low = np.sqrt(max(mid - low, 0.0) / span)
    return [
        weight_high * eigvecs[:, 2] + weight_low * eigvecs[:, 0],
        weight_high * eigvecs[:, 2] - weight_low * eigvecs[:, 0],
    ]


def _circle_center(cone: np.ndarray, normal: np.ndarray, radius: float) -> Optional[np.ndarray]:
    """Centro 3D do circulo de raio `radius` cortado pelo plano de normal dada."""
    helper = np.eye(3)[int(np.argmin(np.abs(normal)))]
    axis_a = np.cross(normal, helper)
    axis_a /= np.linalg.norm(axis_a)
    axis_b = np.cross(normal, axis_a)
    basis = np.column_stack([axis_a, axis_b, normal])

    # Secao no plano normal . X = 1
    section = basis.T @ cone @ basis
    quadratic = section[:2, :2]
    linear = section[:2, 2]
    offset = -np.linalg.solve(quadratic, linear)
    scale = 0.5 * np.trace(quadratic)
    rho_sq = (offset @ quadratic @ offset - section[2, 2]) / scale
    if not rho_sq > 0:
        return None

    center = (radius / np.sqrt(rho_sq)) * (normal + offset[0] * axis_a + offset[1] * axis_b)
    if center[2] < 0:
        center = -center
    return center


def _anchored_rotation(
    center: np.ndarray,
    normal: np.ndarray,
    anchor: PixelPoint,
    anchor_angle: float,
    K: CameraIntrinsics,
) -> Optional[np.ndarray]:
    """Rotacao com eixo z = normal e landmark `anchor_angle` sobre o pixel ancora."""
    ray = K.inverse @ np.array([anchor.x, anchor.y, 1.0])
    denom = normal @ ray
    if abs(denom) < 1e-15:
        return None
    hit = ray * (normal @ center) / denom
    direction = hit - center
    direction -= (direction @ normal) * normal
    length = np.linalg.norm(direction)
    if length < 1e-15:
        return None
    toward_anchor = direction / length
    side = np.cross(normal, toward_anchor)

    cos_a, sin_a = np.cos(anchor_angle), np.sin(anchor_angle)
    x_axis = cos_a * toward_anchor - sin_a * side
    y_axis = np.cross(normal, x_axis)
    return np.column_stack([x_axis, y_axis, normal])


def _reprojection_score(
    rotation: np.ndarray,
    center: np.ndarray,
    radius: float,
    K: CameraIntrinsics,
    labeled: Sequence[Tuple[float, np.ndarray]],
    arc_points: np.ndarray,
    arc_extent: float,
) -> float:
    """RMS (px) das distancias de landmarks rotulados e pontos ao arco."""
    squared = []
    if labeled:
        angles = np.array([angle for angle, _ in labeled])
        local = radius * np.column_stack([np.cos(angles), np.sin(angles), np.zeros_like(angles)])
        pixels = project_to_pixels(local @ rotation.T + center, K)
        observed = np.vstack([pixel for _, pixel in labeled])
        squared.extend(np.sum((pixels - observed) ** 2, axis=1))
    if len(arc_points):
        samples = np.linspace(0.0, arc_extent, ARC_SAMPLES)
        local = radius * np.column_stack([np.cos(samples), np.sin(samples), np.zeros_like(samples)])
        arc = project_to_pixels(local @ rotation.T + center, K)
        gaps = np.sum((arc_points[:, None, :] - arc[None, :, :]) ** 2, axis=2)
        squared.extend(np.min(gaps, axis=1))
    return float(np.sqrt(np.mean(squared)))


def _same_pose(first: "Pose6D", second: "Pose6D") -> bool:
    position_gap = np.linalg.norm(first.b - second.b)
    rotation_gap = (Rotation.from_rotvec(first.q) * Rotation.from_rotvec(second.q).inv()).magnitude()
    return bool(position_gap < 1e-7 and rotation_gap < 1e-6)


def circle_pose_candidates(
    coeffs: EllipseCoefficients,
    radius: float,
    K: CameraIntrinsics,
    anchor: PixelPoint,
    anchor_angle: float = 0.0,
    landmarks: Optional[Mapping[float, PixelPoint]] = None,
    arc_points: Sequence[PixelPoint] = (),
    arc_extent: float = np.pi,
) -> List[CirclePoseCandidate]:
    """
    Todas as poses de circulo compativeis com a elipse, melhor primeiro.

    Duas orientacoes do plano (ambiguidade classica) vezes dois sentidos da
    normal; o angulo no plano e fixado pelo pixel ancora. O score usa a
    ancora, os landmarks rotulados extras (angulo -> pixel) e a distancia
    de pontos nao rotulados ao arco projetado.

    Raises:
        NotAnEllipse: coeficientes nao descrevem elipse
        InvalidInput: raio nao positivo
        NumericalFailure: nenhuma pose pode ser construida
    """
    from .needle_state import Pose6D

    if not coeffs.is_ellipse:
        raise NotAnEllipse(f"Reconstrucao exige elipse (b^2 - ac = {coeffs.discriminant:.3e})")
    if not radius > 0:
        raise InvalidInput(f"Raio deve ser positivo: {radius}")

    cone = K.matrix.T @ conic_matrix(coeffs) @ K.matrix
    cone = cone / np.linalg.norm(cone)

    labeled: List[Tuple[float, np.ndarray]] = [(float(anchor_angle), anchor.as_array())]
    for angle, pixel in (landmarks or {}).items():
        labeled.append((float(angle), pixel.as_array()))
    arc_array = _as_point_array(arc_points)

    candidates: List[CirclePoseCandidate] = []
    for plane_normal in _plane_normals(cone):
        plane_normal = plane_normal / np.linalg.norm(plane_normal)
        center = _circle_center(cone, plane_normal, radius)
        if center is None:
            continue
        for sense in (1.0, -1.0):
            normal = sense * plane_normal
            rotation = _anchored_rotation(center, normal, anchor, anchor_angle, K)
            if rotation is None:
                continue
            pose = Pose6D.from_arrays(center, Rotation.from_matrix(rotation).as_rotvec())
            if any(_same_pose(pose, other.pose) for other in candidates):
                continue
            score = _reprojection_score(rotation, center, radius, K, labeled, arc_array, arc_extent)
            candidates.append(CirclePoseCandidate(pose=pose, score=score))

    if not candidates:
        raise NumericalFailure("Nenhuma pose de circulo reconstruida a partir da elipse")

    candidates.sort(key=lambda candidate: candidate.score)
    return candidates


def reconstruct_circle_pose(
    coeffs: EllipseCoefficients,
    radius: float,
    K: CameraIntrinsics,
    anchor: PixelPoint,
    anchor_angle: float = 0.0,
    landmarks: Optional[Mapping[float, PixelPoint]] = None,
    arc_points: Sequence[PixelPoint] = (),
    arc_extent: float = np.pi,
    ambiguity_tolerance_px: float = 0.5,
) -> "Pose6D":
    """
    Pose do circulo cuja projecao reproduz a elipse e cujo landmark em
    `anchor_angle` cai mais perto do pixel ancora.

    Raises:
        NotAnEllipse: coeficientes nao descrevem elipse
        AmbiguityUnresolved: os dois melhores candidatos distintos ficam a
            menos de `ambiguity_tolerance_px` um do outro (candidatos
            ordenados em `error.candidates`)
    """
    candidates = circle_pose_candidates(
        coeffs, radius, K, anchor, anchor_angle,
        landmarks=landmarks, arc_points=arc_points, arc_extent=arc_extent,
    )
    best = candidates[0]
    if len(candidates) > 1 and candidates[1].score - best.score < ambiguity_tolerance_px:
        logger.debug(
            "reconstrucao_ambigua",
            melhor=round(best.score, 4),
            segundo=round(candidates[1].score, 4),
        )
        raise AmbiguityUnresolved(
            f"Candidatos empatados: {best.score:.3f} px vs {candidates[1].score:.3f} px",
            candidates=candidates,
        )
    return best.pose
