"""
Configuracao de Experimentos
============================

Arquivo JSON validado com pydantic. Cada secao vira um objeto de dominio:

    camera     -> CameraIntrinsics
    needle     -> NeedleModel
    trajectory -> TrajectorySpec
    noise      -> NoiseSpec
    filter     -> FilterConfig (variante + ruidos do filtro)
    bench      -> grade de condicoes do benchmark

Um mesmo arquivo + mesma semente reproduz os resultados bit a bit.
Referencia completa das chaves: docs/CONFIGURACAO.md
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .conic_geometry import CameraIntrinsics
from .errors import ConfigError
from .needle_state import MotionNoise, NeedleModel, Pose6D
from .observation import ObservationModelSpec, ObservationNoiseConfig, ObservationVariant
from .particle_filter import FilterConfig
from .simulator import MotionKind, NoiseSpec, TrajectorySpec

MAX_SEED = 2 ** 64 - 1
# Piso de sigma quando o filtro acompanha o ruido simulado
MIN_MATCHED_SIGMA_PX = 0.25

Vector3 = Tuple[float, float, float]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# =============================================================================
# SECOES
# =============================================================================
class CameraSection(_Section):
    fx: float = Field(1000.0, gt=0)
    fy: float = Field(1000.0, gt=0)
    cx: float = 320.0
    cy: float = 240.0
    width: int = Field(640, gt=0)
    height: int = Field(480, gt=0)


class NeedleSection(_Section):
    radius_m: float = Field(0.0054, gt=0)
    arc_extent_rad: float = Field(float(np.pi), gt=0, le=2 * np.pi)
    body_count: int = Field(3, ge=0)


class TrajectorySection(_Section):
    kind: MotionKind = MotionKind.STATIC
    steps: int = Field(300, ge=1)
    initial_position_m: Vector3 = (0.0, 0.0, 0.08)
    initial_rotvec_rad: Vector3 = (0.6, -0.3, 0.2)
    step_translation_m: float = Field(0.0005, ge=0)
    direction: Vector3 = (1.0, 0.5, 0.3)
    step_rotation_deg: float = Field(0.5, ge=0)
    axis: Vector3 = (0.3, 1.0, 0.5)
    reverse_every: int = Field(40, ge=2)
    margin_px: float = Field(10.0, ge=0)

    @field_validator("direction", "axis")
    @classmethod
    def _nonzero(cls, value: Vector3) -> Vector3:
        if not any(value):
            raise ValueError("vetor nao pode ser nulo")
        return value


class NoiseSection(_Section):
    sigma_px: float = Field(1.0, ge=0)
    dropout: float = Field(0.0, ge=0, lt=1)


class FilterSection(_Section):
    variant: ObservationVariant = ObservationVariant.TWO_POINTS_EM
    particles: int = Field(5000, ge=2)
    neff_threshold: Optional[float] = Field(None, gt=0)
    motion_position_std_m: float = Field(0.0002, ge=0)
    motion_rotation_std_deg: float = Field(0.2, ge=0)
    initial_position_std_m: float = Field(0.005, ge=0)
    initial_rotation_std_deg: float = Field(5.0, ge=0)
    # None -> sigma do ruido simulado (com piso)
    point_sigma_px: Optional[float] = Field(None, gt=0)
    ep_std: Tuple[float, float, float, float, float] = (2.0, 2.0, 4.0, 4.0, float(np.radians(5.0)))
    pose_position_std_m: float = Field(0.005, gt=0)
    pose_rotation_std_deg: float = Field(5.0, gt=0)
    # None -> 3 x point_sigma_px (minimo 0.5)
    hypothesis_tolerance_px: Optional[float] = Field(None, gt=0)

    @field_validator("ep_std")
    @classmethod
    def _positive(cls, value):
        if min(value) <= 0:
            raise ValueError("desvios devem ser positivos")
        return value


class BenchSection(_Section):
    variants: List[ObservationVariant] = Field(default_factory=lambda: [
        ObservationVariant.POSE,
        ObservationVariant.FPS,
        ObservationVariant.ONE_POINT_EP,
        ObservationVariant.TWO_POINTS_EP,
        ObservationVariant.ONE_POINT_EM,
        ObservationVariant.TWO_POINTS_EM,
    ])
    motions: List[MotionKind] = Field(default_factory=lambda: [MotionKind.STATIC, MotionKind.MOVING])
    sigmas_px: List[float] = Field(default_factory=lambda: [0.5, 1.0, 1.5])
    trials: int = Field(10, ge=1)
    record_runtime: bool = True

    @field_validator("sigmas_px")
    @classmethod
    def _sigmas(cls, value: List[float]) -> List[float]:
        if any(s < 0 for s in value):
            raise ValueError("sigmas devem ser >= 0")
        return value


# =============================================================================
# CONFIGURACAO COMPLETA
# =============================================================================
class ExperimentConfig(_Section):
    """Configuracao completa de um experimento."""
    seed: int = Field(0, ge=0, le=MAX_SEED)
    output: Optional[str] = None
    camera: CameraSection = Field(default_factory=CameraSection)
    needle: NeedleSection = Field(default_factory=NeedleSection)
    trajectory: TrajectorySection = Field(default_factory=TrajectorySection)
    noise: NoiseSection = Field(default_factory=NoiseSection)
    filter: FilterSection = Field(default_factory=FilterSection)
    bench: BenchSection = Field(default_factory=BenchSection)

    def camera_intrinsics(self) -> CameraIntrinsics:
        c = self.camera
        return CameraIntrinsics(c.fx, c.fy, c.cx, c.cy, c.width, c.height)

    def needle_model(self) -> NeedleModel:
        return NeedleModel(self.needle.radius_m, self.needle.arc_extent_rad, self.needle.body_count)

    def trajectory_spec(self, kind: Optional[MotionKind] = None) -> TrajectorySpec:
        t = self.trajectory
        kind = MotionKind(kind or t.kind)
        initial = Pose6D(t.initial_position_m, t.initial_rotvec_rad)
        if kind is MotionKind.STATIC:
            return TrajectorySpec.static(t.steps, initial, t.margin_px)
        return TrajectorySpec.moving(
            t.steps, initial, t.margin_px,
            step_translation_m=t.step_translation_m,
            direction=t.direction,
            step_rotation_rad=float(np.radians(t.step_rotation_deg)),
            axis=t.axis,
            reverse_every=t.reverse_every,
        )

    def noise_spec(self, sigma_px: Optional[float] = None, seed: Optional[int] = None) -> NoiseSpec:
        return NoiseSpec(
            sigma_px=self.noise.sigma_px if sigma_px is None else sigma_px,
            seed=self.seed if seed is None else seed,
            dropout=self.noise.dropout,
        )

    def filter_config(
        self,
        variant: Optional[ObservationVariant] = None,
        sigma_px: Optional[float] = None,
        seed: Optional[int] = None,
    ) -> FilterConfig:
        """FilterConfig da secao `filter`; sigma_px e o ruido simulado da condicao."""
        f = self.filter
        simulated = self.noise.sigma_px if sigma_px is None else sigma_px
        point_sigma = f.point_sigma_px if f.point_sigma_px is not None else max(simulated, MIN_MATCHED_SIGMA_PX)
        noise = ObservationNoiseConfig(
            point_sigma_px=point_sigma,
            ep_std=f.ep_std,
            pose_std=(f.pose_position_std_m,) * 3 + (float(np.radians(f.pose_rotation_std_deg)),) * 3,
        )
        return FilterConfig(
            particles=f.particles,
            motion_noise=MotionNoise.from_std(f.motion_position_std_m, float(np.radians(f.motion_rotation_std_deg))),
            initial_noise=MotionNoise.from_std(f.initial_position_std_m, float(np.radians(f.initial_rotation_std_deg))),
            observation=ObservationModelSpec(ObservationVariant(variant or f.variant), noise),
            neff_threshold=f.neff_threshold,
            seed=(self.seed if seed is None else seed),
            hypothesis_tolerance_px=f.hypothesis_tolerance_px,
        )


# =============================================================================
# CARGA / GRAVACAO
# =============================================================================
def _describe(error: ValidationError) -> ConfigError:
    fields, lines = [], []
    for item in error.errors():
        path = ".".join(str(part) for part in item["loc"]) or "<raiz>"
        fields.append(path)
        lines.append(f"  - {path}: {item['msg']}")
    return ConfigError("Configuracao invalida:\n" + "\n".join(lines), fields=fields)


def parse_config(data: Union[str, Dict[str, Any]]) -> ExperimentConfig:
    """
    Valida texto JSON (ou dict) como ExperimentConfig.

    Raises:
        ConfigError: mensagem com cada campo invalido (ou linha/coluna do JSON)
    """
    try:
        if isinstance(data, str):
            return ExperimentConfig.model_validate_json(data)
        return ExperimentConfig.model_validate(data)
    except ValidationError as error:
        raise _describe(error) from error


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Le e valida o arquivo de configuracao."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as error:
        raise ConfigError(f"Nao foi possivel ler {path}: {error}") from error
    return parse_config(text)


def save_config(config: ExperimentConfig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(config.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def with_overrides(config: ExperimentConfig, **overrides: Any) -> ExperimentConfig:
    """
    Aplica overrides da linha de comando e revalida.

    Chaves aceitas: seed, output, trials, variant (restringe o benchmark
    e define a variante do rastreamento). Valores None sao ignorados.
    """
    data = json.loads(config.model_dump_json())
    if overrides.get("seed") is not None:
        data["seed"] = overrides["seed"]
    if overrides.get("output") is not None:
        data["output"] = str(overrides["output"])
    if overrides.get("trials") is not None:
        data["bench"]["trials"] = overrides["trials"]
    if overrides.get("variant") is not None:
        data["filter"]["variant"] = overrides["variant"]
        data["bench"]["variants"] = [overrides["variant"]]
    return parse_config(data)


def derive_seed(seed: int, *keys: int) -> int:
    """Semente derivada deterministicamente de (seed, chaves)."""
    return int(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys)).generate_state(1)[0])
