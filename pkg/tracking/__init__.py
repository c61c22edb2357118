"""
Rastreamento de agulha cirurgica por filtro de particulas sobre
deteccoes de pontos e geometria de elipses.
"""

from .conic_geometry import (
    CameraIntrinsics,
    EllipseCoefficients,
    EllipseParams,
    PixelPoint,
    coeffs_to_params,
    fit_ellipse,
    params_to_coeffs,
    project_circle,
    reconstruct_circle_pose,
)
from .needle_state import Action, MotionNoise, NeedleModel, Pose6D, pose_error
from .observation import DetectionSet, ObservationModelSpec, ObservationNoiseConfig, ObservationVariant
from .particle_filter import FilterConfig, ParticleSet, step

__version__ = "1.0.0"

__all__ = [
    "Action",
    "CameraIntrinsics",
    "DetectionSet",
    "EllipseCoefficients",
    "EllipseParams",
    "FilterConfig",
    "MotionNoise",
    "NeedleModel",
    "ObservationModelSpec",
    "ObservationNoiseConfig",
    "ObservationVariant",
    "ParticleSet",
    "PixelPoint",
    "Pose6D",
    "coeffs_to_params",
    "fit_ellipse",
    "params_to_coeffs",
    "pose_error",
    "project_circle",
    "reconstruct_circle_pose",
    "step",
]
