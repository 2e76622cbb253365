"""Return maps near a homoclinic tangency to a saddle-node fixed point."""

from __future__ import annotations

from .errors import TangleError
from .kernels import k_star, nu, theta, y0_of_yk
from .model import LocalState, ModelConfig, Perturbation, fixed_points, time_one_flow
from .return_map import FixedPointRecord, ReturnMap
from .rescale import RescaleFrame, frame
from .bifurcation import BifurcationCurve, classify_domain, trace_L_h, trace_L_k

__all__ = [
    "TangleError",
    "k_star",
    "nu",
    "theta",
    "y0_of_yk",
    "LocalState",
    "ModelConfig",
    "Perturbation",
    "fixed_points",
    "time_one_flow",
    "FixedPointRecord",
    "ReturnMap",
    "RescaleFrame",
    "frame",
    "BifurcationCurve",
    "classify_domain",
    "trace_L_h",
    "trace_L_k",
]

__version__ = "0.1.0"
