"""Per-pixel filtering of (flow, blur) vector pairs.

A position is kept only if the blur kernel and the flow vector are
collinear up to ``max_angle`` (ignoring the kernel's sign), the kernel is
not longer than the flow, and both are longer than ``min_magnitude``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError
from .field_model import Vec2Field

DEFAULT_PATCH_SIZE = 30
DEFAULT_MAX_ANGLE = 5.0


@dataclass(frozen=True)
class EstimationParams:
    """Estimator settings.

    Attributes:
        patch_size: side ``D`` of the square search window, in pixels.
        max_angle: tolerated angle between flow and blur, degrees in (0, 90).
        min_magnitude: both vectors must be strictly longer than this.
    """

    patch_size: int = DEFAULT_PATCH_SIZE
    max_angle: float = DEFAULT_MAX_ANGLE
    min_magnitude: float = 1.0

    def __post_init__(self):
        if int(self.patch_size) != self.patch_size or self.patch_size < 1:
            raise ParameterError(f"patch_size must be a positive integer, got {self.patch_size}")
        if not 0.0 < self.max_angle < 90.0:
            raise ParameterError(f"max_angle must lie in (0, 90) degrees, got {self.max_angle}")
        if not math.isfinite(self.min_magnitude) or self.min_magnitude < 0.0:
            raise ParameterError(f"min_magnitude must be >= 0, got {self.min_magnitude}")
        object.__setattr__(self, "patch_size", int(self.patch_size))
        object.__setattr__(self, "max_angle", float(self.max_angle))
        object.__setattr__(self, "min_magnitude", float(self.min_magnitude))

    @property
    def cos_threshold(self) -> float:
        return math.cos(math.radians(self.max_angle))

    def as_dict(self) -> dict:
        return {
            "patch_size": self.patch_size,
            "max_angle": self.max_angle,
            "min_magnitude": self.min_magnitude,
        }


def pixel_valid(f_vec, k_vec, params: EstimationParams) -> bool:
    """Validity predicate for a single (flow, blur) pair."""
    fu, fv = float(f_vec[0]), float(f_vec[1])
    ku, kv = float(k_vec[0]), float(k_vec[1])
    nf = math.hypot(fu, fv)
    nk = math.hypot(ku, kv)
    if nf <= params.min_magnitude or nk <= params.min_magnitude:
        return False
    if nk > nf:
        return False
    return abs(fu * ku + fv * kv) / (nf * nk) >= params.cos_threshold


def compute_validity(flow: Vec2Field, blur: Vec2Field, params: EstimationParams) -> np.ndarray:
    """Boolean mask of shape ``(height, width)``; True where the pair is usable."""
    if flow.shape != blur.shape:
        raise ShapeError(f"flow is {flow.width}x{flow.height} but blur is {blur.width}x{blur.height}")
    f = flow.data
    k = blur.data
    nf = np.hypot(f[..., 0], f[..., 1])
    nk = np.hypot(k[..., 0], k[..., 1])

    mask = (nf > params.min_magnitude) & (nk > params.min_magnitude)
    mask &= nk <= nf
    dot = np.abs(f[..., 0] * k[..., 0] + f[..., 1] * k[..., 1])
    # norms are > min_magnitude >= 0 wherever the mask is still set
    denom = np.where(mask, nf * nk, 1.0)
    mask &= dot / denom >= params.cos_threshold
    return mask
