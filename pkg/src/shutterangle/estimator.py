"""Per-frame and per-clip exposure fraction estimates.

For each frame the patch with the most valid positions is selected and
the exposure fraction is the ratio of the norms of the mean blur kernel
and the mean flow vector inside it.  The clip estimate is the median of
the per-frame values.
"""

from __future__ import annotations

import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EstimationFailedError, ParameterError, ShapeError
from .field_model import Vec2Field
from .patch_search import PatchLocation, best_patch
from .validity import EstimationParams, compute_validity


@dataclass(frozen=True)
class CameraTiming:
    """Exposure time and frame rate of a camera.

    ``alpha = exposure / frame_interval = shutter_angle / 360``.
    """

    exposure: float
    framerate: float

    def __post_init__(self):
        if self.framerate <= 0 or self.exposure <= 0:
            raise ParameterError("exposure and framerate must be positive")
        if self.alpha > 1.0 + 1e-12:
            raise ParameterError(
                f"exposure {self.exposure}s exceeds the frame interval {self.frame_interval}s"
            )

    @classmethod
    def from_alpha(cls, alpha: float, framerate: float) -> "CameraTiming":
        return cls(exposure=alpha / framerate, framerate=framerate)

    @classmethod
    def from_shutter_angle(cls, degrees: float, framerate: float) -> "CameraTiming":
        return cls.from_alpha(degrees / 360.0, framerate)

    @property
    def frame_interval(self) -> float:
        return 1.0 / self.framerate

    @property
    def alpha(self) -> float:
        return self.exposure * self.framerate

    @property
    def shutter_angle(self) -> float:
        return 360.0 * self.alpha


@dataclass(frozen=True)
class FrameEstimate:
    frame_index: int
    alpha_patch: float
    patch: PatchLocation
    n_valid: int

    def as_dict(self) -> dict:
        return {
            "frame_index": self.frame_index,
            "alpha_patch": self.alpha_patch,
            "patch": [self.patch.x0, self.patch.y0],
            "n_valid": self.n_valid,
        }


@dataclass(frozen=True)
class ClipEstimate:
    alpha_glob: float
    frames: list[FrameEstimate]
    n_frames_total: int
    skipped: list[int] = field(default_factory=list)

    @property
    def n_frames_used(self) -> int:
        return len(self.frames)

    @property
    def alphas(self) -> list[float]:
        return [f.alpha_patch for f in self.frames]


def _check_pair(flow: Vec2Field, blur: Vec2Field, params: EstimationParams):
    if flow.shape != blur.shape:
        raise ShapeError(f"flow is {flow.width}x{flow.height} but blur is {blur.width}x{blur.height}")
    if params.patch_size > min(flow.width, flow.height):
        raise ParameterError(
            f"patch size {params.patch_size} does not fit a {flow.width}x{flow.height} frame"
        )


def estimate_frame(
    flow: Vec2Field,
    blur: Vec2Field,
    params: EstimationParams = EstimationParams(),
    frame_index: int = 0,
) -> FrameEstimate | None:
    """Exposure fraction of one (flow, blur) pair, or None if nothing is valid."""
    _check_pair(flow, blur, params)
    mask = compute_validity(flow, blur, params)
    patch = best_patch(mask, params.patch_size)
    if patch is None:
        return None

    d = params.patch_size
    window = (slice(patch.y0, patch.y0 + d), slice(patch.x0, patch.x0 + d))
    sel = mask[window]
    f = flow.data[window][sel]
    k = blur.data[window][sel]
    # kernels are sign-ambiguous; point each one along its flow vector
    sign = np.where(np.einsum("ij,ij->i", f, k) < 0.0, -1.0, 1.0)
    k = k * sign[:, None]

    n = f.shape[0]
    mean_f = f.sum(axis=0) / n
    mean_k = k.sum(axis=0) / n
    alpha = math.hypot(mean_k[0], mean_k[1]) / math.hypot(mean_f[0], mean_f[1])
    return FrameEstimate(frame_index=frame_index, alpha_patch=alpha, patch=patch, n_valid=n)


def median(values: Sequence[float]) -> float:
    """Median; the mean of the two middle values for even counts."""
    if len(values) == 0:
        raise ParameterError("median of an empty sequence")
    return float(statistics.median(values))


def estimate_clip(
    pairs: Iterable[tuple[Vec2Field, Vec2Field]],
    params: EstimationParams = EstimationParams(),
    threads: int = 1,
) -> ClipEstimate:
    """Median of per-frame estimates over a sequence of (flow, blur) pairs.

    Frames without any valid position are skipped. ``threads > 1`` fans the
    frames out to a thread pool; results are always reduced in frame order.

    Raises:
        EstimationFailedError: no frame produced an estimate.
    """
    pairs = list(pairs)
    if not pairs:
        raise ParameterError("at least one (flow, blur) pair is required")
    for flow, blur in pairs:
        _check_pair(flow, blur, params)

    def run(item):
        i, (flow, blur) = item
        return estimate_frame(flow, blur, params, frame_index=i)

    if threads > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, enumerate(pairs)))
    else:
        results = [run(item) for item in enumerate(pairs)]

    frames = [r for r in results if r is not None]
    skipped = [i for i, r in enumerate(results) if r is None]
    if not frames:
        diagnostics = [{"frame_index": i, "reason": "no valid positions"} for i in skipped]
        raise EstimationFailedError(
            f"none of the {len(pairs)} frames produced an estimate", diagnostics
        )
    alpha = median([f.alpha_patch for f in frames])
    return ClipEstimate(alpha_glob=alpha, frames=frames, n_frames_total=len(pairs), skipped=skipped)


def mean_absolute_error(estimates: Sequence[float], ground_truth: float) -> float:
    if len(estimates) == 0:
        raise ParameterError("mean absolute error of an empty list")
    values = np.asarray(estimates, dtype=np.float64)
    if not np.all(np.isfinite(values)) or not math.isfinite(ground_truth):
        raise ParameterError("estimates and ground truth must be finite")
    return float(np.mean(np.abs(ground_truth - values)))
