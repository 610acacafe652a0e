"""Tamper classification from exposure fraction estimates.

Deleting frames multiplies the apparent inter-frame motion while the blur
stays put, so the estimate drops to ``alpha / k``.  Blur-preserving frame
interpolation does the opposite and the estimate rises above the camera's
value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParameterError
from .estimator import ClipEstimate, FrameEstimate, median

CONSISTENT = "consistent"
DELETION = "deletion"
INTERPOLATION = "interpolation"
INDETERMINATE = "indeterminate"

DEFAULT_REL_TOL = 0.25


@dataclass(frozen=True)
class TamperVerdict:
    """Outcome of :func:`detect_tamper`.

    ``k_hat`` is the deletion factor for ``deletion`` and the interpolation
    multiplier for ``interpolation`` (None when no integer factor fits).
    """

    verdict: str
    k_hat: int | None
    relative_deviation: float
    alpha_hat: float
    alpha_ref: float
    evidence: dict

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "k_hat": self.k_hat,
            "relative_deviation": self.relative_deviation,
            "alpha_hat": self.alpha_hat,
            "alpha_ref": self.alpha_ref,
            "evidence": self.evidence,
        }


def _summary(alphas: Sequence[float]) -> dict:
    if not alphas:
        return {"n_frames": 0}
    a = np.asarray(alphas, dtype=np.float64)
    q1, q3 = np.percentile(a, [25, 75])
    return {
        "n_frames": int(a.size),
        "min": float(a.min()),
        "q1": float(q1),
        "median": median(a.tolist()),
        "q3": float(q3),
        "max": float(a.max()),
    }


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def detect_tamper(
    clip: ClipEstimate | float,
    alpha_ref: float,
    rel_tol: float = DEFAULT_REL_TOL,
) -> TamperVerdict:
    """Compare a clip's estimate with the camera's known exposure fraction.

    ``clip`` may be a :class:`ClipEstimate` or a bare estimate.
    """
    if not 0.0 < alpha_ref <= 1.0:
        raise ParameterError(f"alpha_ref must lie in (0, 1], got {alpha_ref}")
    if not 0.0 < rel_tol < 1.0:
        raise ParameterError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    if isinstance(clip, ClipEstimate):
        alpha_hat = clip.alpha_glob
        evidence = _summary(clip.alphas)
    else:
        alpha_hat = float(clip)
        evidence = {"n_frames": 0}
    if not math.isfinite(alpha_hat) or alpha_hat < 0:
        raise ParameterError(f"estimate must be finite and >= 0, got {alpha_hat}")

    r = alpha_hat / alpha_ref
    deviation = abs(r - 1.0)

    def verdict(kind, k=None):
        return TamperVerdict(kind, k, deviation, alpha_hat, alpha_ref, evidence)

    if deviation <= rel_tol:
        return verdict(CONSISTENT)
    if r < 1.0:
        if r == 0.0:
            return verdict(INDETERMINATE)
        k_hat = _round_half_up(1.0 / r)
        expected = alpha_ref / k_hat
        if k_hat >= 2 and abs(alpha_hat - expected) / expected <= rel_tol:
            return verdict(DELETION, k_hat)
        return verdict(INDETERMINATE)
    m = _round_half_up(r)
    if m >= 2 and abs(r - m) <= rel_tol * m:
        return verdict(INTERPOLATION, m)
    if r > 1.0 + rel_tol:
        return verdict(INTERPOLATION)
    return verdict(INDETERMINATE)


def rolling_median(values: Sequence[float], window: int) -> np.ndarray:
    """Centered rolling median; windows are truncated at the sequence ends."""
    a = np.asarray(values, dtype=np.float64)
    half = window // 2
    return np.array([np.median(a[max(0, i - half):i + half + 1]) for i in range(a.size)])


def localize_inconsistency(
    frames: Sequence[FrameEstimate],
    window: int = 9,
    rel_tol: float = DEFAULT_REL_TOL,
) -> list[tuple[int, int]]:
    """Frame-index ranges whose rolling median strays from the clip median.

    Returns disjoint, sorted, inclusive ``(first, last)`` frame-index ranges
    where ``|rolling_median / clip_median - 1| > rel_tol``.
    """
    if window < 3 or window % 2 == 0:
        raise ParameterError(f"window must be an odd integer >= 3, got {window}")
    if not 0.0 < rel_tol < 1.0:
        raise ParameterError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    if len(frames) < window:
        raise ParameterError(f"{len(frames)} frame estimates are fewer than the window {window}")
    frames = sorted(frames, key=lambda f: f.frame_index)
    alphas = [f.alpha_patch for f in frames]
    center = median(alphas)
    if center == 0.0:
        return []
    rolled = rolling_median(alphas, window)
    off = np.abs(rolled / center - 1.0) > rel_tol

    segments = []
    start = None
    for i, flag in enumerate(off):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            segments.append((frames[start].frame_index, frames[i - 1].frame_index))
            start = None
    if start is not None:
        segments.append((frames[start].frame_index, frames[-1].frame_index))
    return segments
