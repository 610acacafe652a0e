"""Best D x D window search over a validity mask via a summed-area table."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True, eq=False)
class SummedAreaTable:
    """Integer prefix sums with a zero first row and column.

    ``table[y, x]`` is the number of set bits in ``mask[:y, :x]``, so the
    table has shape ``(height + 1, width + 1)``.
    """

    table: np.ndarray

    @property
    def width(self) -> int:
        return self.table.shape[1] - 1

    @property
    def height(self) -> int:
        return self.table.shape[0] - 1

    @property
    def total(self) -> int:
        return int(self.table[-1, -1])

    def rect_count(self, x0: int, y0: int, w: int, h: int) -> int:
        t = self.table
        return int(t[y0 + h, x0 + w] - t[y0, x0 + w] - t[y0 + h, x0] + t[y0, x0])

    def window_counts(self, side: int, ops: dict | None = None) -> np.ndarray:
        """Counts of every ``side`` x ``side`` window, indexed by top-left ``[y0, x0]``."""
        t = self.table
        counts = t[side:, side:] - t[:-side, side:] - t[side:, :-side] + t[:-side, :-side]
        if ops is not None:
            ops["reads"] = ops.get("reads", 0) + 4 * counts.size
        return counts


@dataclass(frozen=True)
class PatchLocation:
    x0: int
    y0: int
    valid_count: int


def build_sat(mask: np.ndarray, ops: dict | None = None) -> SummedAreaTable:
    """Build the summed-area table of a boolean mask.

    ``ops``, when given, accumulates the number of array elements read, so
    callers can check the linear cost of the search.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ParameterError(f"mask must be 2-D, got shape {mask.shape}")
    h, w = mask.shape
    table = np.zeros((h + 1, w + 1), dtype=np.int64)
    np.cumsum(mask, axis=0, out=table[1:, 1:])
    np.cumsum(table[1:, 1:], axis=1, out=table[1:, 1:])
    if ops is not None:
        # one pass over the mask, one over the partial sums
        ops["reads"] = ops.get("reads", 0) + 2 * mask.size
    table.flags.writeable = False
    return SummedAreaTable(table)


def best_patch(mask: np.ndarray, side: int, ops: dict | None = None) -> PatchLocation | None:
    """Window with the most valid positions; first in row-major order on ties.

    Returns None when no window holds a valid position.
    """
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    if side < 1 or side > min(w, h):
        raise ParameterError(f"patch size {side} does not fit a {w}x{h} frame")
    counts = build_sat(mask, ops).window_counts(side, ops)
    flat = int(np.argmax(counts))
    y0, x0 = divmod(flat, counts.shape[1])
    best = int(counts[y0, x0])
    if best == 0:
        return None
    return PatchLocation(x0=x0, y0=y0, valid_count=best)
