"""Sparse-table range queries over the rows or columns of a 2-D array.

Built once per value surface, a table answers min/max over any contiguous
index window in O(1) by combining two overlapping power-of-two blocks.
Preprocessing is O(rows * cols * log) time and memory.
"""
from __future__ import annotations

import numpy as np


def _ilog2(n: int) -> int:
    """Largest k with 2**k <= n. Requires n >= 1."""
    return n.bit_length() - 1


class SparseRangeTable:
    """Range min/max along one axis of a fixed matrix, vectorized on the other.

    With ``axis=1`` a query over column window [lo, hi] returns one reduced
    value per row (all rows at once); ``axis=0`` reduces over a row window
    and returns one value per column.
    """

    def __init__(self, matrix: np.ndarray, axis: int, mode: str):
        if axis not in (0, 1):
            raise ValueError(f"axis must be 0 or 1, got {axis}")
        if mode not in ("min", "max"):
            raise ValueError(f"mode must be 'min' or 'max', got {mode}")
        arr = np.asarray(matrix, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
        self.axis = axis
        self.mode = mode
        self._op = np.minimum if mode == "min" else np.maximum
        length = arr.shape[axis]
        levels = [arr]
        span = 1
        while 2 * span <= length:
            prev = levels[-1]
            if axis == 1:
                nxt = self._op(prev[:, :-span], prev[:, span:])
            else:
                nxt = self._op(prev[:-span, :], prev[span:, :])
            levels.append(nxt)
            span *= 2
        self._levels = levels
        self._length = length

    def query(self, lo: int, hi: int) -> np.ndarray:
        """Reduce over the inclusive window [lo, hi] along the table's axis."""
        if not 0 <= lo <= hi < self._length:
            raise ValueError(f"window [{lo}, {hi}] outside [0, {self._length})")
        k = _ilog2(hi - lo + 1)
        level = self._levels[k]
        second = hi - (1 << k) + 1
        if self.axis == 1:
            return self._op(level[:, lo], level[:, second])
        return self._op(level[lo, :], level[second, :])
