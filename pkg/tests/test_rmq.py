"""Sparse-table range reductions against brute force."""
import numpy as np
import pytest

from mftg.rmq import SparseRangeTable


def brute(arr, axis, mode, lo, hi):
    op = np.min if mode == "min" else np.max
    window = arr[:, lo : hi + 1] if axis == 1 else arr[lo : hi + 1, :]
    return op(window, axis=axis)


class TestSparseRangeTable:
    @pytest.mark.parametrize("axis", [0, 1])
    @pytest.mark.parametrize("mode", ["min", "max"])
    def test_matches_brute_force(self, axis, mode):
        rng = np.random.default_rng(axis * 2 + (mode == "max"))
        for _ in range(20):
            rows = int(rng.integers(1, 12))
            cols = int(rng.integers(1, 12))
            arr = rng.normal(size=(rows, cols))
            table = SparseRangeTable(arr, axis=axis, mode=mode)
            length = arr.shape[axis]
            for _ in range(30):
                lo = int(rng.integers(0, length))
                hi = int(rng.integers(lo, length))
                got = table.query(lo, hi)
                want = brute(arr, axis, mode, lo, hi)
                assert np.array_equal(got, want)

    def test_single_element_window(self):
        arr = np.arange(12.0).reshape(3, 4)
        table = SparseRangeTable(arr, axis=1, mode="min")
        assert np.array_equal(table.query(2, 2), arr[:, 2])

    def test_full_window(self):
        arr = np.arange(12.0).reshape(3, 4)
        assert np.array_equal(
            SparseRangeTable(arr, axis=0, mode="max").query(0, 2), arr.max(axis=0)
        )

    def test_queries_do_not_mutate_levels(self):
        arr = np.ones((2, 8))
        table = SparseRangeTable(arr, axis=1, mode="max")
        before = [lvl.copy() for lvl in table._levels]
        table.query(1, 6)
        for a, b in zip(before, table._levels):
            assert np.array_equal(a, b)

    def test_invalid_construction(self):
        with pytest.raises(ValueError):
            SparseRangeTable(np.ones((2, 2)), axis=2, mode="min")
        with pytest.raises(ValueError):
            SparseRangeTable(np.ones((2, 2)), axis=0, mode="mean")
        with pytest.raises(ValueError):
            SparseRangeTable(np.ones(4), axis=0, mode="min")

    def test_invalid_window(self):
        table = SparseRangeTable(np.ones((2, 4)), axis=1, mode="min")
        with pytest.raises(ValueError):
            table.query(2, 1)
        with pytest.raises(ValueError):
            table.query(0, 4)
