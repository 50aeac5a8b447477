"""Finite unions of closed intervals on the real line."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class BandSet:
    """Sorted, pairwise disjoint closed intervals ``[lo, hi]``.

    Build through :meth:`from_intervals`, which sorts and merges intervals
    whose gap is at most ``tolerance``.  Point intervals (lo == hi) are kept.
    """

    intervals: np.ndarray
    tolerance: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_intervals(cls, intervals, tolerance: float = 0.0, meta=None) -> "BandSet":
        arr = np.asarray(intervals, dtype=float).reshape(-1, 2)
        if arr.size and np.any(arr[:, 1] < arr[:, 0]):
            raise ValueError("interval with hi < lo")
        return cls(_merge(arr, tolerance), float(tolerance), dict(meta or {}))

    @classmethod
    def empty(cls) -> "BandSet":
        return cls(np.zeros((0, 2)))

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(map(tuple, self.intervals.tolist()))

    def __repr__(self):
        body = ", ".join(f"[{lo:.6g}, {hi:.6g}]" for lo, hi in self)
        return f"BandSet({body})"

    @property
    def is_empty(self) -> bool:
        return len(self.intervals) == 0

    @property
    def lo(self) -> float:
        return float(self.intervals[0, 0])

    @property
    def hi(self) -> float:
        return float(self.intervals[-1, 1])

    @property
    def measure(self) -> float:
        return float(np.sum(self.intervals[:, 1] - self.intervals[:, 0])) if len(self) else 0.0

    @property
    def gaps(self) -> np.ndarray:
        """Open gaps between consecutive intervals as an (n-1, 2) array."""
        if len(self) < 2:
            return np.zeros((0, 2))
        return np.stack([self.intervals[:-1, 1], self.intervals[1:, 0]], axis=1)

    def is_normalized(self) -> bool:
        iv = self.intervals
        if iv.size == 0:
            return True
        return bool(np.all(iv[:, 1] >= iv[:, 0]) and np.all(iv[1:, 0] > iv[:-1, 1]))

    def renormalize(self, tolerance=None) -> "BandSet":
        tol = self.tolerance if tolerance is None else tolerance
        return BandSet.from_intervals(self.intervals, tol, self.meta)

    def union(self, other: "BandSet", tolerance: float = 0.0) -> "BandSet":
        return BandSet.from_intervals(np.concatenate([self.intervals, other.intervals]), tolerance)

    def inflate(self, radius: float) -> "BandSet":
        iv = self.intervals + np.array([-radius, radius])
        return BandSet.from_intervals(iv, self.tolerance)

    def contains(self, energies, slack: float = 0.0):
        return point_distance(energies, self) <= slack

    def point_distance(self, energies):
        return point_distance(energies, self)

    def to_list(self) -> list[list[float]]:
        return self.intervals.tolist()

    def allclose(self, other: "BandSet", atol: float) -> bool:
        return len(self) == len(other) and bool(np.allclose(self.intervals, other.intervals, rtol=0, atol=atol))


def _merge(arr: np.ndarray, tolerance: float) -> np.ndarray:
    if arr.size == 0:
        return np.zeros((0, 2))
    arr = arr[np.lexsort((arr[:, 1], arr[:, 0]))]
    # a new run starts where the interval begins beyond everything seen so far
    running_hi = np.maximum.accumulate(arr[:, 1])
    starts = np.ones(len(arr), dtype=bool)
    starts[1:] = arr[1:, 0] > running_hi[:-1] + tolerance
    idx = np.flatnonzero(starts)
    ends = np.append(idx[1:], len(arr)) - 1
    return np.stack([arr[idx, 0], running_hi[ends]], axis=1)


def measure(bs: BandSet) -> float:
    return bs.measure


def point_distance(energies, bs: BandSet):
    """Distance from each energy to the closed set ``bs`` (scalar in, scalar out)."""
    if bs.is_empty:
        raise ValueError("distance to an empty BandSet")
    e = np.asarray(energies, dtype=float)
    lo, hi = bs.intervals[:, 0], bs.intervals[:, 1]
    # index of the last interval starting at or before e
    j = np.searchsorted(lo, e, side="right") - 1
    jc = np.clip(j, 0, len(lo) - 1)
    d_left = np.where(j >= 0, np.maximum(e - hi[jc], 0.0), np.inf)
    jn = np.clip(j + 1, 0, len(lo) - 1)
    d_right = np.where(j + 1 < len(lo), lo[jn] - e, np.inf)
    d = np.minimum(d_left, np.maximum(d_right, 0.0))
    return float(d) if d.ndim == 0 else d


def directed_distance(a: BandSet, b: BandSet) -> float:
    """sup over E in ``a`` of the distance from E to ``b``."""
    if a.is_empty or b.is_empty:
        raise ValueError("directed distance involving an empty BandSet")
    cands = [a.intervals.ravel()]
    g = b.gaps
    if len(g):
        mids = g.mean(axis=1)
        inside = a.contains(mids)
        cands.append(mids[inside])
    pts = np.concatenate(cands)
    return float(np.max(point_distance(pts, b)))


def hausdorff_distance(a: BandSet, b: BandSet) -> float:
    if a.is_empty or b.is_empty:
        raise ValueError("Hausdorff distance is undefined for an empty BandSet")
    return max(directed_distance(a, b), directed_distance(b, a))
