"""Covers of approximant spectra, Hausdorff-sum and box-counting dimension
estimates, Thouless scaling tables, continuity fits and Aubry-Andre checks.

Spectra for irrational alpha are never computed directly: every quantity
here is built from the union spectra at the canonical approximants p_n/q_n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .bands import BandSet, directed_distance
from .contfrac import Convergent, convergents
from .errors import InsufficientData
from .model import CoefficientFamily, amo
from .spectral import union_spectrum

CATALAN = 0.915965594177219015054603514932
THOULESS_C = 32 * CATALAN / math.pi
LAST_BOUND = 8 * math.e
DEFAULT_T_GRID = tuple(round(0.5 + 0.05 * i, 2) for i in range(11))

SpectrumFn = Callable[[CoefficientFamily, Fraction, float], BandSet]


def _default_spectrum(family, frac, tol):
    return union_spectrum(family, frac, tol)


# ---------------------------------------------------------------------------
# covers


@dataclass(frozen=True, eq=False)
class CoverReport:
    q: int
    C: float
    delta: float
    intervals: np.ndarray          # merged inflated intervals w_m
    band_measure: float
    band_count: int
    t_sums: dict = field(default_factory=dict)

    @property
    def lengths(self) -> np.ndarray:
        return self.intervals[:, 1] - self.intervals[:, 0]

    @property
    def count(self) -> int:
        return len(self.intervals)

    @property
    def total_length(self) -> float:
        return float(np.sum(self.lengths))

    def contains(self, energies) -> np.ndarray:
        return BandSet(self.intervals).contains(energies)


def cover_delta(q: int, C: float) -> float:
    return C * math.log(q) / q**2


def inflate_cover(bands: BandSet, q: int, C: float = 2.0, points=(), t_grid=DEFAULT_T_GRID) -> CoverReport:
    """Each band [E1, E2] becomes [E1 - delta, E2 + delta] with delta = C ln q / q^2.

    ``points`` (isolated eigenvalues) become [E - delta, E + delta].
    Overlapping intervals are merged before any sum is taken.
    """
    if q < 2:
        raise ValueError("q must be >= 2")
    if C <= 0:
        raise ValueError("C must be positive")
    delta = cover_delta(q, C)
    pts = np.asarray(points, float).reshape(-1)
    raw = np.concatenate([bands.intervals, np.stack([pts, pts], axis=1)]) if pts.size else bands.intervals
    merged = BandSet.from_intervals(raw + np.array([-delta, delta])).intervals
    n_pieces = len(raw)
    rep = CoverReport(q, float(C), delta, merged, bands.measure, n_pieces)
    lengths = rep.lengths
    assert np.all(lengths >= 2 * delta * (1 - 1e-12))
    assert rep.count <= n_pieces
    # merging can only shrink the naive total
    assert rep.total_length <= bands.measure + 2 * delta * n_pieces + 1e-12
    for t in t_grid:
        rep.t_sums[float(t)] = float(np.sum(lengths ** t))
    return rep


@dataclass(frozen=True)
class HausdorffSum:
    t: float
    value: float
    holder_bound: float
    n_terms: int


def hausdorff_sum(cover: CoverReport, t: float) -> HausdorffSum:
    """Sum |w_m|^t and its Holder bound N^(1-t) (sum |w_m|)^t with N = max(q, count).

    With N >= count the inequality is Holder's for N terms (padding with
    zeros), so it holds even when isolated-point intervals push the count past q.
    """
    if not 0 < t <= 1:
        raise ValueError("t must lie in (0, 1]")
    lengths = cover.lengths
    value = float(np.sum(lengths ** t))
    n = max(cover.q, cover.count)
    bound = float(n ** (1 - t) * np.sum(lengths) ** t)
    assert value <= bound * (1 + 1e-12), (value, bound)
    return HausdorffSum(float(t), value, bound, n)


# ---------------------------------------------------------------------------
# dimension estimate


@dataclass
class DimensionEstimate:
    q_list: list[int]
    t_grid: list[float]
    sums: np.ndarray            # (len(q_list), len(t_grid))
    t_star: float | None
    box_slope: float
    box_counts: list[int]
    box_sizes: list[float]
    covers: list[CoverReport] = field(repr=False, default_factory=list)

    def decreasing_tail(self, t: float, last: int = 3) -> bool:
        j = self.t_grid.index(t)
        col = self.sums[-last:, j]
        return bool(np.all(np.diff(col) < 0))


def _box_count(cover: CoverReport, eps: float) -> int:
    """Number of grid cells of width eps meeting the cover."""
    lo = np.floor(cover.intervals[:, 0] / eps).astype(np.int64)
    hi = np.floor(cover.intervals[:, 1] / eps).astype(np.int64)
    # intervals are disjoint and sorted, so only neighbours can share a cell
    total = int(np.sum(hi - lo + 1))
    total -= int(np.sum(lo[1:] == hi[:-1]))
    return total


def dim_upper_estimate(family: CoefficientFamily, alpha, q_list: Sequence[int] | None = None,
                       t_grid=DEFAULT_T_GRID, C: float = 2.0, q_max: int = 610, tol: float = 1e-9,
                       spectrum: SpectrumFn | None = None) -> DimensionEstimate:
    """Upper estimates on the Hausdorff dimension of the limiting spectrum.

    (a) t* is the smallest t on the grid whose cover sum decreases over the
    last three approximants.  (b) The box slope is the least-squares slope of
    ln N(eps) against ln(1/eps) with eps = 2 delta_q and N(eps) the number of
    eps-cells meeting the q-th cover.
    """
    spectrum = spectrum or _default_spectrum
    convs = _convergent_table(alpha, q_max)
    by_q = {c.q: c for c in convs}
    if q_list is None:
        q_list = [c.q for c in convs if c.q >= 2]
    q_list = list(q_list)
    if len(q_list) < 3:
        raise InsufficientData(f"need at least 3 approximants, got {len(q_list)}")
    if any(b <= a for a, b in zip(q_list, q_list[1:])):
        raise ValueError("q_list must be strictly increasing")
    t_grid = [float(t) for t in t_grid]
    covers = []
    for q in q_list:
        frac = by_q[q].fraction if q in by_q else None
        if frac is None:
            raise ValueError(f"{q} is not a convergent denominator of the given alpha")
        covers.append(inflate_cover(spectrum(family, frac, tol), q, C, t_grid=t_grid))
    sums = np.array([[cv.t_sums[t] for t in t_grid] for cv in covers])
    t_star = None
    for j, t in enumerate(t_grid):
        if np.all(np.diff(sums[-3:, j]) < 0):
            t_star = t
            break
    eps = [2 * cv.delta for cv in covers]
    counts = [_box_count(cv, e) for cv, e in zip(covers, eps)]
    slope = float(np.polyfit(np.log(1 / np.array(eps)), np.log(counts), 1)[0])
    return DimensionEstimate(q_list, t_grid, sums, t_star, slope, counts, eps, covers)


def _convergent_table(alpha, q_max: int) -> list[Convergent]:
    out = []
    n = 1
    while True:
        conv = convergents(alpha, n)
        if conv[-1].q > q_max:
            return out
        out = conv
        n += 1


# ---------------------------------------------------------------------------
# scaling tables


@dataclass(frozen=True)
class ScalingRow:
    n: int
    p: int
    q: int
    measure: float

    @property
    def q_measure(self) -> float:
        return self.q * self.measure


@dataclass
class ScalingTable:
    rows: list[ScalingRow]
    lam: float = 1.0
    reference: float = THOULESS_C

    def __post_init__(self):
        self.rows = sorted(self.rows, key=lambda r: r.q)
        if self.lam == 1.0:
            for r in self.rows:
                if not r.q_measure < LAST_BOUND:
                    raise AssertionError(f"q|sigma| = {r.q_measure} at q={r.q} violates the 8e bound")

    def relative_error(self) -> np.ndarray:
        return np.array([abs(r.q_measure - self.reference) / self.reference for r in self.rows])

    def trend_toward_reference(self, last: int = 3, lag: int = 3) -> bool:
        """Each of the last rows is closer to the reference than the row ``lag`` steps earlier.

        Golden-mean denominators cycle through parities with period 3 (every
        third one is even, with a closed central gap), and q|sigma| oscillates
        with that period; comparing within a parity class removes the oscillation.
        """
        err = [abs(r.q_measure - self.reference) for r in self.rows]
        if len(err) < last + lag:
            raise InsufficientData(f"need at least {last + lag} rows")
        return all(err[i] < err[i - lag] for i in range(len(err) - last, len(err)))


def thouless_scaling_table(alpha="golden", n_max: int = 15, tol: float = 1e-9, lam: float = 1.0,
                           spectrum: SpectrumFn | None = None) -> ScalingTable:
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    spectrum = spectrum or _default_spectrum
    fam = amo(lam)
    rows = []
    for c in convergents(alpha, n_max):
        bs = spectrum(fam, c.fraction, tol)
        rows.append(ScalingRow(c.n, c.p, c.q, bs.measure))
    return ScalingTable(rows, lam)


# ---------------------------------------------------------------------------
# continuity


@dataclass
class ContinuityFit:
    rows: list[tuple[int, int, int, float, float]]   # (j, q_j, q_{j+1}, |alpha_j - alpha_{j+1}|, d_j)
    gamma: float
    K: float
    family: str

    @property
    def note(self) -> str:
        return (f"fitted gamma = {self.gamma:.4f}; an almost-Lipschitz modulus predicts gamma near 1 "
                f"(up to a log factor), the generic Holder-1/2 modulus predicts 0.5")


def continuity_fit(family: CoefficientFamily, alpha="golden", n_range=range(6, 13), tol: float = 1e-9,
                   spectrum: SpectrumFn | None = None) -> ContinuityFit:
    """Fit d_j ~ K |alpha_j - alpha_{j+1}|^gamma over consecutive approximants.

    d_j = sup over E in sigma(M_{alpha_{j+1}}) of the distance to sigma(M_{alpha_j}).
    """
    spectrum = spectrum or _default_spectrum
    js = list(n_range)
    if len(js) < 4:
        raise InsufficientData("need at least 4 consecutive approximants")
    conv = convergents(alpha, max(js) + 1)
    spec = {}
    for j in js + [max(js) + 1]:
        spec[j] = spectrum(family, conv[j - 1].fraction, tol)
    rows = []
    for j in js:
        a, b = conv[j - 1].fraction, conv[j].fraction
        d = directed_distance(spec[j + 1], spec[j])
        rows.append((j, conv[j - 1].q, conv[j].q, float(abs(a - b)), d))
    x = np.log([r[3] for r in rows])
    y = np.log([max(r[4], 1e-300) for r in rows])
    gamma, logK = np.polyfit(x, y, 1)
    return ContinuityFit(rows, float(gamma), float(math.exp(logK)), family.name)


# ---------------------------------------------------------------------------
# Aubry-Andre


@dataclass
class AubryAndreTable:
    lam: float
    rows: list[tuple[int, float, float]]  # (q, measure, |measure - 4|1 - lam||)

    @property
    def target(self) -> float:
        return 4 * abs(1 - self.lam)

    def deviations(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows])

    def decreasing(self, floor: float = 1e-9) -> bool:
        """Strictly decreasing deviations, except that once both neighbours sit below
        ``floor * target`` (round-off level) their order is not checked."""
        dev = self.deviations()
        lim = floor * self.target
        return all(b < a or (a <= lim and b <= lim) for a, b in zip(dev, dev[1:]))

    def final_relative(self) -> float:
        return self.rows[-1][2] / self.target


def aubry_andre_check(lam: float, alpha="golden", n_max: int = 13, tol: float = 1e-9,
                      spectrum: SpectrumFn | None = None) -> AubryAndreTable:
    if lam <= 0 or lam == 1:
        raise ValueError("need lambda > 0 and lambda != 1")
    spectrum = spectrum or _default_spectrum
    fam = amo(lam)
    rows = []
    for c in convergents(alpha, n_max):
        if c.q < 2:
            continue
        m = spectrum(fam, c.fraction, tol).measure
        rows.append((c.q, m, abs(m - 4 * abs(1 - lam))))
    return AubryAndreTable(float(lam), rows)


def cover_violations(family: CoefficientFamily, alpha, q_pairs_from: int, q_pairs_to: int, C: float,
                     tol: float = 1e-9, spectrum: SpectrumFn | None = None) -> list[tuple[int, int, float]]:
    """For consecutive approximants (j, j+1) with j in [from, to]: (q_j, q_{j+1}, excess), where
    excess > 0 means some point of sigma(M_{j+1}) escapes the C-cover built at q_j."""
    spectrum = spectrum or _default_spectrum
    conv = convergents(alpha, q_pairs_to + 1)
    out = []
    for j in range(q_pairs_from, q_pairs_to + 1):
        cj, cn = conv[j - 1], conv[j]
        if cj.q < 2:
            continue
        cover = inflate_cover(spectrum(family, cj.fraction, tol), cj.q, C)
        d = directed_distance(spectrum(family, cn.fraction, tol), BandSet(cover.intervals))
        out.append((cj.q, cn.q, d))
    return out
