"""Band structure of periodic (rational-frequency) Jacobi operators.

For alpha = p/q the operator at phase theta is q-periodic and its spectrum is
``{E : |Delta(E, theta)| <= 2}`` with ``Delta`` the trace of the q-step
transfer matrix.  Band edges are read off as Floquet eigenvalues at Bloch
momenta 0 and pi.  The direct sum over theta is handled in two ways:

* ``exact``: for families whose v and b have trigonometric degree <= 1 the
  Floquet determinant is

      det(E - H(theta, k)) = G0(E) + g1 cos psi + g2 sin psi - 2 cos(k) Pi(psi),

  with psi = 2 pi q theta, Pi = prod b_n, and g1, g2 independent of E and k.
  The union over theta is then ``{J_lo <= G0(E) <= J_hi}``, whose edges are
  Floquet eigenvalues at two extremal phases.  For the almost Mathieu family
  this is Chambers' relation; the extremal phases are theta = 0 and 1/(2q).
* ``sweep``: Lipschitz branch-and-bound over theta using the eigenvalue
  motion bound sup|v'| + 2 sup|b'|.  It returns a certified over-approximation
  and serves as the independent check of the exact path.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

import numpy as np
import scipy.linalg as sla

from .bands import BandSet
from .errors import BudgetExceeded, Inconclusive, SingularPhase
from .model import CoefficientFamily, period_coeffs

log = logging.getLogger(__name__)

SINGULAR_THRESHOLD = 1e-12
BANDED_ABOVE = 1000
# closed gaps (e.g. E = 0 for even q) come out of the eigensolver as ~1e-15 slivers
EDGE_MERGE_TOL = 1e-11


def as_fraction(frac) -> Fraction:
    if isinstance(frac, str):
        frac = Fraction(frac)
    f = Fraction(frac)
    if f.denominator < 1:
        raise ValueError("bad fraction")
    return f


# ---------------------------------------------------------------------------
# Floquet matrices


def floquet_matrices(v, b, k) -> np.ndarray:
    """Bloch matrices for coefficient arrays of shape (..., q).

    Real dtype when every k is 0 or pi.
    """
    v = np.asarray(v, dtype=float)
    b = np.asarray(b, dtype=float)
    q = v.shape[-1]
    k = np.asarray(k, dtype=float)
    phase = np.exp(1j * k)
    real = bool(np.all(np.isin(k, (0.0, math.pi))))
    if real:
        phase = np.round(phase.real)
    phase = np.broadcast_to(phase, v.shape[:-1])
    dtype = float if real else complex
    H = np.zeros(v.shape + (q,), dtype=dtype)
    idx = np.arange(q)
    H[..., idx, idx] = v
    if q > 1:
        i = np.arange(q - 1)
        H[..., i, i + 1] += b[..., :-1]
        H[..., i + 1, i] += b[..., :-1]
    corner = b[..., -1] * phase
    H[..., q - 1, 0] += corner
    H[..., 0, q - 1] += np.conj(corner)
    return H


def _interleave_order(q: int) -> np.ndarray:
    # 0, q-1, 1, q-2, ...: every periodic bond then sits within bandwidth 2
    order = np.empty(q, dtype=int)
    order[0::2] = np.arange((q + 1) // 2)
    order[1::2] = q - 1 - np.arange(q // 2)
    return order


def _banded_eigvalsh(v, b, k) -> np.ndarray:
    q = len(v)
    H = floquet_matrices(v, b, k)
    order = _interleave_order(q)
    P = H[np.ix_(order, order)]
    ab = np.zeros((3, q), dtype=P.dtype)
    for d in range(3):
        ab[2 - d, d:] = np.diagonal(P, offset=d)
    return sla.eig_banded(ab, eigvals_only=True, lower=False)


def floquet_eigvalsh(v, b, k, method: str = "auto") -> np.ndarray:
    """Sorted eigenvalues of the Bloch matrix (``dense``, ``banded`` or ``auto``)."""
    q = np.shape(v)[-1]
    if method == "auto":
        method = "banded" if q > BANDED_ABOVE and np.ndim(v) == 1 else "dense"
    if method == "banded":
        return _banded_eigvalsh(np.asarray(v, float), np.asarray(b, float), k)
    return np.linalg.eigvalsh(floquet_matrices(v, b, k))


@dataclass(frozen=True, eq=False)
class FloquetMatrix:
    q: int
    entries: np.ndarray
    theta: float
    k: float

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))


def floquet(family: CoefficientFamily, frac, theta: float, k: float) -> FloquetMatrix:
    frac = as_fraction(frac)
    v, b = period_coeffs(family, frac, theta)
    return FloquetMatrix(frac.denominator, floquet_matrices(v, b, k), float(theta) % 1.0, float(k))


# ---------------------------------------------------------------------------
# transfer matrices and the discriminant


def transfer_period(family: CoefficientFamily, frac, theta: float, E: float,
                    threshold: float = SINGULAR_THRESHOLD) -> np.ndarray:
    """The q-step transfer matrix A_q^E(theta) for alpha = p/q."""
    frac = as_fraction(frac)
    v, b = period_coeffs(family, frac, theta)
    bad = np.flatnonzero(np.abs(b) <= threshold)
    if bad.size:
        raise SingularPhase(
            f"b_{bad[0]}(theta) = {b[bad[0]]:.3g} vanishes; use fiber_spectrum's block path",
            step=int(bad[0]),
        )
    q = len(v)
    M = np.eye(2)
    for n in range(q):
        A = np.array([[E - v[n], -b[n - 1]], [b[n], 0.0]]) / b[n]
        M = A @ M
    return M


def discriminant(family: CoefficientFamily, frac, theta: float, E: float,
                 threshold: float = SINGULAR_THRESHOLD) -> float:
    """tr A_q^E(theta).  Its determinant telescopes to 1 over a full period."""
    M = transfer_period(family, frac, theta, E, threshold)
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    if not abs(det - 1.0) <= 1e-10 * max(1.0, float(np.max(np.abs(M))) ** 2):
        raise ArithmeticError(f"transfer-matrix determinant {det!r} deviates from 1")
    return float(M[0, 0] + M[1, 1])


# ---------------------------------------------------------------------------
# single fibers


def _edges_from_eigs(e0: np.ndarray, epi: np.ndarray) -> np.ndarray:
    """Pair the sorted union of k=0 and k=pi eigenvalues into bands (last axis)."""
    e = np.sort(np.concatenate([e0, epi], axis=-1), axis=-1)
    return e.reshape(e.shape[:-1] + (-1, 2))


def fiber_bands(v, b, method="auto") -> np.ndarray:
    e0 = floquet_eigvalsh(v, b, 0.0, method)
    epi = floquet_eigvalsh(v, b, math.pi, method)
    return _edges_from_eigs(e0, epi)


def _block_eigenvalues(v: np.ndarray, b: np.ndarray, cut: np.ndarray) -> np.ndarray:
    """Eigenvalues of the finite blocks left when the bonds in ``cut`` are removed (cyclically)."""
    q = len(v)
    cuts = np.sort(cut)
    out = []
    for i, c in enumerate(cuts):
        end = cuts[(i + 1) % len(cuts)]
        # block occupies sites c+1, ..., end (cyclic); a single cut gives the whole ring opened once
        length = (end - c) % q or q
        sites = (c + 1 + np.arange(length)) % q
        bonds = sites[:-1]
        d = v[sites]
        e = b[bonds]
        if length == 1:
            out.append(d)
        else:
            out.append(sla.eigvalsh_tridiagonal(d, e))
    return np.sort(np.concatenate(out))


def fiber_spectrum(family: CoefficientFamily, frac, theta: float,
                   threshold: float = SINGULAR_THRESHOLD, method: str = "auto") -> BandSet:
    """Spectrum of the single periodic operator at phase ``theta``.

    If some |b_n(theta)| <= threshold the operator splits into copies of
    finite blocks and the spectrum is the finite set of their eigenvalues,
    returned as point intervals.
    """
    frac = as_fraction(frac)
    v, b = period_coeffs(family, frac, theta)
    cut = np.flatnonzero(np.abs(b) <= threshold)
    if cut.size:
        pts = _block_eigenvalues(v, b, cut)
        return BandSet.from_intervals(np.stack([pts, pts], axis=1), meta={"singular": True})
    return BandSet.from_intervals(fiber_bands(v, b, method), EDGE_MERGE_TOL, meta={"singular": False})


# ---------------------------------------------------------------------------
# union over theta


def union_spectrum(family: CoefficientFamily, frac, tol: float = 1e-9, method: str = "auto",
                   max_cells: int = 400_000) -> BandSet:
    """A BandSet covering the spectrum of the direct sum over theta.

    ``method='exact'`` needs trigonometric degree <= 1 (almost Mathieu and
    chiral families) and is accurate to eigensolver round-off.
    ``method='sweep'`` returns U with sigma contained in U and
    |U| - |sigma| <= tol, or raises BudgetExceeded after ``max_cells`` cells.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    frac = as_fraction(frac)
    if method == "auto":
        deg = family.trig_degree
        method = "exact" if deg is not None and deg <= 1 else "sweep"
    if method == "exact":
        return _exact_union(family, frac)
    if method == "sweep":
        return _sweep_union(family, frac, tol, max_cells)
    raise ValueError(f"unknown method {method!r}")


def _theta_for_psi(family: CoefficientFamily, q: int, psi: float) -> float:
    return (psi / (2 * math.pi * q) - family.phase_offset) % 1.0


@dataclass
class _DegreeOneData:
    g: np.ndarray   # (g1, g2), E-independent oscillation of G
    pi: np.ndarray  # (pi0, pi1, pi2), Fourier coefficients of prod b_n
    residual: float


def _fit_degree_one(family: CoefficientFamily, frac: Fraction, samples: int = 8) -> _DegreeOneData:
    q = frac.denominator
    psi = 2 * math.pi * np.arange(samples) / samples
    thetas = np.array([_theta_for_psi(family, q, s) for s in psi])
    V, B = period_coeffs(family, frac, thetas)
    Hk = floquet_matrices(V, B, math.pi / 2)
    # det at k = pi/2 kills the Pi term; pick the energy keeping |G| smallest
    radius = float(np.max(np.abs(V)) + 2 * np.max(np.abs(B)))
    best = None
    for E in np.linspace(-0.5, 0.5, 5) * radius:
        sign, logdet = np.linalg.slogdet(E * np.eye(q) - Hk)
        if best is None or logdet.max() < best[2].max():
            best = (E, sign.real, logdet)
    _, sign, logdet = best
    pi_sign = np.prod(np.sign(B), axis=1)
    with np.errstate(divide="ignore"):
        pi_log = np.sum(np.log(np.abs(B)), axis=1)
    scale = max(float(np.max(logdet)), float(np.max(pi_log)))
    G = sign * np.exp(logdet - scale)
    Pi = pi_sign * np.exp(pi_log - scale)
    X = np.stack([np.ones_like(psi), np.cos(psi), np.sin(psi)], axis=1)
    cg, *_ = np.linalg.lstsq(X, G, rcond=None)
    cp, *_ = np.linalg.lstsq(X, Pi, rcond=None)
    resid = max(np.max(np.abs(X @ cg - G)), np.max(np.abs(X @ cp - Pi)))
    return _DegreeOneData(g=cg[1:], pi=cp, residual=float(resid))


def _extremal_psi(d: _DegreeOneData) -> tuple[float, float]:
    """Phases maximizing 2|Pi| - g and minimizing -2|Pi| - g."""
    g1, g2 = d.g
    p0, p1, p2 = d.pi
    cands = list(np.linspace(0, 2 * math.pi, 721)[:-1])
    r = math.hypot(p1, p2)
    if r > 0 and abs(p0) <= r:
        base = math.atan2(p2, p1)
        dev = math.acos(max(-1.0, min(1.0, -p0 / r)))
        cands += [base + dev, base - dev]
    for s in (1.0, -1.0):
        cands.append(math.atan2(2 * s * p2 - g2, 2 * s * p1 - g1))
        cands.append(math.atan2(2 * s * p2 + g2, 2 * s * p1 + g1) + math.pi)
    psi = np.mod(np.array(cands), 2 * math.pi)
    Pi = p0 + p1 * np.cos(psi) + p2 * np.sin(psi)
    g = g1 * np.cos(psi) + g2 * np.sin(psi)
    h_hi = 2 * np.abs(Pi) - g
    h_lo = -2 * np.abs(Pi) - g
    return float(psi[np.argmax(h_hi)]), float(psi[np.argmin(h_lo)])


def _exact_union(family: CoefficientFamily, frac: Fraction) -> BandSet:
    q = frac.denominator
    if family.trig_degree is None or family.trig_degree > 1:
        raise ValueError("the exact union needs trigonometric degree <= 1")
    if family.kind == "amo":
        psi_hi, psi_lo = 0.0, math.pi
        resid = 0.0
    else:
        d = _fit_degree_one(family, frac)
        if d.residual > 1e-8:
            log.warning("degree-one fit residual %.3g for %s at %s", d.residual, family.name, frac)
        psi_hi, psi_lo = _extremal_psi(d)
        resid = d.residual
    th_hi = _theta_for_psi(family, q, psi_hi)
    th_lo = _theta_for_psi(family, q, psi_lo)
    v, b = period_coeffs(family, frac, th_hi)
    k_hi = 0.0 if np.prod(np.sign(b)) >= 0 else math.pi
    upper = floquet_eigvalsh(v, b, k_hi)
    v, b = period_coeffs(family, frac, th_lo)
    k_lo = math.pi if np.prod(np.sign(b)) >= 0 else 0.0
    lower = floquet_eigvalsh(v, b, k_lo)
    bands = _edges_from_eigs(upper, lower)
    return BandSet.from_intervals(
        bands, EDGE_MERGE_TOL, meta={"method": "exact", "theta_hi": th_hi, "theta_lo": th_lo, "fit_residual": resid},
    )


def _sweep_union(family: CoefficientFamily, frac: Fraction, tol: float, max_cells: int) -> BandSet:
    q = frac.denominator
    lip = family.motion_bound
    period = 1.0 / q
    n_edges = 2 * q
    eps = tol / n_edges
    signs = np.tile([-1.0, 1.0], q)  # maximize -lower edges and +upper edges

    def evaluate(thetas):
        V, B = period_coeffs(family, frac, thetas)
        e0 = np.linalg.eigvalsh(floquet_matrices(V, B, 0.0))
        epi = np.linalg.eigvalsh(floquet_matrices(V, B, math.pi))
        return np.sort(np.concatenate([e0, epi], axis=-1), axis=-1) * signs

    n0 = 32
    grid = np.linspace(0.0, period, n0 + 1)
    vals = evaluate(grid)
    best = vals.max(axis=0)
    a, b = grid[:-1], grid[1:]
    fa, fb = vals[:-1], vals[1:]
    evaluated = len(grid)
    finished_bound = np.full(n_edges, -np.inf)
    while True:
        bound = 0.5 * (fa + fb) + 0.5 * lip * (b - a)[:, None]
        active = np.any(bound > best + eps, axis=1)
        if np.any(~active):
            finished_bound = np.maximum(finished_bound, bound[~active].max(axis=0))
        if not np.any(active):
            break
        a, b, fa, fb = a[active], b[active], fa[active], fb[active]
        if evaluated + len(a) > max_cells:
            raise BudgetExceeded(
                f"theta-sweep for {family.name} at {frac} needs more than {max_cells} evaluations for tol={tol:g}"
            )
        mid = 0.5 * (a + b)
        fm = evaluate(mid)
        evaluated += len(mid)
        best = np.maximum(best, fm.max(axis=0))
        a, b = np.concatenate([a, mid]), np.concatenate([mid, b])
        fa, fb = np.concatenate([fa, fm]), np.concatenate([fm, fb])
    outer = np.maximum(finished_bound, best) * signs
    inner = best * signs
    bands = outer.reshape(q, 2)
    excess = float(np.sum(np.abs(outer - inner)))
    return BandSet.from_intervals(
        bands, EDGE_MERGE_TOL,
        meta={"method": "sweep", "evaluations": evaluated, "certified_excess": excess,
              "inner": inner.reshape(q, 2).tolist()},
    )


# ---------------------------------------------------------------------------
# integrated density of states


@dataclass(frozen=True, eq=False)
class IDSample:
    energies: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.values) >= 0))

    def __call__(self, E):
        return np.interp(E, self.energies, self.values)


def floquet_eigenvalue_samples(family: CoefficientFamily, frac, theta_samples: int = 64,
                               k_samples: int = 128, chunk: int = 4096) -> np.ndarray:
    """Eigenvalues on a midpoint grid of (theta, k) in [0, 1/q) x (0, pi); shape (samples, q)."""
    frac = as_fraction(frac)
    q = frac.denominator
    thetas = (np.arange(theta_samples) + 0.5) / (theta_samples * q)
    ks = (np.arange(k_samples) + 0.5) * math.pi / k_samples
    TH, K = np.meshgrid(thetas, ks, indexing="ij")
    TH, K = TH.ravel(), K.ravel()
    out = []
    for s in range(0, len(TH), chunk):
        V, B = period_coeffs(family, frac, TH[s:s + chunk])
        out.append(np.linalg.eigvalsh(floquet_matrices(V, B, K[s:s + chunk])))
    return np.concatenate(out)


def ids(family: CoefficientFamily, frac, E_grid, theta_samples: int = 64, k_samples: int = 128) -> IDSample:
    """N(E) as the sampled fraction of Floquet eigenvalues <= E."""
    grid = np.asarray(E_grid, dtype=float)
    if np.any(np.diff(grid) < 0):
        raise ValueError("energy grid must be sorted")
    eig = np.sort(floquet_eigenvalue_samples(family, frac, theta_samples, k_samples).ravel())
    values = np.searchsorted(eig, grid, side="right") / eig.size
    return IDSample(grid, values, {"frac": str(as_fraction(frac)), "theta_samples": theta_samples,
                                   "k_samples": k_samples, "family": family.name})


# ---------------------------------------------------------------------------
# butterfly


@dataclass(frozen=True, eq=False)
class ButterflyEntry:
    frac: Fraction
    bands: BandSet | None
    error: str | None = None


def farey_fractions(q_max: int) -> list[Fraction]:
    """Reduced p/q with 1 <= p < q <= q_max, sorted by value."""
    if q_max < 2:
        raise ValueError("q_max must be >= 2")
    return sorted(Fraction(p, q) for q in range(2, q_max + 1) for p in range(1, q) if gcd(p, q) == 1)


def _butterfly_one(args):
    family, frac, tol, method = args
    try:
        return ButterflyEntry(frac, union_spectrum(family, frac, tol, method))
    except BudgetExceeded as exc:
        return ButterflyEntry(frac, None, str(exc))


def union_spectra(family: CoefficientFamily, fracs, tol: float = 1e-9, method: str = "auto",
                  workers: int = 1) -> list[ButterflyEntry]:
    """union_spectrum over many fractions; result order follows ``fracs`` for any worker count."""
    jobs = [(family, Fraction(f), tol, method) for f in fracs]
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_butterfly_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [_butterfly_one(j) for j in jobs]


def butterfly(family: CoefficientFamily, q_max: int, tol: float = 1e-9, method: str = "auto",
              workers: int = 1, spectrum=None) -> list[ButterflyEntry]:
    """Union spectra for every Farey fraction up to ``q_max``; failures are flagged, not raised.

    ``spectrum(family, frac, tol)`` may replace :func:`union_spectrum` (the
    CLI passes its cached version); it is then called sequentially.
    """
    fracs = farey_fractions(q_max)
    if spectrum is None:
        return union_spectra(family, fracs, tol, method, workers)
    out = []
    for f in fracs:
        try:
            out.append(ButterflyEntry(f, spectrum(family, f, tol)))
        except BudgetExceeded as exc:
            out.append(ButterflyEntry(f, None, str(exc)))
    return out


# ---------------------------------------------------------------------------
# half-line finite sections


@dataclass(frozen=True)
class HalflineReport:
    gaps: tuple            # ((gap_lo, gap_hi, count), ...)
    below: int             # isolated eigenvalues under the spectrum
    above: int
    n_used: int
    theta: float

    @property
    def max_per_gap(self) -> int:
        return max((c for *_, c in self.gaps), default=0)


def _halfline_count(family, frac, theta, n, fiber, buffer):
    from .model import sample_phases

    phases = sample_phases(family, frac, theta, np.arange(n))
    d = family.v(phases)
    e = family.b(phases)[:-1]
    eig = sla.eigvalsh_tridiagonal(d, e)
    dist = fiber.point_distance(eig)
    iso = eig[dist > buffer]
    gaps = fiber.gaps
    counts = []
    for lo, hi in gaps:
        counts.append((float(lo), float(hi), int(np.sum((iso > lo) & (iso < hi)))))
    below = int(np.sum(iso < fiber.lo))
    above = int(np.sum(iso > fiber.hi))
    return tuple(counts), below, above


def halfline_gap_count(family: CoefficientFamily, frac, theta: float, n_trunc: int,
                       buffer: float = 1e-6, threshold: float = SINGULAR_THRESHOLD) -> HalflineReport:
    """Isolated eigenvalues per spectral gap of the half-line operator, from finite sections.

    ``n_trunc`` is rounded down to a multiple of q so that the right cut of
    the section sits at the same phase as the left one; then the two ends
    together carry at most 2 eigenvalues per gap.  The count is repeated at a
    second size; if some gap holds more than 2 at both sizes, Inconclusive
    is raised.
    """
    frac = as_fraction(frac)
    q = frac.denominator
    v, b = period_coeffs(family, frac, theta)
    if np.any(np.abs(b) <= threshold):
        raise SingularPhase("half-line gap count needs all |b_n(theta)| above the singular threshold")
    n = max(q, (n_trunc // q) * q)
    fiber = fiber_spectrum(family, frac, theta)
    gaps, below, above = _halfline_count(family, frac, theta, n, fiber, buffer)
    report = HalflineReport(gaps, below, above, n, float(theta) % 1.0)
    if report.max_per_gap > 2:
        n2 = n + q * max(1, n // (2 * q))
        gaps2, *_ = _halfline_count(family, frac, theta, n2, fiber, buffer)
        if max((c for *_, c in gaps2), default=0) > 2:
            raise Inconclusive(f"more than 2 isolated eigenvalues in a gap at N={n} and N={n2}")
    return report
