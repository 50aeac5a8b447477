"""Exact phase-monomial calculus for the chiral gauge transform.

Operators act on the Fourier basis e_{k,m}(n, theta) = delta_{n,k} exp(2 pi i m theta)
of l^2(Z x T).  Each generator sends a basis state to a single basis state
times a phase exp(2 pi i (r + s alpha)) with r, s rational, so relations
between words can be checked with exact rational arithmetic, either with
alpha kept symbolic or specialized to a rational.

    T      : (k, m) -> (k - 1, m)
    T^-1   : (k, m) -> (k + 1, m)
    S^x    : (k, m) -> (k, m + x),       phase x k alpha
    U_x    : (k, m) -> (k, m + x k),     phase x k^2 alpha / 2
    R      : (k, m) -> (m, -k),          phase -k m alpha   (integer m only)

The numerical side (isospectrality of the doubled-frequency AMO and the
chiral model, and equality of their IDS) lives in :func:`isospectral_check`
and :func:`ids_equality_check`.  The reindexing n -> 2n that takes the
doubled-frequency operator to the even sublattice is implicit there: the
AMO is simply evaluated at 2p/q.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .bands import hausdorff_distance
from .contfrac import double_fraction
from .errors import HalfIntegerMode
from .model import amo, shifted_chiral_amo
from .spectral import ids, union_spectrum

SYMBOLIC = "symbolic"


@dataclass(frozen=True)
class PhaseExponent:
    """exp(2 pi i (r + s alpha)); r is kept in [0, 1)."""

    r: Fraction = Fraction(0)
    s: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "r", Fraction(self.r) % 1)
        object.__setattr__(self, "s", Fraction(self.s))

    def __add__(self, other: "PhaseExponent") -> "PhaseExponent":
        return PhaseExponent(self.r + other.r, self.s + other.s)

    def __neg__(self) -> "PhaseExponent":
        return PhaseExponent(-self.r, -self.s)

    def __sub__(self, other):
        return self + (-other)

    def specialize(self, alpha) -> Fraction | "PhaseExponent":
        """Exponent mod 1 at a rational alpha, or self when alpha is symbolic."""
        if alpha == SYMBOLIC:
            return self
        return (self.r + self.s * Fraction(alpha)) % 1

    def value(self, alpha: float) -> complex:
        return complex(np.exp(2j * np.pi * (float(self.r) + float(self.s) * float(alpha))))

    def __str__(self):
        return f"exp(2πi({self.r} + {self.s}α))"


ZERO_PHASE = PhaseExponent()


def alpha_phase(coef) -> PhaseExponent:
    """exp(2 pi i coef alpha); e.g. exp(i pi x alpha) is alpha_phase(x/2)."""
    return PhaseExponent(0, Fraction(coef))


@dataclass(frozen=True)
class BasisState:
    k: int
    m: Fraction

    def __post_init__(self):
        m = Fraction(self.m)
        if (2 * m).denominator != 1:
            raise ValueError(f"Fourier mode {m} is not in Z/2")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "m", m)


@dataclass(frozen=True)
class Generator:
    name: str           # "T", "Tinv", "S", "U", "R"
    x: Fraction = Fraction(1)

    def apply(self, state: BasisState) -> tuple[PhaseExponent, BasisState]:
        k, m, x = state.k, state.m, self.x
        if self.name == "T":
            return ZERO_PHASE, BasisState(k - 1, m)
        if self.name == "Tinv":
            return ZERO_PHASE, BasisState(k + 1, m)
        if self.name == "S":
            return alpha_phase(x * k), BasisState(k, m + x)
        if self.name == "U":
            return alpha_phase(x * k * k / 2), BasisState(k, m + x * k)
        if self.name == "R":
            if m.denominator != 1:
                raise HalfIntegerMode(f"R applied to half-integer mode m={m} (k={k})")
            return alpha_phase(-k * m), BasisState(int(m), -k)
        raise ValueError(f"unknown generator {self.name}")

    def __str__(self):
        if self.name == "S" and self.x != 1:
            return f"S^{self.x}"
        if self.name == "U":
            return f"U_{self.x}"
        return {"Tinv": "T⁻¹"}.get(self.name, self.name)


T = Generator("T")
TINV = Generator("Tinv")
R = Generator("R")


def S(x=1) -> Generator:
    return Generator("S", Fraction(x))


def U(x) -> Generator:
    x = Fraction(x)
    if x not in (Fraction(1, 2), Fraction(1)):
        raise ValueError("U_x is only defined here for x in {1/2, 1}")
    return Generator("U", x)


@dataclass(frozen=True)
class MonomialOp:
    """prefactor * word[0] * word[1] * ... (the last generator acts first)."""

    word: tuple[Generator, ...]
    prefactor: PhaseExponent = ZERO_PHASE

    def __mul__(self, other: "MonomialOp") -> "MonomialOp":
        return MonomialOp(self.word + other.word, self.prefactor + other.prefactor)

    def __str__(self):
        body = "".join(str(g) for g in self.word) or "1"
        return body if self.prefactor == ZERO_PHASE else f"{self.prefactor}·{body}"


def op(*gens: Generator, phase: PhaseExponent = ZERO_PHASE) -> MonomialOp:
    return MonomialOp(tuple(gens), phase)


Q_WORD = (U(1), R, U(Fraction(1, 2)))


def Q(*, u_outer=1, u_inner=Fraction(1, 2)) -> MonomialOp:
    """Q = U_1 R U_{1/2}; the keyword arguments exist for mutation tests."""
    return op(U(u_outer), R, U(u_inner))


def apply_word(operator: MonomialOp, state: BasisState) -> tuple[PhaseExponent, BasisState]:
    phase = operator.prefactor
    for g in reversed(operator.word):
        p, state = g.apply(state)
        phase = phase + p
    return phase, state


# ---------------------------------------------------------------------------
# relations


@dataclass
class RelationReport:
    name: str
    passed: int = 0
    skipped: int = 0
    failures: list = field(default_factory=list)  # (alpha, state, lhs result, rhs result)
    skipped_states: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures and self.passed > 0

    @property
    def status(self) -> str:
        return "PASS" if self.ok else "FAIL"

    def merge(self, other: "RelationReport") -> "RelationReport":
        return RelationReport(self.name, self.passed + other.passed, self.skipped + other.skipped,
                              self.failures + other.failures, self.skipped_states + other.skipped_states)


def _states(k_range: Iterable[int], m_range: Iterable) -> list[BasisState]:
    return [BasisState(k, m) for k, m in itertools.product(k_range, m_range)]


def _normalize(alphas):
    return [a if a == SYMBOLIC else Fraction(a) for a in alphas]


def _scale(ops: Sequence[MonomialOp]) -> int:
    """Common denominator making every exponent and mode an integer multiple of 1/N."""
    n = 4
    for o in ops:
        for d in [o.prefactor.r.denominator, o.prefactor.s.denominator] + [g.x.denominator for g in o.word]:
            n = math.lcm(n, 4 * d)
    return n


def _compile(o: MonomialOp, n: int):
    word = tuple((g.name, int(g.x * n)) for g in reversed(o.word))
    return word, int(o.prefactor.r * n), int(o.prefactor.s * n)


def _run(compiled, k: int, M: int, n: int):
    """Integer twin of apply_word: mode m = M/n, phase exponent (r + s alpha) = (r_n + s_n alpha)/n."""
    word, r, s = compiled
    for name, xn in word:
        if name == "T":
            k -= 1
        elif name == "Tinv":
            k += 1
        elif name == "S":
            s += xn * k
            M += xn
        elif name == "U":
            s += (xn * k * k) // 2
            M += xn * k
        else:
            if M % n:
                raise HalfIntegerMode(f"R applied to half-integer mode m={Fraction(M, n)} (k={k})")
            s -= k * M
            k, M = M // n, -k * n
    return r, s, k, M


def _key(r, s, k, M, n, alpha):
    if alpha == SYMBOLIC:
        return r % n, s, k, M
    p, q = alpha.numerator, alpha.denominator
    return (r * q + s * p) % (n * q), k, M


def _decode(results, n):
    return [(PhaseExponent(Fraction(r, n), Fraction(s, n)), BasisState(k, Fraction(M, n))) for r, s, k, M in results]


def verify_sum(name: str, lhs: Sequence[MonomialOp], rhs: Sequence[MonomialOp], k_range, m_range,
               alphas=(SYMBOLIC,), keep_skipped: int = 0) -> RelationReport:
    """Compare sums of monomials state by state as multisets of (phase, state).

    Arithmetic is exact: every quantity is an integer multiple of 1/N for a
    common denominator N of the words involved.
    """
    report = RelationReport(name)
    n = _scale(list(lhs) + list(rhs))
    cl = [_compile(o, n) for o in lhs]
    cr = [_compile(o, n) for o in rhs]
    states = _states(k_range, m_range)
    for alpha in _normalize(alphas):
        for st in states:
            M = int(st.m * n)
            try:
                left = [_run(c, st.k, M, n) for c in cl]
                right = [_run(c, st.k, M, n) for c in cr]
            except HalfIntegerMode:
                report.skipped += 1
                if len(report.skipped_states) < keep_skipped:
                    report.skipped_states.append((alpha, st))
                continue
            if Counter(_key(*t, n, alpha) for t in left) == Counter(_key(*t, n, alpha) for t in right):
                report.passed += 1
            else:
                report.failures.append((alpha, st, _decode(left, n), _decode(right, n)))
    return report


def verify_relation(lhs: MonomialOp, rhs: MonomialOp, k_range, m_range, alphas=(SYMBOLIC,),
                    name: str | None = None, keep_skipped: int = 0) -> RelationReport:
    """Check lhs e = rhs e exactly for every basis state e in the ranges.

    States on which either side meets R at a half-integer mode are counted as
    skipped, never as passed.
    """
    return verify_sum(name or f"{lhs} = {rhs}", [lhs], [rhs], k_range, m_range, alphas, keep_skipped)


def conjugation_sides(q_op: MonomialOp | None = None):
    """Both sides of Q(T^2 + T^-2 + S + S^-1) = (e^{i pi a}[ST + S^-1 T^-1] + e^{-i pi a}[S T^-1 + S^-1 T]) Q."""
    q = q_op or Q()
    plus, minus = alpha_phase(Fraction(1, 2)), alpha_phase(Fraction(-1, 2))
    lhs = [q * op(T, T), q * op(TINV, TINV), q * op(S()), q * op(S(-1))]
    rhs = [op(S(), T, phase=plus) * q, op(S(-1), TINV, phase=plus) * q,
           op(S(), TINV, phase=minus) * q, op(S(-1), T, phase=minus) * q]
    return lhs, rhs


def verify_conjugation(k_range, m_range, alphas=(SYMBOLIC,), q_op: MonomialOp | None = None) -> RelationReport:
    lhs, rhs = conjugation_sides(q_op)
    return verify_sum("Q(T²+T⁻²+S+S⁻¹) = H̃ Q", lhs, rhs, k_range, m_range, alphas)


def named_relations(xs=(Fraction(1, 2), Fraction(1)), ys=(Fraction(-1), Fraction(1, 2), Fraction(1))):
    """(name, lhs, rhs, needs_even_k) for every commutation relation of the chiral gauge proof."""
    half = Fraction(1, 2)
    rels = [
        ("RS", op(R, S()), op(TINV, R), False),
        ("RS^-1", op(R, S(-1)), op(T, R), False),
        ("RT", op(R, T), op(S(), R), False),
        ("RT^-1", op(R, TINV), op(S(-1), R), False),
    ]
    for x in xs:
        rels += [
            (f"TU_{x}", op(T, U(x)), op(S(x), U(x), T, phase=alpha_phase(x / 2)), False),
            (f"U_{x}T", op(U(x), T), op(S(-x), T, U(x), phase=alpha_phase(-x / 2)), False),
            (f"U_{x}T^-1", op(U(x), TINV), op(TINV, S(x), U(x), phase=alpha_phase(x / 2)), False),
        ]
    for x in (half, Fraction(1), Fraction(3, 2)):
        rels += [
            (f"S^{x}T", op(S(x), T), op(T, S(x), phase=alpha_phase(-x)), False),
            (f"T^-1S^-{x}", op(TINV, S(-x)), op(S(-x), TINV, phase=alpha_phase(x)), False),
        ]
    for x in xs:
        for y in ys:
            rels.append((f"U_{x}S^{y}", op(U(x), S(y)), op(S(y), U(x)), False))
    q = Q()
    rels += [
        ("QS", q * op(S()), op(S(), TINV, phase=alpha_phase(-half)) * q, True),
        ("QS^-1", q * op(S(-1)), op(S(-1), T, phase=alpha_phase(-half)) * q, True),
        ("QT^2", q * op(T, T), op(S(), T, phase=alpha_phase(half)) * q, True),
        ("QT^-2", q * op(TINV, TINV), op(S(-1), TINV, phase=alpha_phase(half)) * q, True),
    ]
    return rels


@dataclass
class GaugeSummary:
    reports: list[RelationReport]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.reports)

    def rows(self):
        for r in self.reports:
            yield r.name, r.status, r.passed, len(r.failures), r.skipped


def verify_all(krange: int = 20, mrange: int = 20, alphas=(SYMBOLIC,)) -> GaugeSummary:
    """Every named relation plus the conjugation identity on k, m in [-krange, krange] x [-mrange, mrange].

    Relations involving Q are run on all k; odd k lands in the skip count.
    """
    ks = range(-krange, krange + 1)
    ms = range(-mrange, mrange + 1)
    reports = []
    for name, lhs, rhs, _ in named_relations():
        reports.append(verify_relation(lhs, rhs, ks, ms, alphas, name=name))
    reports.append(verify_conjugation(ks, ms, alphas))
    return GaugeSummary(reports)


# ---------------------------------------------------------------------------
# numerical consequences


@dataclass(frozen=True)
class IsospectralReport:
    frac: Fraction
    doubled: Fraction
    distance: float
    tol: float
    amo_measure: float
    chiral_measure: float

    @property
    def ok(self) -> bool:
        return self.distance <= 2 * self.tol


def isospectral_check(frac, tol: float = 1e-6, method: str = "auto", lam: float = 1.0) -> IsospectralReport:
    """Hausdorff distance between sigma(M_{2p/q}) (AMO) and the chiral union at p/q."""
    frac = Fraction(frac)
    doubled = double_fraction(frac)
    a = union_spectrum(amo(lam), doubled, tol, method=method)
    c = union_spectrum(shifted_chiral_amo(frac), frac, tol, method=method)
    return IsospectralReport(frac, doubled, hausdorff_distance(a, c), tol, a.measure, c.measure)


@dataclass(frozen=True)
class IDSEqualityReport:
    frac: Fraction
    energies: np.ndarray
    amo_values: np.ndarray
    chiral_values: np.ndarray

    @property
    def deviation(self) -> float:
        return float(np.max(np.abs(self.amo_values - self.chiral_values)))


def ids_equality_check(frac, E_grid, theta_samples: int = 64, k_samples: int = 256) -> IDSEqualityReport:
    """Sup-norm gap on the grid between the doubled-frequency AMO IDS and the chiral IDS."""
    frac = Fraction(frac)
    grid = np.asarray(E_grid, float)
    na = ids(amo(1.0), double_fraction(frac), grid, theta_samples, k_samples)
    nc = ids(shifted_chiral_amo(frac), frac, grid, theta_samples, k_samples)
    return IDSEqualityReport(frac, grid, na.values, nc.values)
