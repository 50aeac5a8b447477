"""Continued fractions and canonical approximants.

Reals enter either as explicit coefficient streams (finite prefix plus an
optional periodic tail, which covers the golden and silver means) or as an
enclosure ``[lo, hi]`` of rationals.  The expander never emits a coefficient
that is not shared by every point of the enclosure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .errors import PrecisionExhausted


@dataclass(frozen=True)
class CFExpansion:
    """Source of continued-fraction coefficients a_1, a_2, ... of a number in (0, 1).

    Exactly one of the two modes is active: ``prefix``/``period`` for an
    explicit stream, or ``lo``/``hi`` for an enclosure of a real.
    """

    prefix: tuple[int, ...] = ()
    period: tuple[int, ...] = ()
    lo: Fraction | None = None
    hi: Fraction | None = None
    name: str = ""

    def __post_init__(self):
        if self.lo is None:
            if any(int(a) != a or a < 1 for a in self.prefix + self.period):
                raise ValueError("coefficients must be positive integers")
        elif not (0 < self.lo <= self.hi < 1):
            raise ValueError(f"enclosure [{self.lo}, {self.hi}] must lie inside (0, 1)")

    @classmethod
    def from_coefficients(cls, coefficients: Sequence[int], period: Sequence[int] = (), name=""):
        return cls(prefix=tuple(int(a) for a in coefficients), period=tuple(int(a) for a in period), name=name)

    @classmethod
    def from_real(cls, x, precision: int | None = None):
        """Enclose ``x``.

        ``x`` may be a decimal string, a Fraction, an int or a float (floats are
        taken at their exact binary value).  Without ``precision`` the value is
        exact; with it the enclosure is ``x +- 10**-precision``.
        """
        center = Fraction(x)
        if precision is None:
            return cls(lo=center, hi=center, name=str(x))
        radius = Fraction(1, 10**precision)
        return cls(lo=center - radius, hi=center + radius, name=str(x))

    @property
    def is_stream(self) -> bool:
        return self.lo is None

    def iter_coefficients(self) -> Iterator[int]:
        if self.is_stream:
            yield from self.prefix
            if not self.period:
                return
            while True:
                yield from self.period
        lo, hi = self.lo, self.hi
        while True:
            if lo <= 0:
                raise PrecisionExhausted(
                    "remainder enclosure reaches 0: the value is (or cannot be told apart from) a rational "
                    "whose expansion has terminated; raise the precision or request fewer coefficients"
                )
            ylo, yhi = 1 / hi, 1 / lo
            a = math.floor(ylo)
            if math.floor(yhi) != a:
                raise PrecisionExhausted(
                    f"enclosure straddles the coefficient boundary between {a} and {a + 1}"
                )
            yield a
            lo, hi = ylo - a, yhi - a

    def coefficients(self, count: int) -> tuple[int, ...]:
        if count < 1:
            raise ValueError("count must be >= 1")
        out = []
        for a in self.iter_coefficients():
            out.append(a)
            if len(out) == count:
                return tuple(out)
        raise PrecisionExhausted(f"expansion terminates after {len(out)} coefficients; {count} requested")

    def enclosure(self, depth: int = 40) -> tuple[Fraction, Fraction]:
        """Rational bounds on the value; for streams, two consecutive convergents."""
        if not self.is_stream:
            return self.lo, self.hi
        coeffs = []
        for a in self.iter_coefficients():
            coeffs.append(a)
            if len(coeffs) == depth:
                break
        if len(coeffs) < depth:
            x = _evaluate(coeffs)
            return x, x
        a, b = _evaluate(coeffs[:-1]), _evaluate(coeffs)
        return min(a, b), max(a, b)

    def value(self) -> float:
        lo, hi = self.enclosure()
        return float((lo + hi) / 2)


GOLDEN = CFExpansion(period=(1,), name="golden")
SILVER = CFExpansion(period=(2,), name="silver")
NAMED = {"golden": GOLDEN, "silver": SILVER}


@dataclass(frozen=True)
class Convergent:
    n: int
    p: int
    q: int
    a: int
    omega: Fraction | None = None

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.p, self.q)


def _evaluate(coeffs: Sequence[int]) -> Fraction:
    x = Fraction(0)
    for a in reversed(coeffs):
        x = 1 / (a + x)
    return x


def _as_expansion(x) -> CFExpansion:
    if isinstance(x, CFExpansion):
        return x
    if isinstance(x, str) and x in NAMED:
        return NAMED[x]
    return CFExpansion.from_real(x)


def cf_expand(x, count: int) -> tuple[int, ...]:
    """First ``count`` coefficients of ``x`` (a real in (0,1) or a CFExpansion)."""
    return _as_expansion(x).coefficients(count)


def convergents(cf, count: int) -> list[Convergent]:
    """Canonical approximants p_1/q_1, ..., p_count/q_count."""
    coeffs = cf_expand(cf, count)
    p_prev, q_prev = 1, 0
    p, q = 0, 1
    rows = []
    for n, a in enumerate(coeffs, start=1):
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
        rows.append([n, p, q, a])
    out = []
    for i, (n, p, q, a) in enumerate(rows):
        omega = Fraction(1, q * rows[i + 1][2]) if i + 1 < len(rows) else None
        out.append(Convergent(n=n, p=p, q=q, a=a, omega=omega))
    return out


def convergents_up_to(cf, q_max: int) -> list[Convergent]:
    """All convergents with denominator <= q_max (stops early if the expansion ends)."""
    out: list[Convergent] = []
    count = 1
    while True:
        try:
            batch = convergents(cf, count)
        except PrecisionExhausted:
            return out
        if batch[-1].q > q_max:
            return out
        out = batch
        count += 1


def approximation_bounds_hold(cf, n: int) -> bool:
    """Check 1/(q_n(q_n+q_{n+1})) < |alpha - p_n/q_n| < 1/(q_n q_{n+1}) < 1/q_n^2 exactly.

    Uses rational bounds on alpha; returns False if the bounds cannot be
    certified (e.g. the enclosure of alpha is too wide).
    """
    cf = _as_expansion(cf)
    conv = convergents(cf, n + 1)
    pn, qn, qn1 = conv[n - 1].p, conv[n - 1].q, conv[n].q
    lo, hi = cf.enclosure(depth=n + 40) if cf.is_stream else cf.enclosure()
    target = Fraction(pn, qn)
    if lo <= target <= hi:
        return False
    d_lo = min(abs(lo - target), abs(hi - target))
    d_hi = max(abs(lo - target), abs(hi - target))
    lower = Fraction(1, qn * (qn + qn1))
    upper = Fraction(1, qn * qn1)
    return lower < d_lo and d_hi < upper and upper < Fraction(1, qn * qn)


def double_fraction(f) -> Fraction:
    """2*p/q reduced modulo 1 (the frequency of the AMO partnered with a chiral model at p/q)."""
    return (2 * Fraction(f)) % 1
