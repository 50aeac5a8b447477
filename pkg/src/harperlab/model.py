"""Quasiperiodic Jacobi families H_{v,b,alpha,theta} and their sampled coefficients.

    (H phi)(n) = b(theta + (n-1) alpha) phi(n-1) + b(theta + n alpha) phi(n+1) + v(theta + n alpha) phi(n)

A family is a pair of 1-periodic C^1 functions (v, b).  Built-in families are
trigonometric polynomials, which lets the spectral code pick exact paths that
depend on the trigonometric degree.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import optimize

from .errors import InvalidFamily

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TrigPoly:
    """const + sum_k cos_k cos(2 pi k x) + sin_k sin(2 pi k x), rational coefficients."""

    const: Fraction = Fraction(0)
    cos: tuple[tuple[int, Fraction], ...] = ()
    sin: tuple[tuple[int, Fraction], ...] = ()

    @classmethod
    def make(cls, const=0, cos=None, sin=None):
        def norm(d):
            items = sorted((int(k), Fraction(c)) for k, c in (d or {}).items())
            if any(k < 1 for k, _ in items):
                raise InvalidFamily("harmonic indices must be >= 1")
            return tuple((k, c) for k, c in items if c != 0)

        return cls(Fraction(const), norm(cos), norm(sin))

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, (int, float, str)):
            return cls.make(const=Fraction(obj))
        unknown = set(obj) - {"const", "cos", "sin"}
        if unknown:
            raise InvalidFamily(f"unknown trig-polynomial keys: {sorted(unknown)}")
        return cls.make(obj.get("const", 0), obj.get("cos"), obj.get("sin"))

    def to_json(self):
        return {
            "const": str(self.const),
            "cos": {str(k): str(c) for k, c in self.cos},
            "sin": {str(k): str(c) for k, c in self.sin},
        }

    @property
    def degree(self) -> int:
        return max([k for k, _ in self.cos + self.sin], default=0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full_like(x, float(self.const))
        for k, c in self.cos:
            out = out + float(c) * np.cos(TWO_PI * k * x)
        for k, c in self.sin:
            out = out + float(c) * np.sin(TWO_PI * k * x)
        return out

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for k, c in self.cos:
            out = out - TWO_PI * k * float(c) * np.sin(TWO_PI * k * x)
        for k, c in self.sin:
            out = out + TWO_PI * k * float(c) * np.cos(TWO_PI * k * x)
        return out

    def derivative_bound(self) -> float:
        """Upper bound on sup|f'|; exact for a single harmonic."""
        per_k: dict[int, list[float]] = {}
        for k, c in self.cos:
            per_k.setdefault(k, [0.0, 0.0])[0] = float(c)
        for k, c in self.sin:
            per_k.setdefault(k, [0.0, 0.0])[1] = float(c)
        return sum(TWO_PI * k * math.hypot(a, b) for k, (a, b) in per_k.items())


@dataclass(frozen=True)
class CoefficientFamily:
    """Pair (v, b) of period-1 functions with the metadata the spectral code relies on.

    ``v_deriv_max`` and ``b_deriv_max`` are sup|v'| and sup|b'|.  They are
    trusted as stated (the validator only tries to falsify them) because the
    theta-sweep uses them as Lipschitz constants.  ``phase_offset`` is added
    to theta at sampling time.
    """

    name: str
    v: Callable
    b: Callable
    v_deriv_max: float
    b_deriv_max: float
    b_zeros: tuple[float, ...] = ()
    lam: float | None = None
    kind: str = "custom"
    phase_offset: float = 0.0
    dv: Callable | None = field(default=None, compare=False)
    db: Callable | None = field(default=None, compare=False)

    @property
    def trig_degree(self) -> int | None:
        """Max trigonometric degree of v and b, or None for opaque callables."""
        if isinstance(self.v, TrigPoly) and isinstance(self.b, TrigPoly):
            return max(self.v.degree, self.b.degree)
        return None

    @property
    def motion_bound(self) -> float:
        """Bound on |dE/dtheta| for any Floquet eigenvalue."""
        return self.v_deriv_max + 2.0 * self.b_deriv_max

    def b_prime(self, x):
        if self.db is not None:
            return self.db(x)
        h = 1e-6
        return (self.b(np.asarray(x) + h) - self.b(np.asarray(x) - h)) / (2 * h)

    def cache_key(self) -> dict:
        """JSON-able identity used in cache keys and output headers."""
        key = {"name": self.name, "kind": self.kind, "lambda": self.lam, "phase_offset": repr(self.phase_offset)}
        if isinstance(self.v, TrigPoly) and isinstance(self.b, TrigPoly):
            key["v"] = self.v.to_json()
            key["b"] = self.b.to_json()
        return key


def amo(lam=1.0) -> CoefficientFamily:
    lam = float(lam)
    if lam <= 0:
        raise InvalidFamily("the almost Mathieu coupling must be positive")
    v = _exact_cos(2 * lam)
    return CoefficientFamily(
        name=f"amo:{lam!r}",
        v=v,
        b=TrigPoly.make(const=1),
        v_deriv_max=4 * math.pi * lam,
        b_deriv_max=0.0,
        b_zeros=(),
        lam=lam,
        kind="amo",
        dv=v.derivative,
        db=_zeros,
    )


def _zeros(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def _exact_cos(amplitude: float) -> TrigPoly:
    # keep the float amplitude exactly so that v(0) == 2*lam bit-for-bit
    return TrigPoly.make(cos={1: Fraction(amplitude)})


def chiral_amo(phase_offset: float = 0.0, name: str = "chiral") -> CoefficientFamily:
    b = TrigPoly.make(sin={1: 2})
    return CoefficientFamily(
        name=name,
        v=TrigPoly.make(),
        b=b,
        v_deriv_max=0.0,
        b_deriv_max=4 * math.pi,
        b_zeros=(0.0, 0.5),
        lam=None,
        kind="chiral",
        phase_offset=phase_offset,
        dv=_zeros,
        db=b.derivative,
    )


def shifted_chiral_amo(alpha) -> CoefficientFamily:
    """Chiral family sampled at theta + 1/4 + alpha/2 (the gauge-matched partner of the AMO at 2 alpha)."""
    offset = (Fraction(1, 4) + Fraction(alpha) / 2) % 1 if isinstance(alpha, (Fraction, int)) else (0.25 + alpha / 2) % 1.0
    return chiral_amo(phase_offset=float(offset), name=f"shifted-chiral:{alpha}")


def custom(v, b, v_deriv_max, b_deriv_max, b_zeros=(), name="custom", validate=True) -> CoefficientFamily:
    if isinstance(v, dict):
        v = TrigPoly.from_json(v)
    if isinstance(b, dict):
        b = TrigPoly.from_json(b)
    fam = CoefficientFamily(
        name=name,
        v=v,
        b=b,
        v_deriv_max=float(v_deriv_max),
        b_deriv_max=float(b_deriv_max),
        b_zeros=tuple(float(z) % 1.0 for z in b_zeros),
        kind="custom",
        dv=v.derivative if isinstance(v, TrigPoly) else None,
        db=b.derivative if isinstance(b, TrigPoly) else None,
    )
    if validate:
        validate_family(fam)
    return fam


def make_family(kind: str, **params) -> CoefficientFamily:
    """Dispatch on ``kind`` in {amo, chiral_amo, shifted_chiral_amo, custom}."""
    if kind == "amo":
        return amo(params.get("lam", 1.0))
    if kind in ("chiral", "chiral_amo"):
        return chiral_amo()
    if kind in ("shifted_chiral", "shifted_chiral_amo"):
        return shifted_chiral_amo(params["alpha"])
    if kind == "custom":
        return custom(**params)
    raise InvalidFamily(f"unknown family kind {kind!r}")


def load_custom(path) -> CoefficientFamily:
    """Read a custom family from a JSON document.

    Schema: {"name": str, "v": trig, "b": trig, "v_deriv_max": num,
    "b_deriv_max": num, "b_zeros": [num, ...]} where trig is either a number
    or {"const": c, "cos": {"k": c}, "sin": {"k": c}} with rational
    coefficients given as numbers or strings like "1/2".
    """
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise InvalidFamily(f"cannot read custom family {path}: {exc}") from exc
    required = {"v", "b", "v_deriv_max", "b_deriv_max"}
    missing = required - set(doc)
    if missing:
        raise InvalidFamily(f"custom family is missing {sorted(missing)}")
    return custom(
        TrigPoly.from_json(doc["v"]),
        TrigPoly.from_json(doc["b"]),
        doc["v_deriv_max"],
        doc["b_deriv_max"],
        doc.get("b_zeros", ()),
        name=doc.get("name", Path(path).stem),
    )


def parse_model(spec: str, alpha=None) -> CoefficientFamily:
    """``amo[:lam] | chiral | shifted-chiral | free | custom:<file>``."""
    head, _, arg = spec.partition(":")
    if head == "amo":
        return amo(float(arg) if arg else 1.0)
    if head == "chiral":
        return chiral_amo()
    if head == "shifted-chiral":
        if alpha is None:
            raise InvalidFamily("shifted-chiral needs the frequency it is paired with")
        return shifted_chiral_amo(alpha)
    if head == "free":
        return custom(TrigPoly.make(), TrigPoly.make(const=1), 0.0, 0.0, name="free")
    if head == "custom":
        return load_custom(arg)
    raise InvalidFamily(f"unknown model {spec!r}")


def validate_family(fam: CoefficientFamily, samples: int = 20000, eps: float = 1e-3) -> None:
    """Try to falsify the stated metadata of ``fam``; raise InvalidFamily on the first failure."""
    x = (np.arange(samples) + 0.5) / samples
    for name, f in (("v", fam.v), ("b", fam.b)):
        if np.max(np.abs(f(x + 1.0) - f(x))) > 1e-12:
            raise InvalidFamily(f"{name} is not 1-periodic")

    for z in fam.b_zeros:
        if abs(float(fam.b(z))) >= 1e-12:
            raise InvalidFamily(f"stated zero {z} of b is not a zero: b = {float(fam.b(z))!r}")

    # away from the listed zeros |b| must stay away from 0: look at every local
    # minimum of |b| on the grid and polish it
    zs = np.asarray(fam.b_zeros, dtype=float)
    if zs.size:
        dist = np.abs((x[:, None] - zs[None, :] + 0.5) % 1.0 - 0.5).min(axis=1)
        keep = dist > eps
    else:
        keep = np.ones_like(x, dtype=bool)
    bvals = fam.b(x)
    bx = np.abs(bvals)
    h = 1.0 / samples
    flips = np.flatnonzero(keep & np.roll(keep, -1) & (bvals * np.roll(bvals, -1) <= 0))
    if flips.size:
        raise InvalidFamily(f"b changes sign near {x[flips[0]]:.6g}, which is not listed in b_zeros")
    # touching zeros: a local minimum can only hide a zero if |b| <= sup|b'| * h there
    slack = fam.b_deriv_max * h + 1e-10
    idx = np.where(keep & (bx < np.roll(bx, 1)) & (bx <= np.roll(bx, -1)) & (bx <= slack))[0]
    for i in idx:
        res = optimize.minimize_scalar(
            lambda t: abs(float(fam.b(t))), bounds=(x[i] - h, x[i] + h), method="bounded",
            options={"xatol": 1e-14},
        )
        if res.fun < 1e-10:
            raise InvalidFamily(f"b vanishes near {res.x % 1.0:.12g}, which is not listed in b_zeros")

    for name, f, bound in (("v", fam.v, fam.v_deriv_max), ("b", fam.b, fam.b_deriv_max)):
        fd = np.abs(np.diff(f(np.append(x, x[0] + 1.0)))) / h
        if fd.max() > bound * (1 + 1e-6) + 1e-9:
            raise InvalidFamily(f"stated sup|{name}'| = {bound} is exceeded (finite difference {fd.max():.6g})")


@dataclass(frozen=True)
class SampledOperator:
    """A family at a fixed frequency and phase; theta is reduced mod 1."""

    family: CoefficientFamily
    alpha: Fraction | float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta) % 1.0)
        if isinstance(self.alpha, int):
            object.__setattr__(self, "alpha", Fraction(self.alpha))

    @property
    def period(self) -> int | None:
        return self.alpha.denominator if isinstance(self.alpha, Fraction) else None

    def phases(self, n):
        return sample_phases(self.family, self.alpha, self.theta, n)

    def v_n(self, n):
        return self.family.v(self.phases(n))

    def b_n(self, n):
        return self.family.b(self.phases(n))


def sample_phases(family: CoefficientFamily, alpha, theta, n):
    """theta + offset + n*alpha reduced mod 1; integer arithmetic for rational alpha."""
    n = np.asarray(n)
    base = np.asarray(theta, dtype=float) + family.phase_offset
    if isinstance(alpha, Fraction):
        p, q = alpha.numerator, alpha.denominator
        frac = np.mod(n.astype(np.int64) * p, q) / q
        return np.mod(base + frac, 1.0)
    return np.mod(base + np.mod(n * float(alpha), 1.0), 1.0)


def sample_coeffs(op: SampledOperator, n_range) -> tuple[np.ndarray, np.ndarray]:
    """(v_n), (b_n) for n in ``n_range`` (a range or an integer array)."""
    n = np.asarray(list(n_range) if isinstance(n_range, range) else n_range, dtype=np.int64)
    return op.v_n(n), op.b_n(n)


def period_coeffs(family: CoefficientFamily, frac: Fraction, theta) -> tuple[np.ndarray, np.ndarray]:
    """One period of coefficients for rational alpha; theta may be an array (leading axis)."""
    frac = Fraction(frac)
    q = frac.denominator
    n = np.arange(q)
    theta = np.asarray(theta, dtype=float)
    ph = sample_phases(family, frac, theta[..., None], n)
    return family.v(ph), family.b(ph)
