"""Transfer-matrix cocycle, Lyapunov exponents and the Thouless formula.

One step of the cocycle is

    A^E(theta) = (1 / b(theta)) [[E - v(theta), -b(theta - alpha)], [b(theta), 0]],

mapping (phi(n), phi(n-1)) to (phi(n+1), phi(n)).  Products are renormalized
every step and the discarded scale is kept as a log factor.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate

from .errors import HarperlabError, SingularPhase
from .model import CoefficientFamily, sample_phases
from .spectral import IDSample, SINGULAR_THRESHOLD

RETRY_CAP = 100


@dataclass(frozen=True, eq=False)
class TransferState:
    """Renormalized product: true matrix = ``matrix * exp(log_scale)``."""

    matrix: np.ndarray
    log_scale: float
    steps: int
    log_det: float = 0.0  # ln|det| of the true product, summed step by step

    @property
    def log_norm(self) -> float:
        return float(np.log(np.linalg.norm(self.matrix, 2)) + self.log_scale)

    def full(self) -> np.ndarray:
        """The unnormalized product (may overflow for long products)."""
        return self.matrix * math.exp(self.log_scale)

    @property
    def log_abs_det(self) -> float:
        return self.log_det


def _alpha(alpha):
    if isinstance(alpha, str):
        return Fraction(alpha)
    return alpha


def transfer_product(family: CoefficientFamily, alpha, theta: float, E: float, n: int,
                     threshold: float = SINGULAR_THRESHOLD) -> TransferState:
    """A^E_n(theta) = A^E(theta + (n-1) alpha) ... A^E(theta)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    alpha = _alpha(alpha)
    idx = np.arange(-1, n)
    ph = sample_phases(family, alpha, theta, idx)
    v = family.v(ph)
    b = family.b(ph)  # b[0] is b(theta - alpha)
    bad = np.flatnonzero(np.abs(b[1:]) <= threshold)
    if bad.size:
        raise SingularPhase(f"b vanishes at step {bad[0]} of the cocycle; resample theta", step=int(bad[0]))
    M = np.eye(2)
    log_scale = 0.0
    log_det = 0.0
    for j in range(n):
        A = np.array([[E - v[j + 1], -b[j]], [b[j + 1], 0.0]]) / b[j + 1]
        M = A @ M
        log_det += math.log(abs(A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]))
        s = np.abs(M).max()
        if s > 1.5 or s < 0.75:
            M = M / s
            log_scale += math.log(s)
    return TransferState(M, log_scale, n, log_det)


@dataclass(frozen=True)
class LyapunovEstimate:
    E: float
    L: float
    stderr: float
    n: int
    theta_samples: int


def _log_norms(family, alpha, thetas, energies, n, threshold):
    """(len(energies), len(thetas)) array of ln||A^E_n(theta)||, vectorized over both axes."""
    thetas = np.asarray(thetas, float)
    energies = np.asarray(energies, float)
    T = len(thetas)
    j = np.arange(-1, n)
    ph = sample_phases(family, alpha, thetas[:, None], j[None, :])
    v = family.v(ph)
    b = family.b(ph)
    if np.any(np.abs(b[:, 1:]) <= threshold):
        raise SingularPhase("singular phase among the theta samples")
    # propagate the vector pair (phi_n, phi_{n-1}) for both basis starts
    Es = energies[:, None]
    x = np.zeros((2, len(energies), T, 2))
    x[0, ..., 0] = 1.0
    x[1, ..., 1] = 1.0
    logs = np.zeros((len(energies), T))
    for s in range(n):
        inv = 1.0 / b[:, s + 1]
        top = ((Es - v[:, s + 1]) * x[..., 0] - b[:, s] * x[..., 1]) * inv
        x = np.stack([top, x[..., 0]], axis=-1)
        if s % 8 == 7 or s == n - 1:
            scale = np.abs(x).max(axis=(0, 3))
            x = x / scale[None, :, :, None]
            logs += np.log(scale)
    # columns of the product matrix are x[0], x[1]
    M = np.stack([x[0], x[1]], axis=-1)
    return logs + np.log(np.linalg.norm(M, ord=2, axis=(-2, -1)))


def _draw_thetas(family, alpha, count, n, rng, threshold):
    """Uniform phases whose first n+1 orbit points stay off the zeros of b (rejection, bounded)."""
    out = []
    for _ in range(RETRY_CAP):
        cand = rng.random(count - len(out))
        ph = sample_phases(family, alpha, cand[:, None], np.arange(-1, n)[None, :])
        ok = np.all(np.abs(family.b(ph)) > threshold, axis=1)
        out.extend(cand[ok].tolist())
        if len(out) >= count:
            return np.sort(np.array(out[:count]))
    raise HarperlabError(f"could not draw {count} regular phases within {RETRY_CAP} attempts")


def lyapunov_curve(family: CoefficientFamily, alpha, energies, n: int = 10_000, theta_count: int = 32,
                   seed: int = 0, threshold: float = SINGULAR_THRESHOLD) -> list[LyapunovEstimate]:
    """Monte-Carlo estimate of (1/n) E_theta ln||A^E_n(theta)|| at each energy."""
    if n < 1 or theta_count < 2:
        raise ValueError("need n >= 1 and theta_count >= 2")
    alpha = _alpha(alpha)
    rng = np.random.default_rng(seed)
    thetas = _draw_thetas(family, alpha, theta_count, n, rng, threshold)
    energies = np.atleast_1d(np.asarray(energies, float))
    ln = _log_norms(family, alpha, thetas, energies, n, threshold) / n
    mean = ln.mean(axis=1)
    err = ln.std(axis=1, ddof=1) / math.sqrt(theta_count)
    return [LyapunovEstimate(float(E), float(m), float(e), n, theta_count) for E, m, e in zip(energies, mean, err)]


def lyapunov_numeric(family: CoefficientFamily, alpha, E: float, n: int = 10_000, theta_count: int = 32,
                     seed: int = 0, threshold: float = SINGULAR_THRESHOLD) -> LyapunovEstimate:
    if n < 100:
        raise ValueError("n must be >= 100")
    if theta_count < 10:
        raise ValueError("theta_count must be >= 10")
    return lyapunov_curve(family, alpha, [E], n, theta_count, seed, threshold)[0]


def log_b_integral(family: CoefficientFamily, nodes: int = 4096, simple_tol: float = 1e-8) -> float:
    """Integral of ln|b| over one period.

    Each simple zero z is removed by subtracting ln|2 sin pi(theta - z)|,
    whose integral over a period is exactly 0; what is left is smooth and
    periodic, so the midpoint rule converges spectrally.
    """
    zs = np.asarray(family.b_zeros, float)
    for z in zs:
        slope = abs(float(family.b_prime(z)))
        if slope <= simple_tol:
            raise HarperlabError(f"zero of b at {z} is not simple (|b'| = {slope:.3g})")
    def remainder(t):
        t = np.asarray(t, float)
        out = np.log(np.abs(family.b(t)))
        for z in zs:
            out = out - np.log(np.abs(2 * np.sin(np.pi * (t - z))))
        return out

    def midpoint(m):
        return float(np.mean(remainder((np.arange(m) + 0.5) / m)))

    val = midpoint(nodes)
    if abs(val - midpoint(nodes // 2)) > 1e-10:
        # remainder not resolved by the grid: adaptive quadrature instead
        val, _ = integrate.quad(lambda t: float(remainder(t)), 0.0, 1.0, points=sorted(zs.tolist()) or None,
                                limit=400, epsabs=1e-12)
    return val


class QuadratureWarning(UserWarning):
    pass


def _stieltjes(ids: IDSample, E: float, stride: int = 1) -> float:
    e = ids.energies[::stride]
    n = ids.values[::stride]
    if stride > 1 and e[-1] != ids.energies[-1]:
        e = np.append(e, ids.energies[-1])
        n = np.append(n, ids.values[-1])
    dn = np.diff(n)
    mid = 0.5 * (e[1:] + e[:-1])
    mask = dn > 0
    return float(np.sum(dn[mask] * np.log(np.abs(E - mid[mask]))))


def thouless_L(family: CoefficientFamily, ids: IDSample, E: float, log_b: float | None = None,
               tol: float = 1e-2) -> float:
    """L(E) = -int ln|b| + int ln|E - E'| dN(E'), with dN from a sampled IDS.

    The Stieltjes integral is a midpoint sum over grid increments; a second
    sum on the grid with every other point removed must agree within
    ``tol``, otherwise a QuadratureWarning is issued.
    """
    if log_b is None:
        log_b = log_b_integral(family)
    if ids.values[0] > 0 or ids.values[-1] < 1:
        warnings.warn("IDS grid does not cover the whole spectrum", QuadratureWarning, stacklevel=2)
    fine = _stieltjes(ids, E)
    coarse = _stieltjes(ids, E, stride=2)
    if abs(fine - coarse) > tol:
        warnings.warn(
            f"Stieltjes sum at E={E} moved by {abs(fine - coarse):.3g} under grid halving",
            QuadratureWarning, stacklevel=2,
        )
    return -log_b + fine


def thouless_from_eigenvalues(family: CoefficientFamily, eigenvalues: np.ndarray, E,
                              log_b: float | None = None) -> np.ndarray:
    """Thouless formula with dN given by equal-weight Floquet eigenvalue samples (exact Stieltjes sum)."""
    if log_b is None:
        log_b = log_b_integral(family)
    ev = np.sort(np.ravel(eigenvalues))
    E = np.atleast_1d(np.asarray(E, float))
    return -log_b + np.array([np.mean(np.log(np.abs(e - ev))) for e in E])
