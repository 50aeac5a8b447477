import math
import warnings
from fractions import Fraction

import numpy as np
import pytest

from harperlab.contfrac import GOLDEN, convergents
from harperlab.dynamics import (
    QuadratureWarning,
    log_b_integral,
    lyapunov_curve,
    lyapunov_numeric,
    thouless_from_eigenvalues,
    thouless_L,
    transfer_product,
)
from harperlab.errors import HarperlabError, SingularPhase
from harperlab.model import TrigPoly, amo, chiral_amo, custom, parse_model
from harperlab.spectral import floquet_eigenvalue_samples, ids, union_spectrum

GOLDEN_F = (math.sqrt(5) - 1) / 2


def golden_approximant(q_max):
    return [c.fraction for c in convergents(GOLDEN, 20) if c.q <= q_max][-1]


# ---------------------------------------------------------------- transfer products


def test_one_step_matrix():
    theta, E = 0.37, 0.9
    st = transfer_product(amo(1), GOLDEN_F, theta, E, 1)
    v = 2 * math.cos(2 * math.pi * theta)
    np.testing.assert_allclose(st.full(), [[E - v, -1], [1, 0]], atol=1e-14)


def test_zero_steps_is_identity():
    st = transfer_product(amo(1), GOLDEN_F, 0.2, 0.0, 0)
    np.testing.assert_array_equal(st.full(), np.eye(2))


def test_chiral_singular_phase():
    with pytest.raises(SingularPhase) as exc:
        transfer_product(chiral_amo(), Fraction(1, 4), 0.0, 0.5, 10)
    assert exc.value.step is not None


@pytest.mark.parametrize("n", [1, 7, 50, 400, 3000])
def test_determinant_telescopes(n):
    fam = chiral_amo()
    theta, alpha = 0.1234, GOLDEN_F
    st = transfer_product(fam, alpha, theta, 0.7, n)
    b_first = abs(float(fam.b(np.mod(theta - alpha, 1.0))))
    b_last = abs(float(fam.b(np.mod(theta + (n - 1) * alpha, 1.0))))
    ratio = st.log_abs_det + math.log(b_last) - math.log(b_first)
    assert abs(ratio) < 1e-8
    if n <= 50:
        M = st.full()
        assert abs(abs(np.linalg.det(M)) * b_last / b_first - 1) < 1e-8


def test_stored_matrix_is_renormalized():
    st = transfer_product(amo(1), GOLDEN_F, 0.3, 10.0, 2000)
    assert 0.5 <= np.abs(st.matrix).max() <= 2
    assert st.log_norm > 0


def test_growth_outside_spectrum():
    alpha = golden_approximant(89)
    st = transfer_product(amo(1), alpha, 0.3, 10.0, 1000)
    assert st.log_norm / 1000 > 1.0


# ---------------------------------------------------------------- Lyapunov


def test_lyapunov_critical_in_spectrum():
    est = lyapunov_numeric(amo(1), GOLDEN_F, 0.0, n=10_000, theta_count=16, seed=1)
    assert abs(est.L) < 0.01
    assert est.stderr >= 0 and est.n == 10_000 and est.theta_samples == 16


def test_lyapunov_supercritical_is_log_lambda():
    est = lyapunov_numeric(amo(2), GOLDEN_F, 0.0, n=10_000, theta_count=16, seed=2)
    assert abs(est.L - math.log(2)) < 0.02


def test_lyapunov_outside_spectrum():
    assert lyapunov_numeric(amo(1), GOLDEN_F, 5.0, n=2000, theta_count=16).L > 0.5


def test_lyapunov_preconditions():
    with pytest.raises(ValueError):
        lyapunov_numeric(amo(1), GOLDEN_F, 0.0, n=50)
    with pytest.raises(ValueError):
        lyapunov_numeric(amo(1), GOLDEN_F, 0.0, n=200, theta_count=5)


def test_lyapunov_seeded_and_chiral_resampling():
    a = lyapunov_curve(chiral_amo(), Fraction(1, 4), [0.5, 3.0], 400, 12, seed=9)
    b = lyapunov_curve(chiral_amo(), Fraction(1, 4), [0.5, 3.0], 400, 12, seed=9)
    assert a == b
    assert all(math.isfinite(e.L) for e in a)


def test_subadditivity():
    fam, alpha, E = amo(1), GOLDEN_F, 3.5
    n = 500
    one = lyapunov_numeric(fam, alpha, E, n=n, theta_count=32, seed=3)
    two = lyapunov_numeric(fam, alpha, E, n=2 * n, theta_count=32, seed=3)
    assert two.L <= one.L + 2 / n + 3 * max(one.stderr, two.stderr)


def test_curve_matches_single_products():
    fam, alpha = amo(1.3), GOLDEN_F
    est = lyapunov_curve(fam, alpha, [4.0], 300, 10, seed=4)[0]
    from harperlab.dynamics import _draw_thetas

    thetas = _draw_thetas(fam, alpha, 10, 300, np.random.default_rng(4), 1e-12)
    direct = np.mean([transfer_product(fam, alpha, t, 4.0, 300).log_norm for t in thetas]) / 300
    assert est.L == pytest.approx(direct, abs=1e-10)


# ---------------------------------------------------------------- log-b integral


def test_log_b_constant_one():
    assert log_b_integral(amo(1)) == 0.0


def test_log_b_two_sine():
    assert abs(log_b_integral(chiral_amo())) < 1e-8


def test_log_b_four_sine():
    fam = custom(TrigPoly.make(), TrigPoly.make(sin={1: 4}), 0, 8 * math.pi, (0.0, 0.5))
    assert log_b_integral(fam) == pytest.approx(math.log(2), abs=1e-8)


def test_log_b_smooth_nonconstant():
    # int ln|2 + cos 2 pi x| dx = ln((2 + sqrt 3) / 2)
    fam = custom(TrigPoly.make(), TrigPoly.make(const=2, cos={1: 1}), 0, 2 * math.pi)
    assert log_b_integral(fam) == pytest.approx(math.log((2 + math.sqrt(3)) / 2), abs=1e-10)


def test_log_b_non_simple_zero():
    # 1 - cos 2 pi x has a double zero at 0
    fam = custom(TrigPoly.make(), TrigPoly.make(const=1, cos={1: -1}), 0, 2 * math.pi, (0.0,), validate=False)
    with pytest.raises(HarperlabError):
        log_b_integral(fam)


# ---------------------------------------------------------------- Thouless formula


@pytest.fixture(scope="module")
def golden89_eigs():
    return floquet_eigenvalue_samples(amo(1), golden_approximant(89), 64, 128)


def test_thouless_matches_lyapunov_outside_spectrum(golden89_eigs):
    alpha = golden_approximant(89)
    energies = np.concatenate([np.linspace(-8, -4.2, 10), np.linspace(4.2, 8, 10)])
    th = thouless_from_eigenvalues(amo(1), golden89_eigs, energies)
    ly = lyapunov_curve(amo(1), alpha, energies, 2000, 16, seed=5)
    for t, e in zip(th, ly):
        assert abs(t - e.L) < 3e-2


def test_thouless_at_e5(golden89_eigs):
    alpha = golden_approximant(89)
    th = thouless_from_eigenvalues(amo(1), golden89_eigs, 5.0)[0]
    ly = lyapunov_numeric(amo(1), alpha, 5.0, n=4000, theta_count=16).L
    assert abs(th - ly) < 1e-2
    assert th > 0.5


def test_thouless_at_zero_is_small(golden89_eigs):
    assert abs(thouless_from_eigenvalues(amo(1), golden89_eigs, 0.0)[0]) < 2e-2


def test_thouless_from_ids_sample():
    frac = Fraction(5, 8)
    grid = np.linspace(-4.5, 4.5, 4001)
    sample = ids(amo(1), frac, grid, 32, 64)
    eigs = floquet_eigenvalue_samples(amo(1), frac, 32, 64)
    with warnings.catch_warnings():
        warnings.simplefilter("error", QuadratureWarning)
        val = thouless_L(amo(1), sample, 6.0)
    assert val == pytest.approx(thouless_from_eigenvalues(amo(1), eigs, 6.0)[0], abs=1e-3)


def test_thouless_warns_on_coarse_grid():
    frac = Fraction(1, 2)
    sample = ids(amo(1), frac, np.linspace(-3, 3, 9), 8, 8)
    with pytest.warns(QuadratureWarning):
        thouless_L(amo(1), sample, 0.1, tol=1e-6)


def test_thouless_chiral_matches_amo_at_double_frequency():
    # IDS equality: the chiral family at p/q and the AMO at 2p/q give the same L(E)
    from harperlab.model import shifted_chiral_amo

    frac = Fraction(1, 4)
    ch = floquet_eigenvalue_samples(shifted_chiral_amo(frac), frac, 64, 128)
    am = floquet_eigenvalue_samples(amo(1), Fraction(1, 2), 64, 128)
    for E in (0.0, 3.5, 5.0):
        a = thouless_from_eigenvalues(chiral_amo(), ch, E)[0]
        b = thouless_from_eigenvalues(amo(1), am, E)[0]
        assert abs(a - b) < 2e-2
