import math
from fractions import Fraction

import numpy as np
import pytest

from harperlab.bands import BandSet
from harperlab.contfrac import GOLDEN, convergents
from harperlab.errors import InsufficientData
from harperlab.fractal import (
    LAST_BOUND,
    THOULESS_C,
    CoverReport,
    ScalingRow,
    ScalingTable,
    aubry_andre_check,
    continuity_fit,
    cover_delta,
    cover_violations,
    dim_upper_estimate,
    hausdorff_sum,
    inflate_cover,
    thouless_scaling_table,
)
from harperlab.model import amo, chiral_amo
from harperlab.spectral import union_spectrum


def golden_fraction(q):
    return next(c.fraction for c in convergents(GOLDEN, 20) if c.q == q)


def test_constants():
    # 32 Catalan / pi = 9.3299489...; the quoted 9.32996 is a rounding of the same constant
    assert THOULESS_C == pytest.approx(9.32996, abs=2e-5)
    assert THOULESS_C == pytest.approx(9.329948929, abs=1e-9)
    assert LAST_BOUND == pytest.approx(21.7463, abs=1e-4)


# ---------------------------------------------------------------- covers


def test_inflate_unit_interval():
    cv = inflate_cover(BandSet.from_intervals([[0, 1]]), 10, 1.0)
    d = math.log(10) / 100
    np.testing.assert_allclose(cv.intervals, [[-d, 1 + d]])
    assert cv.total_length == pytest.approx(1.04605, abs=1e-5)
    assert cv.t_sums[1.0] == pytest.approx(cv.total_length, rel=1e-15)


def test_inflate_merges_overlaps():
    bands = BandSet.from_intervals([[0, 1], [1.01, 2]])
    cv = inflate_cover(bands, 10, 1.0)
    assert cv.count == 1 and cv.band_count == 2
    assert cv.total_length == pytest.approx(2 + 2 * cover_delta(10, 1.0))


def test_inflate_isolated_points():
    cv = inflate_cover(BandSet.from_intervals([[0, 1]]), 10, 1.0, points=[5.0])
    assert cv.count == 2
    assert cv.lengths[1] == pytest.approx(2 * cover_delta(10, 1.0))


def test_inflate_preconditions():
    with pytest.raises(ValueError):
        inflate_cover(BandSet.from_intervals([[0, 1]]), 1, 1.0)
    with pytest.raises(ValueError):
        inflate_cover(BandSet.from_intervals([[0, 1]]), 5, 0.0)


def test_golden_233_cover_total():
    cv = inflate_cover(union_spectrum(amo(1), golden_fraction(233), 1e-9), 233, 2.0)
    assert cv.total_length < 0.35
    # regression value from the first verified run
    assert cv.total_length == pytest.approx(0.10111637705, rel=1e-6)
    assert cv.count <= 3 * 233


# ---------------------------------------------------------------- Holder sums


def _cover(q, intervals):
    iv = np.asarray(intervals, float)
    return CoverReport(q, 1.0, 0.0, iv, float(np.sum(iv[:, 1] - iv[:, 0])), len(iv))


def test_hausdorff_sum_two_quarters():
    hs = hausdorff_sum(_cover(2, [[0, 0.25], [1, 1.25]]), 0.5)
    assert hs.value == pytest.approx(1.0, rel=1e-15)
    # equal lengths saturate Holder: 2^(1/2) (1/2)^(1/2) = 1
    assert hs.holder_bound == pytest.approx(1.0, rel=1e-15)
    assert hs.n_terms == 2


def test_hausdorff_sum_uses_count_when_it_exceeds_q():
    hs = hausdorff_sum(_cover(2, [[0, 0.1], [1, 1.1], [2, 2.1]]), 0.5)
    assert hs.n_terms == 3
    assert hs.value <= hs.holder_bound * (1 + 1e-12)


def test_hausdorff_sum_t_range():
    with pytest.raises(ValueError):
        hausdorff_sum(_cover(2, [[0, 1]]), 0.0)
    with pytest.raises(ValueError):
        hausdorff_sum(_cover(2, [[0, 1]]), 1.5)


def test_holder_inequality_on_golden_covers():
    for q in (8, 13, 21, 34, 55, 89, 144, 233):
        cv = inflate_cover(union_spectrum(amo(1), golden_fraction(q), 1e-9), q, 2.0)
        for t in np.linspace(0.05, 1.0, 20):
            hausdorff_sum(cv, float(t))


def test_sums_decrease_along_golden_convergents():
    sums = [inflate_cover(union_spectrum(amo(1), golden_fraction(q), 1e-9), q, 2.0).t_sums[0.55]
            for q in (34, 55, 89, 144, 233)]
    assert all(b < a for a, b in zip(sums, sums[1:]))


# ---------------------------------------------------------------- dimension


def test_dimension_insufficient_data():
    with pytest.raises(InsufficientData):
        dim_upper_estimate(amo(1), GOLDEN, [2])


def test_dimension_rejects_non_convergent():
    with pytest.raises(ValueError):
        dim_upper_estimate(amo(1), GOLDEN, [2, 3, 4])


def test_dimension_small_run():
    est = dim_upper_estimate(amo(1), GOLDEN, [21, 34, 55, 89, 144, 233], t_grid=(0.5, 0.55, 0.6, 1.0))
    assert est.sums.shape == (6, 4)
    assert est.t_star is not None and est.t_star <= 0.6
    assert 0 < est.box_slope <= 0.6
    assert est.decreasing_tail(0.55)


# ---------------------------------------------------------------- scaling


def test_scaling_first_rows():
    tab = thouless_scaling_table("golden", 3, 1e-9)
    assert tab.rows[0].q == 1 and tab.rows[0].measure == pytest.approx(8.0, abs=1e-9)
    assert tab.rows[1].q == 2 and tab.rows[1].q_measure == pytest.approx(8 * math.sqrt(2), abs=1e-8)
    assert all(r.q_measure < LAST_BOUND for r in tab.rows)


def test_scaling_bound_is_hard():
    with pytest.raises(AssertionError):
        ScalingTable([ScalingRow(1, 1, 3, 8.0)])
    # the bound is only asserted at criticality
    ScalingTable([ScalingRow(1, 1, 3, 8.0)], lam=2.0)


def test_scaling_trend_needs_rows():
    tab = thouless_scaling_table("golden", 4, 1e-9)
    with pytest.raises(InsufficientData):
        tab.trend_toward_reference()


def test_scaling_measure_decreases():
    tab = thouless_scaling_table("golden", 12, 1e-9)
    m = [r.measure for r in tab.rows if r.q >= 2]
    assert all(b < a for a, b in zip(m, m[1:]))
    assert tab.trend_toward_reference()


def test_scaling_n_max():
    with pytest.raises(ValueError):
        thouless_scaling_table("golden", 1)


# ---------------------------------------------------------------- Aubry-Andre


def test_aubry_andre_period_two_row():
    tab = aubry_andre_check(2.0, "golden", 3)
    q, m, dev = tab.rows[0]
    assert q == 2 and m == pytest.approx(4 * math.sqrt(5), abs=1e-9)
    assert dev == pytest.approx(4 * math.sqrt(5) - 4, abs=1e-9)


@pytest.mark.parametrize("lam", [2.0, 0.5])
def test_aubry_andre_golden_233(lam):
    tab = aubry_andre_check(lam, "golden", 12)
    assert tab.rows[-1][0] == 233
    assert tab.final_relative() < 0.05
    assert tab.decreasing()


def test_aubry_andre_preconditions():
    with pytest.raises(ValueError):
        aubry_andre_check(1.0)


# ---------------------------------------------------------------- continuity


def test_continuity_identical_fractions_zero():
    from harperlab.bands import directed_distance

    bs = union_spectrum(chiral_amo(), Fraction(3, 8), 1e-9)
    assert directed_distance(bs, bs) == 0.0


def test_continuity_insufficient():
    with pytest.raises(InsufficientData):
        continuity_fit(amo(1), "golden", range(6, 9))


def test_continuity_fit_report():
    fit = continuity_fit(amo(1), "golden", range(5, 11))
    assert [r[0] for r in fit.rows] == list(range(5, 11))
    assert all(r[4] >= 0 for r in fit.rows)
    assert 0 < fit.gamma < 2 and fit.K > 0
    assert "0.5" in fit.note


def test_cover_validity_critical_amo():
    viol = cover_violations(amo(1), GOLDEN, 4, 14, 2.0)
    assert len(viol) == 11
    assert all(d == 0.0 for *_, d in viol)
