import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from harperlab.errors import InvalidFamily
from harperlab.model import (
    SampledOperator, TrigPoly, amo, chiral_amo, custom, load_custom, make_family, parse_model, period_coeffs,
    sample_coeffs, shifted_chiral_amo, validate_family,
)

fractions = st.builds(Fraction, st.integers(1, 60), st.integers(2, 61)).filter(lambda f: 0 < f < 1)


def test_amo_values():
    fam = amo(1)
    assert abs(float(fam.v(0.25))) < 1e-15
    assert float(fam.v(0.0)) == 2.0
    assert np.all(fam.b(np.linspace(0, 1, 7)) == 1.0)
    assert fam.b_zeros == ()


def test_chiral_values():
    fam = chiral_amo()
    assert float(fam.b(0.25)) == 2.0
    assert abs(float(fam.b(0.0))) < 1e-15 and abs(float(fam.b(0.5))) < 1e-15
    assert fam.b_zeros == (0.0, 0.5)


def test_shifted_chiral_offset():
    fam = shifted_chiral_amo(Fraction(1, 2))
    op = SampledOperator(fam, Fraction(1, 2), 0.0)
    _, b = sample_coeffs(op, range(1))
    assert abs(b[0]) < 1e-12


def test_derivative_bounds_are_analytic():
    assert amo(1.5).v_deriv_max == 4 * math.pi * 1.5
    assert chiral_amo().b_deriv_max == 4 * math.pi


def test_sample_amo_half():
    v, b = sample_coeffs(SampledOperator(amo(1), Fraction(1, 2), 0.0), range(4))
    assert v.tolist() == [2.0, -2.0, 2.0, -2.0]
    assert b.tolist() == [1.0] * 4


def test_sample_chiral_quarter():
    _, b = sample_coeffs(SampledOperator(chiral_amo(), Fraction(1, 4), 0.0), range(4))
    assert np.allclose(b, [0, 2, 0, -2], atol=1e-14)


def test_theta_reduced_mod_one():
    assert SampledOperator(amo(1), Fraction(1, 3), 2.25).theta == 0.25
    assert SampledOperator(amo(1), Fraction(1, 3), -0.25).theta == 0.75


@given(fractions, st.floats(0, 1, exclude_max=True), st.integers(-50, 50))
def test_periodicity_in_n(frac, theta, n):
    for fam in (amo(1.3), chiral_amo(), shifted_chiral_amo(frac)):
        op = SampledOperator(fam, frac, theta)
        q = frac.denominator
        v1, b1 = sample_coeffs(op, [n])
        v2, b2 = sample_coeffs(op, [n + q])
        assert abs(v1[0] - v2[0]) < 1e-14 and abs(b1[0] - b2[0]) < 1e-14


@given(fractions, st.floats(0, 1, exclude_max=True), st.integers(0, 40))
def test_phase_equivariance(frac, theta, n):
    fam = amo(0.7)
    a = sample_coeffs(SampledOperator(fam, frac, theta + float(frac)), [n])
    b = sample_coeffs(SampledOperator(fam, frac, theta), [n + 1])
    assert abs(a[0][0] - b[0][0]) < 1e-13


@given(st.floats(0, 1, exclude_max=True), st.integers(-100, 100))
def test_closed_form_agreement(theta, n):
    alpha = Fraction(3, 7)
    v, b = sample_coeffs(SampledOperator(amo(2), alpha, theta), [n])
    assert abs(v[0] - 4 * math.cos(2 * math.pi * (theta + n * 3 / 7))) < 1e-12
    _, b = sample_coeffs(SampledOperator(chiral_amo(), alpha, theta), [n])
    assert abs(b[0] - 2 * math.sin(2 * math.pi * (theta + n * 3 / 7))) < 1e-12


def test_period_coeffs_shape():
    v, b = period_coeffs(amo(1), Fraction(2, 5), np.array([0.1, 0.2, 0.3]))
    assert v.shape == b.shape == (3, 5)


def test_custom_family_validation():
    fam = custom(TrigPoly.make(cos={2: 1}), TrigPoly.make(const=1, sin={1: 2}), 4 * math.pi, 4 * math.pi,
                 (7 / 12, 11 / 12))
    assert fam.trig_degree == 2
    with pytest.raises(InvalidFamily, match="not a zero"):
        custom(TrigPoly.make(), TrigPoly.make(sin={1: 2}), 0, 4 * math.pi, (0.0, 0.3))
    with pytest.raises(InvalidFamily, match="not listed"):
        custom(TrigPoly.make(), TrigPoly.make(sin={1: 2}), 0, 4 * math.pi, (0.0,))
    with pytest.raises(InvalidFamily, match="exceeded"):
        custom(TrigPoly.make(cos={1: 1}), TrigPoly.make(const=1), 1.0, 0.0)


def test_load_custom(tmp_path):
    path = tmp_path / "fam.json"
    path.write_text(json.dumps({"name": "half", "v": {"cos": {"1": "1/2"}}, "b": 1,
                                "v_deriv_max": math.pi, "b_deriv_max": 0}))
    fam = load_custom(path)
    assert fam.name == "half" and abs(float(fam.v(0)) - 0.5) < 1e-15
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(InvalidFamily):
        load_custom(bad)


def test_parse_and_make():
    assert parse_model("amo:2").lam == 2.0
    assert parse_model("chiral").kind == "chiral"
    assert parse_model("shifted-chiral", alpha=Fraction(1, 3)).phase_offset == pytest.approx(0.25 + 1 / 6)
    assert make_family("amo", lam=3).lam == 3.0
    with pytest.raises(InvalidFamily):
        parse_model("nonsense")
    with pytest.raises(InvalidFamily):
        amo(0)


def test_builtins_pass_validator():
    for fam in (amo(1), amo(0.5), chiral_amo(), shifted_chiral_amo(Fraction(2, 5))):
        validate_family(fam)
