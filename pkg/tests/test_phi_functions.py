import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from musielak.errors import DomainError, PhiRangeError
from musielak.phi_functions import (ExponentField, Family, PhiFunction, ScalarField, evaluate,
                                    validate_phi)

VAR_P = ScalarField.from_expression("2 + x1", 1)

FAMILIES = [
    PhiFunction.power(2.0),
    PhiFunction.power(VAR_P),
    PhiFunction.power_log(VAR_P),
    PhiFunction.double_phase(2.0, 3.0, ScalarField.from_expression("x1", 1)),
    PhiFunction.exp_power(2.0),
    PhiFunction.orlicz(lambda t: 0.5 * t**2),
]


def test_power_variable_example():
    value = evaluate(PhiFunction.power(VAR_P), [0.5], 2.0)
    assert value == pytest.approx(2**2.5, rel=1e-15)
    assert value == pytest.approx(5.656854, abs=1e-6)


@pytest.mark.parametrize("phi", FAMILIES, ids=lambda p: p.family.value)
@pytest.mark.parametrize("x", [0.0, 0.3, 1.0])
def test_zero_at_zero(phi, x):
    assert evaluate(phi, [x], 0.0) == 0.0


def test_double_phase_zero_weight():
    phi = PhiFunction.double_phase(2.0, 3.0, 0.0)
    for x in (0.0, 0.4, 0.9):
        assert evaluate(phi, [x], 2.0) == 4.0


def test_power_log_and_exp_power_formulas():
    x, t = 0.25, 3.0
    assert evaluate(PhiFunction.power_log(VAR_P), [x], t) == pytest.approx(
        t**2.25 * math.log(math.e + t), rel=1e-14)
    assert evaluate(PhiFunction.exp_power(2.0), [x], 1e-9) == pytest.approx(1e-18, rel=1e-12)


def test_exp_power_overflow_is_range_error():
    phi = PhiFunction.exp_power(2.0)
    with pytest.raises(PhiRangeError):
        evaluate(phi, [0.5], 100.0)
    assert math.isinf(evaluate(phi, [0.5], 100.0, strict=False))


def test_range_error_names_node():
    phi = PhiFunction.exp_power(2.0)
    pts = np.linspace(0, 1, 5)[:, None]
    t = np.array([1.0, 1.0, 50.0, 1.0, 1.0])
    with pytest.raises(PhiRangeError) as info:
        phi.bind(pts)(t)
    assert info.value.index == 2
    assert info.value.point == [0.5]


def test_field_outside_box_is_domain_error():
    axes = [np.linspace(0, 1, 5)]
    p = ExponentField.from_samples(axes, 2.0 + axes[0])
    with pytest.raises(DomainError):
        p(np.array([[1.5]]))


def test_exponent_lower_bound():
    with pytest.raises(ValueError, match="exponent lower bound must exceed 1"):
        PhiFunction.power(1.0)
    with pytest.raises(ValueError, match="exponent lower bound must exceed 1"):
        PhiFunction.power(ScalarField.from_expression("1 + x1", 1))([0.0], 1.0)
    unchecked = ExponentField.unchecked(ScalarField.from_expression("2 + sin(2*pi*x1)", 1))
    assert evaluate(PhiFunction.power(unchecked), [0.75], 2.0) == pytest.approx(2.0)


def test_grid_sample_exponent_interpolates():
    axes = [np.linspace(0, 1, 3)]
    p = ExponentField.from_samples(axes, np.array([2.0, 3.0, 2.0]))
    assert p(np.array([[0.25]]))[0] == pytest.approx(2.5)
    assert p.lower == 2.0 and p.upper == 3.0


def test_negative_t_rejected():
    with pytest.raises(ValueError):
        evaluate(PhiFunction.power(2.0), [0.5], -1.0)


def test_family_metadata():
    assert PhiFunction.power(2.0).x_independent
    assert not PhiFunction.power(VAR_P).x_independent
    assert PhiFunction.orlicz(lambda t: t**2).family is Family.ORLICZ_CUSTOM


# -- validate_phi --------------------------------------------------------------

POINTS = np.linspace(0, 1, 5)[:, None]


def test_validate_quadratic_passes():
    report = validate_phi(PhiFunction.power(2.0), POINTS)
    assert report.passed and report.first_failure is None


@pytest.mark.parametrize("phi", FAMILIES, ids=lambda p: p.family.value)
def test_validate_builtin_families(phi):
    assert validate_phi(phi, POINTS).passed


def test_validate_sqrt_convexity_witness():
    report = validate_phi(PhiFunction.orlicz(np.sqrt), POINTS)
    assert report.first_failure == "convex"
    w = report.witness
    s, t = w["s"], w["t"]
    # recheck the sampled triple by hand
    assert math.sqrt(0.5 * (s + t)) > 0.5 * (math.sqrt(s) + math.sqrt(t))
    assert w["M_mid"] == pytest.approx(math.sqrt(0.5 * (s + t)))


def test_validate_linear_fails_limits():
    report = validate_phi(PhiFunction.orlicz(lambda t: 1.0 * t), POINTS)
    assert not report.passed
    assert report.first_failure == "limit_small"
    assert not report.checks["limit_small"] and not report.checks["limit_large"]
    assert report.checks["convex"] and report.checks["monotone"]
    assert report.witness["ratio"] == pytest.approx(1.0)


def test_validate_reports_zero_and_positivity():
    report = validate_phi(PhiFunction.orlicz(lambda t: t**2 + 1.0), POINTS)
    assert report.first_failure == "zero"
    report = validate_phi(PhiFunction.orlicz(lambda t: np.where(t < 1, 0.0, (t - 1) ** 2)), POINTS)
    assert report.first_failure == "positive"


# -- properties ----------------------------------------------------------------

t_values = st.floats(min_value=0.0, max_value=50.0, allow_nan=False)
x_values = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(x=x_values, s=t_values, t=t_values, k=st.integers(0, len(FAMILIES) - 2))
def test_monotone_and_midpoint_convex(x, s, t, k):
    phi = FAMILIES[k]
    s, t = min(s, t), max(s, t)
    ms, mt = evaluate(phi, [x], s, strict=False), evaluate(phi, [x], t, strict=False)
    assert ms <= mt
    mid = evaluate(phi, [x], 0.5 * (s + t), strict=False)
    if math.isfinite(mt):
        assert mid <= 0.5 * (ms + mt) + 1e-12 * max(1.0, mt)


@settings(max_examples=100, deadline=None)
@given(x=x_values, t=st.floats(min_value=1e-6, max_value=1e3), p=st.floats(min_value=1.01, max_value=6.0))
def test_constant_power_reduces_to_t_p(x, t, p):
    assert evaluate(PhiFunction.power(p), [x], t) == pytest.approx(t**p, rel=1e-15, abs=0)


@settings(max_examples=50, deadline=None)
@given(x=x_values, t=st.floats(min_value=1e-6, max_value=10.0))
def test_positive_and_pure(x, t):
    for phi in FAMILIES:
        a, b = evaluate(phi, [x], t), evaluate(phi, [x], t)
        assert a > 0 and a == b


@settings(max_examples=50, deadline=None)
@given(x=st.lists(x_values, min_size=1, max_size=20))
def test_exponent_within_bounds(x):
    p = ExponentField.from_samples([np.linspace(0, 1, 11)], 2.0 + np.linspace(0, 1, 11) ** 2)
    vals = p(np.array(x)[:, None])
    assert np.all(vals >= p.lower - 1e-15) and np.all(vals <= p.upper + 1e-15)
