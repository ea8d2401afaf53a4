import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from musielak.conditions import (ConditionReport, check_local_integrability, check_log_holder,
                                 check_M1, check_Y, log_holder_varphi, reproduce, sample_pairs)
from musielak.domain import Box, Domain
from musielak.phi_functions import ExponentField, PhiFunction, ScalarField

DOM = Domain.box([[0.0, 1.0]], 257)
SQUARE = Domain.box([[0.0, 1.0], [0.0, 1.0]], 33)
LINEAR_P = ScalarField.from_expression("2 + x1", 1)
SIN_P = ExponentField.unchecked(ScalarField.from_expression("2 + sin(2*pi*x1)", 1))
JUMP_P = ScalarField.from_expression("2 + Heaviside(x1 - 0.5, 1)", 1)
ONE = lambda tau, s: np.ones(np.broadcast_shapes(np.shape(tau), np.shape(s)))  # noqa: E731


def _straddles(w):
    return min(w["x"][0], w["y"][0]) < 0.5 <= max(w["x"][0], w["y"][0])


# -- (M1) --------------------------------------------------------------------------

def test_M1_orlicz_trivial():
    phi = PhiFunction.orlicz(lambda t: t**2 * np.log1p(t))
    report = check_M1(phi, ONE, domain=DOM)
    assert report.verdict == "pass" and report.witness is None


def test_M1_log_holder_passes():
    report = check_M1(PhiFunction.power(LINEAR_P), log_holder_varphi(1.0), domain=DOM)
    assert report.verdict == "pass"
    assert max(report.details["ladder_values"]) == pytest.approx(math.e, rel=1e-9)
    assert not report.details["varphi_monotone"]["in_s"]


def test_M1_jump_fails_with_witness():
    phi = PhiFunction.power(JUMP_P)
    varphi = log_holder_varphi(1.0)
    report = check_M1(phi, varphi, domain=DOM)
    assert report.verdict == "fail"
    w = report.witness
    assert _straddles(w) and w["s"] > 1.0
    assert reproduce(report, phi=phi, varphi=varphi)
    # the domination really breaks at the witness
    assert w["M_x"] > w["varphi"] * w["M_y"]


def test_M1_growth_cap():
    growing = lambda tau, s: np.asarray(s, dtype=float) ** 2  # noqa: E731
    report = check_M1(PhiFunction.power(2.0), lambda tau, s: np.maximum(1.0, growing(tau, s)),
                      domain=DOM)
    assert report.verdict == "fail" and report.witness["value"] > 1e6
    assert reproduce(report)


def test_M1_inconclusive_when_still_growing():
    slow = lambda tau, s: 1.0 + np.log1p(np.log1p(np.asarray(s, dtype=float)))  # noqa: E731
    report = check_M1(PhiFunction.power(2.0), slow, domain=DOM)
    assert report.verdict == "inconclusive"


# -- log-Hoelder ---------------------------------------------------------------------

def test_log_holder_constant_passes():
    for C0 in (1e-3, 1.0, 10.0):
        assert check_log_holder(ScalarField.constant(2.5), C0, domain=DOM).verdict == "pass"


def test_log_holder_linear_passes():
    report = check_log_holder(LINEAR_P, 1.0, domain=DOM)
    assert report.verdict == "pass"
    # worst sampled pair respects the bound
    w = report.witness
    assert w["lhs"] <= w["rhs"]


def test_log_holder_jump_fails():
    report = check_log_holder(JUMP_P, 1.0, domain=DOM)
    assert report.verdict == "fail"
    w = report.witness
    assert _straddles(w)
    assert w["lhs"] == pytest.approx(1.0)
    assert reproduce(report, p_field=JUMP_P)


@settings(max_examples=20, deadline=None)
@given(C0=st.floats(0.05, 5.0), expr=st.sampled_from(["2 + x1", "2 + Heaviside(x1 - 0.5, 1)",
                                                     "3 + sin(20*x1)", "2 + sqrt(x1)"]))
def test_log_holder_symmetric(C0, expr):
    p = ScalarField.from_expression(expr, 1)
    x, y = sample_pairs(DOM)
    a = check_log_holder(p, C0, (x, y))
    b = check_log_holder(p, C0, (y, x))
    assert a.verdict == b.verdict


def test_sample_pairs_properties():
    x, y = sample_pairs(SQUARE)
    tau = np.linalg.norm(x - y, axis=-1)
    assert np.all(tau > 0) and np.all(tau <= 0.5 + 1e-12)
    assert np.all((x >= 0) & (x <= 1) & (y >= 0) & (y <= 1))
    x2, y2 = sample_pairs(SQUARE)
    assert np.array_equal(x, x2) and np.array_equal(y, y2)
    xj, _ = sample_pairs(SQUARE, seed=3)
    assert not np.array_equal(x, xj)


# -- (Y) -----------------------------------------------------------------------------

def test_Y0_linear_exponent():
    report = check_Y(PhiFunction.power(LINEAR_P), DOM)
    assert report.verdict == "pass"
    assert report.details["Y_0"] and not report.details["Y_inf"]
    assert report.details["t0"] == pytest.approx(1.0, rel=1e-6)
    assert report.details["below_t0"] == "nonincreasing"
    assert report.details["above_t0"] == "nondecreasing"
    assert check_Y(PhiFunction.power(LINEAR_P), DOM, t0=1.0).verdict == "pass"


def test_Yinf_double_phase():
    phi = PhiFunction.double_phase(2.0, 3.0, ScalarField.from_expression("x1", 1))
    report = check_Y(phi, DOM)
    assert report.verdict == "pass" and report.details["Y_inf"]
    assert report.details["Y_inf_direction"] in ("nondecreasing", "constant")


def test_Y_sine_exponent_fails_reproducibly():
    phi = PhiFunction.power(SIN_P)
    report = check_Y(phi, DOM)
    assert report.verdict == "fail"
    assert reproduce(report, phi=phi)
    assert check_Y(phi, DOM, t0=1.0).verdict == "fail"


@pytest.mark.parametrize("resolution", [33, 65, 129, 257, 513])
def test_Y_refinement_keeps_failure(resolution):
    phi = PhiFunction.power(SIN_P)
    report = check_Y(phi, DOM, x_resolution=resolution)
    assert report.verdict == "fail" and reproduce(report, phi=phi)


@pytest.mark.parametrize("axis", [0, 1])
def test_Y_x_independent_every_axis(axis):
    for phi in (PhiFunction.power(3.0), PhiFunction.orlicz(lambda t: t**2)):
        report = check_Y(phi, SQUARE, axis=axis)
        assert report.verdict == "pass" and report.details["Y_inf"]


def test_Y_second_axis_of_square():
    p = ScalarField.from_expression("2 + x2", 2)
    assert check_Y(PhiFunction.power(p), SQUARE, axis=1).details["Y_0"]
    assert check_Y(PhiFunction.power(p), SQUARE, axis=0).details["Y_inf"]


def test_Y_bad_segment():
    with pytest.raises(ValueError):
        check_Y(PhiFunction.power(2.0), DOM, segment=(0.5, 2.0))


# -- local integrability --------------------------------------------------------------

@pytest.mark.parametrize("phi", [
    PhiFunction.power(LINEAR_P), PhiFunction.power_log(LINEAR_P), PhiFunction.exp_power(2.0),
    PhiFunction.double_phase(2.0, 3.0, ScalarField.from_expression("x1", 1)),
])
def test_local_integrability_builtin(phi):
    report = check_local_integrability(phi, 1.0, Box([0.1], [0.9]), domain=DOM)
    assert report.verdict == "pass"


def test_local_integrability_examples():
    big = check_local_integrability(PhiFunction.exp_power(2.0), 10.0, Box([0.0], [1.0]))
    assert big.verdict == "pass"
    assert big.details["integral"] == pytest.approx(math.expm1(100.0), rel=1e-12)
    zero = check_local_integrability(PhiFunction.power(LINEAR_P), 0.0, Box([0.0], [1.0]))
    assert zero.verdict == "pass" and zero.details["integral"] == 0.0
    over = check_local_integrability(PhiFunction.exp_power(4.0), 10.0, Box([0.0], [1.0]))
    assert over.verdict == "inconclusive" and over.witness is not None


def test_local_integrability_box_must_be_inside():
    with pytest.raises(ValueError):
        check_local_integrability(PhiFunction.power(2.0), 1.0, Box([0.5], [1.5]), domain=DOM)


def test_report_serializes():
    report = check_Y(PhiFunction.power(LINEAR_P), DOM)
    d = report.to_dict()
    assert d["condition"] == "Y" and d["verdict"] == "pass"
    assert isinstance(report, ConditionReport) and report.passed


def test_reproduce_ignores_pass():
    report = check_log_holder(LINEAR_P, 1.0, domain=DOM)
    assert not reproduce(report, p_field=LINEAR_P)
