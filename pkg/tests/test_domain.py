import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from musielak.domain import (Box, Domain, GridFunction, MultiIndex, bump_profile, derivative,
                             diameter, make_bump, mollify, multi_indices, sine_mode)
from musielak.errors import GeometryError, UnsupportedOrderError


@pytest.mark.parametrize("bounds, expected", [
    ([[0, 1]], 1.0),
    ([[0, 1], [0, 1]], math.sqrt(2)),
    ([[0, 3], [0, 3]], 3 * math.sqrt(2)),
])
def test_diameter_examples(bounds, expected):
    assert diameter(Domain.box(bounds, 9)) == pytest.approx(expected, rel=1e-15)


def test_domain_basics():
    dom = Domain.box([[0, 2], [-1, 1]], [9, 17])
    assert dom.dim == 2 and dom.shape == (9, 17)
    assert np.allclose(dom.spacing, [0.25, 0.125])
    assert dom.points.shape == (9, 17, 2)
    assert dom.integrate(np.ones(dom.shape)) == pytest.approx(4.0, rel=1e-14)


def test_domain_rejects_degenerate_boxes():
    with pytest.raises(ValueError):
        Domain.box([[1, 0]], 9)
    with pytest.raises(ValueError):
        Domain.box([[0, math.inf]], 9)


def test_trapezoid_exact_for_linear():
    dom = Domain.box([[0, 1]], 11)
    assert dom.integrate(dom.axes[0]) == pytest.approx(0.5, rel=1e-15)


@settings(max_examples=50, deadline=None)
@given(shift=st.floats(-10, 10), scale=st.floats(0.1, 10), a=st.floats(0.1, 3), b=st.floats(0.1, 3))
def test_diameter_translation_and_scaling(shift, scale, a, b):
    base = Domain.box([[0, a], [0, b]], 9)
    moved = Domain.box([[shift, shift + a], [shift, shift + b]], 9)
    scaled = Domain.box([[0, scale * a], [0, scale * b]], 9)
    assert moved.diameter == pytest.approx(base.diameter, rel=1e-12)
    assert scaled.diameter == pytest.approx(scale * base.diameter, rel=1e-12)


# -- multi-indices ---------------------------------------------------------------

def test_multi_index_arithmetic():
    a = MultiIndex((1, 0, 2))
    assert a.order == 3
    assert a + MultiIndex((0, 1, 0)) == (1, 1, 2)
    assert MultiIndex.zero(3).order == 0
    assert MultiIndex.unit(2, 1) == (0, 1)
    with pytest.raises(ValueError):
        MultiIndex((1, -1))


@pytest.mark.parametrize("dim, order", [(1, 1), (2, 1), (2, 2), (3, 2)])
def test_multi_indices_count(dim, order):
    got = list(multi_indices(dim, order))
    assert len(got) == math.comb(order + dim - 1, dim - 1)
    assert all(a.order == order for a in got)
    assert got == sorted(got)


# -- bumps -----------------------------------------------------------------------

def test_bump_examples():
    dom = Domain.box([[0, 1]], 9)
    u = make_bump(dom, 0.5, 0.25, "smooth_exp")
    assert u.values[4] == 1.0
    assert bump_profile(np.array([1.0, -1.0]), "smooth_exp").tolist() == [0.0, 0.0]
    assert bump_profile(np.array([1.0]), "poly", 3).tolist() == [0.0]
    v = make_bump(Domain.box([[0, 1]], 9), 0.5, 0.5 - 1e-9, "poly_2")
    assert v.values[6] == pytest.approx((1 - 0.25) ** 2, rel=1e-7)
    assert bump_profile(np.array([0.5]), "poly", 2)[0] == 0.5625


def test_bump_support_must_be_interior():
    dom = Domain.box([[0, 1]], 33)
    with pytest.raises(GeometryError):
        make_bump(dom, 0.5, 0.5)
    with pytest.raises(GeometryError):
        make_bump(dom, 0.1, 0.2)


@settings(max_examples=40, deadline=None)
@given(c=st.floats(0.2, 0.8), w=st.floats(0.02, 0.19), kind=st.sampled_from(["smooth_exp", "poly_2", "poly_4"]))
def test_bump_vanishes_outside_support(c, w, kind):
    dom = Domain.box([[0, 1], [0, 1]], 33)
    u = make_bump(dom, [c, 1 - c], [w, w], kind)
    outside = ~u.support.mask(dom)
    assert np.all(u.values[outside] == 0.0)
    assert u.compact and np.all(u.values >= 0)


def test_sine_mode_not_compact():
    u = sine_mode(Domain.box([[0, 1]], 33))
    assert not u.compact
    assert abs(u.values[0]) < 1e-15 and abs(u.values[-1]) < 1e-15


# -- derivatives -----------------------------------------------------------------

def test_derivative_of_zero():
    dom = Domain.box([[0, 1], [0, 1]], 17)
    zero = GridFunction.from_values(dom, np.zeros(dom.shape))
    for alpha in [(1, 0), (0, 1), (1, 1), (2, 0)]:
        assert np.all(derivative(zero, alpha).values == 0.0)


def test_derivative_linear_exact():
    dom = Domain.box([[0, 1], [0, 2]], [33, 17])
    u = GridFunction.from_function(dom, lambda p: p[..., 0])
    d = derivative(u, (1, 0)).values
    assert np.max(np.abs(d - 1.0)) < 1e-12
    assert np.max(np.abs(derivative(u, (0, 1)).values)) < 1e-12


def _fd_error(n, alpha):
    dom = Domain.box([[0, 1]], n)
    u = make_bump(dom, 0.5, 0.3)
    exact = derivative(u, alpha).values
    fd = derivative(GridFunction.from_values(dom, u.values), alpha).values
    return np.max(np.abs(fd - exact))


@pytest.mark.parametrize("alpha", [(1,), (2,)])
def test_finite_difference_second_order(alpha):
    # the smooth_exp bump has large high derivatives, so the asymptotic
    # regime starts around h = 1/256
    errors = [_fd_error(n, alpha) for n in (257, 513, 1025, 2049)]
    rates = [errors[i] / errors[i + 1] for i in range(3)]
    assert all(3.5 < r < 4.5 for r in rates), rates


def test_unsupported_order():
    dom = Domain.box([[0, 1]], 33)
    u = GridFunction.from_values(dom, dom.axes[0] ** 3)
    with pytest.raises(UnsupportedOrderError):
        derivative(u, (3,))


@settings(max_examples=30, deadline=None)
@given(s=st.floats(-100, 100, allow_nan=False), k=st.integers(-6, 6))
def test_derivative_commutes_with_scaling(s, k):
    dom = Domain.box([[0, 1], [0, 1]], 17)
    u = make_bump(dom, [0.5, 0.4], [0.3, 0.2])
    for alpha in [(1, 0), (0, 1), (1, 1), (2, 0)]:
        assert np.array_equal(derivative(u.scaled(s), alpha).values, s * derivative(u, alpha).values)
    # finite-difference path: exact for power-of-two factors
    raw = GridFunction.from_values(dom, u.values)
    p = 2.0**k
    assert np.array_equal(derivative(raw.scaled(p), (1, 0)).values, p * derivative(raw, (1, 0)).values)


# -- mollification ---------------------------------------------------------------

def test_mollify_zero():
    dom = Domain.box([[0, 1]], 129)
    zero = GridFunction.from_values(dom, np.zeros(dom.shape), Box([0.4], [0.6]))
    assert np.all(mollify(zero, 0.05, [0.0]).values == 0.0)


def test_mollify_reproduces_constants():
    dom = Domain.box([[0, 1], [0, 1]], 129)
    support = Box([0.1, 0.1], [0.9, 0.9])
    ones = GridFunction.from_values(dom, support.mask(dom).astype(float), support)
    out = mollify(ones, 0.05)
    deep = Box([0.25, 0.25], [0.75, 0.75]).mask(dom)
    assert np.max(np.abs(out.values[deep] - 1.0)) < 1e-10


def test_mollify_converges_monotonically():
    dom = Domain.box([[0, 1]], 2049)
    u = make_bump(dom, 0.5, 0.3)
    devs = [np.max(np.abs(mollify(u, eps).values - u.values)) for eps in (0.1, 0.05, 0.025)]
    assert devs[0] > devs[1] > devs[2]


def test_mollify_geometry_error():
    dom = Domain.box([[0, 1]], 129)
    u = make_bump(dom, 0.5, 0.3)
    with pytest.raises(GeometryError):
        mollify(u, 0.25)
    with pytest.raises(GeometryError):
        mollify(u, 0.1, [0.15])


def test_mollify_shift_translates():
    dom = Domain.box([[0, 1]], 1025)
    u = make_bump(dom, 0.4, 0.1)
    moved = mollify(u, 1e-4, [0.125])  # kernel of a single node, integer shift
    assert np.argmax(moved.values) == np.argmax(u.values) + 128


@settings(max_examples=25, deadline=None)
@given(eps=st.floats(0.01, 0.15), shift=st.floats(-0.1, 0.1), kind=st.sampled_from(["smooth_exp", "poly_4"]))
def test_mollify_nonnegative_and_bounded(eps, shift, kind):
    dom = Domain.box([[0, 1]], 257)
    u = make_bump(dom, 0.5, 0.2, kind)
    out = mollify(u, eps, [shift])
    assert np.all(out.values >= 0)
    assert out.values.max() <= u.values.max() + 1e-10
    assert np.all(out.values[~out.support.mask(dom)] == 0.0)
