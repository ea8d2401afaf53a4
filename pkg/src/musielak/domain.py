"""Box domains on uniform grids, sampled test functions and their derivatives.

Everything here lives on a :class:`Domain`: an axis-aligned box with a
uniform node lattice per axis. Integrals use the tensor trapezoidal rule.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterator, Optional, Sequence

import numpy as np
from scipy import ndimage

from .errors import DomainMismatchError, GeometryError, UnsupportedOrderError

__all__ = [
    "Domain",
    "Box",
    "MultiIndex",
    "GridFunction",
    "multi_indices",
    "diameter",
    "make_bump",
    "sine_mode",
    "derivative",
    "mollify",
    "bump_profile",
]

FD_MAX_ORDER = 2


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box ``prod [lower_i, upper_i]`` with ``nodes_i`` grid nodes per axis."""

    lower: tuple
    upper: tuple
    nodes: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        n = tuple(int(v) for v in np.atleast_1d(self.nodes))
        if not (len(lo) == len(hi) == len(n)) or not lo:
            raise ValueError("lower, upper and nodes must have the same positive length")
        for a, b in zip(lo, hi):
            if not (math.isfinite(a) and math.isfinite(b) and b > a):
                raise ValueError(f"axis bounds [{a}, {b}] must be finite with upper > lower")
        if any(k < 2 for k in n):
            raise ValueError("every axis needs at least 2 nodes")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "nodes", n)

    @classmethod
    def box(cls, bounds: Sequence[Sequence[float]], nodes) -> "Domain":
        """``Domain.box([(0, 1), (0, 2)], 129)``; ``nodes`` may be an int or per axis."""
        bounds = [tuple(b) for b in bounds]
        if np.isscalar(nodes):
            nodes = [nodes] * len(bounds)
        return cls(tuple(b[0] for b in bounds), tuple(b[1] for b in bounds), tuple(nodes))

    @property
    def dim(self) -> int:
        return len(self.nodes)

    @property
    def shape(self) -> tuple:
        return self.nodes

    @property
    def spacing(self) -> np.ndarray:
        return np.array([(b - a) / (n - 1) for a, b, n in zip(self.lower, self.upper, self.nodes)])

    @property
    def lengths(self) -> np.ndarray:
        return np.array(self.upper) - np.array(self.lower)

    @property
    def diameter(self) -> float:
        return diameter(self)

    @cached_property
    def axes(self) -> tuple:
        return tuple(np.linspace(a, b, n) for a, b, n in zip(self.lower, self.upper, self.nodes))

    @cached_property
    def points(self) -> np.ndarray:
        """Node coordinates, shape ``nodes + (N,)``."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    @cached_property
    def weights(self) -> np.ndarray:
        """Tensor trapezoidal weights, shape ``nodes``."""
        w = np.ones(())
        for n, h in zip(self.nodes, self.spacing):
            w1 = np.full(n, h)
            w1[0] = w1[-1] = 0.5 * h
            w = np.multiply.outer(w, w1)
        return w

    def integrate(self, values) -> float:
        return float(np.sum(self.weights * values))

    def contains_box(self, box: "Box", strict: bool = False) -> bool:
        lo, hi = np.array(self.lower), np.array(self.upper)
        if strict:
            return bool(np.all(box.lower > lo) and np.all(box.upper < hi))
        tol = 1e-12 * np.maximum(self.lengths, 1.0)
        return bool(np.all(box.lower >= lo - tol) and np.all(box.upper <= hi + tol))

    def full_box(self) -> "Box":
        return Box(np.array(self.lower), np.array(self.upper))

    def describe(self) -> dict:
        return {"dim": self.dim, "lower": list(self.lower), "upper": list(self.upper),
                "nodes": list(self.nodes), "spacing": self.spacing.tolist(),
                "diameter": self.diameter}


def diameter(domain: Domain) -> float:
    """Euclidean diameter of the box."""
    return float(math.sqrt(sum((b - a) ** 2 for a, b in zip(domain.lower, domain.upper))))


@dataclass(frozen=True)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float))

    def shifted(self, shift) -> "Box":
        return Box(self.lower + shift, self.upper + shift)

    def fattened(self, pad) -> "Box":
        return Box(self.lower - pad, self.upper + pad)

    def union(self, other: "Box") -> "Box":
        return Box(np.minimum(self.lower, other.lower), np.maximum(self.upper, other.upper))

    def clipped(self, domain: Domain) -> "Box":
        return Box(np.maximum(self.lower, domain.lower), np.minimum(self.upper, domain.upper))

    def mask(self, domain: Domain) -> np.ndarray:
        """Nodes inside the closed box."""
        tol = 1e-12 * np.maximum(domain.lengths, 1.0)
        inside = np.ones(domain.nodes, dtype=bool)
        for i, ax in enumerate(domain.axes):
            ok = (ax >= self.lower[i] - tol[i]) & (ax <= self.upper[i] + tol[i])
            shape = [1] * domain.dim
            shape[i] = -1
            inside &= ok.reshape(shape)
        return inside

    def to_dict(self):
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}


class MultiIndex(tuple):
    """Derivative multi-index alpha = (alpha_1, ..., alpha_N)."""

    def __new__(cls, components):
        comps = tuple(int(c) for c in components)
        if any(c < 0 for c in comps):
            raise ValueError("multi-index components must be nonnegative")
        return super().__new__(cls, comps)

    @property
    def order(self) -> int:
        return sum(self)

    def __add__(self, other):
        return MultiIndex(a + b for a, b in zip(self, other))

    @classmethod
    def zero(cls, dim: int) -> "MultiIndex":
        return cls((0,) * dim)

    @classmethod
    def unit(cls, dim: int, axis: int, k: int = 1) -> "MultiIndex":
        comps = [0] * dim
        comps[axis] = k
        return cls(comps)


def multi_indices(dim: int, order: int) -> Iterator[MultiIndex]:
    """All multi-indices of length ``dim`` with ``|alpha| == order``, in lexicographic order."""
    for combo in itertools.product(range(order + 1), repeat=dim):
        if sum(combo) == order:
            yield MultiIndex(combo)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nodal values of a function on ``domain``.

    ``derivs`` optionally maps a multi-index alpha to the nodal values of the
    analytic derivative D^alpha u, valid for ``|alpha| <= max_order``.
    ``support`` is a box outside of which the values vanish; ``compact``
    marks supports strictly inside the domain.
    """

    domain: Domain
    values: np.ndarray
    support: Box
    compact: bool = False
    derivs: Optional[Callable[[MultiIndex], np.ndarray]] = field(default=None, repr=False)
    max_order: int = 0
    label: str = ""

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.domain.shape:
            raise ValueError(f"values shape {vals.shape} != grid shape {self.domain.shape}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_values(cls, domain, values, support: Optional[Box] = None, label=""):
        support = domain.full_box() if support is None else support
        return cls(domain, values, support, domain.contains_box(support, strict=True),
                   label=label)

    @classmethod
    def from_function(cls, domain, func, support: Optional[Box] = None, label=""):
        """Sample ``func(points)`` (points of shape ``(..., N)``) on the grid."""
        return cls.from_values(domain, func(domain.points), support, label)

    @property
    def has_analytic(self) -> bool:
        return self.derivs is not None

    def _check_same_grid(self, other: "GridFunction"):
        if other.domain != self.domain:
            raise DomainMismatchError("grid functions live on different domains")

    def scaled(self, s: float) -> "GridFunction":
        s = float(s)
        derivs = None
        if self.derivs is not None:
            base = self.derivs
            derivs = lambda alpha: s * base(alpha)  # noqa: E731
        return GridFunction(self.domain, s * self.values, self.support, self.compact,
                            derivs, self.max_order, self.label)

    def __mul__(self, s):
        return self.scaled(s)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self.scaled(1.0 / s)

    def __neg__(self):
        return self.scaled(-1.0)

    def _combine(self, other: "GridFunction", sign: float) -> "GridFunction":
        self._check_same_grid(other)
        derivs = None
        order = 0
        if self.derivs is not None and other.derivs is not None:
            f, g = self.derivs, other.derivs
            derivs = lambda alpha: f(alpha) + sign * g(alpha)  # noqa: E731
            order = min(self.max_order, other.max_order)
        return GridFunction(self.domain, self.values + sign * other.values,
                            self.support.union(other.support),
                            self.compact and other.compact, derivs, order)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def to_csv(self, path):
        """Write ``x1,...,xN,value`` rows, one per node."""
        pts = self.domain.points.reshape(-1, self.domain.dim)
        data = np.column_stack([pts, self.values.ravel()])
        header = ",".join([f"x{i + 1}" for i in range(self.domain.dim)] + ["value"])
        np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


# -- test functions -----------------------------------------------------------

def bump_profile(s, kind: str = "smooth_exp", k: int = 4, order: int = 0) -> np.ndarray:
    """One-dimensional bump b(s) on (-1, 1), or its derivative of order <= 2.

    smooth_exp: b(s) = exp(1 - 1/(1 - s^2)); poly: b(s) = (1 - s^2)^k.
    """
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out = np.zeros_like(s)
    q = 1.0 - si * si
    if kind == "smooth_exp":
        b = np.exp(1.0 - 1.0 / q)
        if order == 0:
            vals = b
        else:
            g1 = -2.0 * si / q**2
            if order == 1:
                vals = b * g1
            elif order == 2:
                g2 = -2.0 / q**2 - 8.0 * si * si / q**3
                vals = b * (g1 * g1 + g2)
            else:
                raise UnsupportedOrderError(f"bump derivatives are attached up to order 2, got {order}")
    elif kind == "poly":
        if order == 0:
            vals = q**k
        elif order == 1:
            vals = -2.0 * k * si * q ** (k - 1)
        elif order == 2:
            vals = -2.0 * k * q ** (k - 1)
            if k >= 2:
                vals = vals + 4.0 * k * (k - 1) * si * si * q ** (k - 2)
        else:
            raise UnsupportedOrderError(f"bump derivatives are attached up to order 2, got {order}")
    else:
        raise ValueError(f"unknown bump kind {kind!r}")
    out[inside] = vals
    return out


def _parse_kind(kind: str, k: Optional[int]):
    if kind.startswith("poly_"):
        return "poly", int(kind.split("_", 1)[1])
    if kind == "poly":
        return "poly", 4 if k is None else int(k)
    if kind == "smooth_exp":
        return kind, 0
    raise ValueError(f"unknown bump kind {kind!r}")


def make_bump(domain: Domain, center, widths, kind: str = "smooth_exp",
              k: Optional[int] = None, label: str = "") -> GridFunction:
    """Tensor bump u(x) = prod_i b((x_i - c_i) / w_i) with analytic derivatives to order 2.

    ``kind`` is ``"smooth_exp"`` or ``"poly_k"`` (e.g. ``"poly_4"``). The box
    ``|x_i - c_i| < w_i`` must sit strictly inside the domain.
    """
    base, kk = _parse_kind(kind, k)
    c = np.broadcast_to(np.asarray(center, dtype=float), (domain.dim,)).copy()
    w = np.broadcast_to(np.asarray(widths, dtype=float), (domain.dim,)).copy()
    if np.any(w <= 0):
        raise ValueError("bump widths must be positive")
    support = Box(c - w, c + w)
    if not domain.contains_box(support, strict=True):
        raise GeometryError(f"bump support {support.to_dict()} escapes the domain")

    profiles = {}

    def profile(axis, order):
        key = (axis, order)
        if key not in profiles:
            s = (domain.axes[axis] - c[axis]) / w[axis]
            profiles[key] = bump_profile(s, base, kk, order) / w[axis] ** order
        return profiles[key]

    def derivs(alpha):
        alpha = MultiIndex(alpha)
        if alpha.order > FD_MAX_ORDER or max(alpha) > FD_MAX_ORDER:
            raise UnsupportedOrderError(f"analytic bump derivatives stop at order 2, got {tuple(alpha)}")
        out = np.ones(())
        for axis, a in enumerate(alpha):
            out = np.multiply.outer(out, profile(axis, a))
        return out

    values = derivs(MultiIndex.zero(domain.dim))
    return GridFunction(domain, values, support, True, derivs, FD_MAX_ORDER,
                        label or f"{kind}(c={c.tolist()}, w={w.tolist()})")


def sine_mode(domain: Domain, modes=1, label: str = "") -> GridFunction:
    """u(x) = prod_i sin(k_i pi (x_i - a_i) / L_i), vanishing on the box boundary.

    Analytic derivatives of every order are attached. The support is the
    whole box, so the function is not compactly supported in the strict sense.
    """
    k = np.broadcast_to(np.asarray(modes, dtype=float), (domain.dim,))
    omega = k * np.pi / domain.lengths

    def derivs(alpha):
        out = np.ones(())
        for axis, a in enumerate(MultiIndex(alpha)):
            arg = omega[axis] * (domain.axes[axis] - domain.lower[axis])
            out = np.multiply.outer(out, omega[axis] ** a * np.sin(arg + 0.5 * np.pi * a))
        return out

    values = derivs(MultiIndex.zero(domain.dim))
    return GridFunction(domain, values, domain.full_box(), False, derivs, 16,
                        label or f"sin(k={k.tolist()})")


# -- differentiation ----------------------------------------------------------

def _second_difference(values, h, axis):
    v = np.moveaxis(values, axis, 0)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h**2
    out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h**2
    out[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / h**2
    return np.moveaxis(out, 0, axis)


def derivative(u: GridFunction, alpha) -> GridFunction:
    """D^alpha u on the grid.

    Uses the attached analytic derivatives when available; otherwise second
    order finite differences (central inside, one-sided at the edges) for
    ``|alpha| <= 2``, with the support grown by one cell along each
    differentiated axis.
    """
    dom = u.domain
    alpha = MultiIndex(alpha)
    if len(alpha) != dom.dim:
        raise ValueError(f"multi-index {tuple(alpha)} does not match dimension {dom.dim}")
    if alpha.order == 0:
        return u
    if u.derivs is not None and alpha.order <= u.max_order:
        base = u.derivs
        return GridFunction(dom, base(alpha), u.support, u.compact,
                            lambda beta: base(alpha + MultiIndex(beta)),
                            u.max_order - alpha.order, u.label)
    if alpha.order > FD_MAX_ORDER:
        raise UnsupportedOrderError(
            f"order {alpha.order} exceeds the available evaluators "
            f"(analytic up to {u.max_order if u.derivs else 0}, stencils up to {FD_MAX_ORDER})")
    h = dom.spacing
    vals = u.values
    pad = np.zeros(dom.dim)
    for axis, a in enumerate(alpha):
        if a == 0:
            continue
        if dom.nodes[axis] < 4:
            raise UnsupportedOrderError("finite differences need at least 4 nodes per axis")
        if a == 1:
            vals = np.gradient(vals, h[axis], axis=axis, edge_order=2)
        else:
            vals = _second_difference(vals, h[axis], axis)
        pad[axis] = h[axis]
    grown = u.support.fattened(pad)
    # one-sided edge stencils reach three nodes inward
    lo_edge = grown.lower - 2 * pad <= np.array(dom.lower)
    hi_edge = grown.upper + 2 * pad >= np.array(dom.upper)
    lower = np.where(lo_edge & (pad > 0), dom.lower, grown.lower)
    upper = np.where(hi_edge & (pad > 0), dom.upper, grown.upper)
    support = Box(lower, upper).clipped(dom)
    return GridFunction(dom, vals, support, dom.contains_box(support, strict=True),
                        None, 0, u.label)


# -- mollification ------------------------------------------------------------

def _kernel_1d(epsilon: float, h: float) -> np.ndarray:
    m = int(math.ceil(epsilon / h)) - 1
    if m <= 0:
        return np.ones(1)
    offsets = np.arange(-m, m + 1) * h
    return bump_profile(offsets / epsilon, "smooth_exp")


def mollify(u: GridFunction, epsilon: float, shift=None) -> GridFunction:
    """Discrete J_eps * u(. - shift).

    The kernel is the tensor smooth bump of half-width ``epsilon`` sampled on
    the grid and normalized to unit discrete mass, so constants are
    reproduced exactly away from the support edge. Off-grid shifts are
    resolved by multilinear interpolation. The shifted support fattened by
    ``epsilon`` must stay inside the domain.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    dom = u.domain
    h = dom.spacing
    shift = np.zeros(dom.dim) if shift is None else np.broadcast_to(
        np.asarray(shift, dtype=float), (dom.dim,)).copy()
    steps = shift / h
    fractional = np.abs(steps - np.round(steps)) > 1e-9
    pad = np.full(dom.dim, float(epsilon)) + np.where(fractional, h, 0.0)
    support = u.support.shifted(shift).fattened(pad)
    if not dom.contains_box(support):
        raise GeometryError(
            f"shifted support fattened by epsilon={epsilon} escapes the domain: {support.to_dict()}")
    vals = u.values
    if np.any(shift != 0):
        if np.any(fractional):
            vals = ndimage.shift(vals, steps, order=1, mode="constant", cval=0.0, prefilter=False)
        else:
            vals = ndimage.shift(vals, np.round(steps), order=0, mode="constant", cval=0.0)
    for axis in range(dom.dim):
        kern = _kernel_1d(epsilon, h[axis])
        kern = kern / kern.sum()
        if kern.size > 1:
            vals = ndimage.convolve1d(vals, kern, axis=axis, mode="constant", cval=0.0)
    return GridFunction(dom, vals, support, dom.contains_box(support, strict=True),
                        None, 0, f"J_{epsilon:g}*{u.label}")
