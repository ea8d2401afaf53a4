"""Musielak Phi-functions M(x, t) and their defining-property validation.

A Phi-function is evaluated in two steps: :meth:`PhiFunction.bind` resolves
the spatial fields (exponent p(x), weight a(x)) on a fixed set of points and
returns a :class:`BoundPhi`, which maps magnitudes t to M(x, t) on those
points. Solvers that call M repeatedly on the same nodes (norm bisection,
conjugation) bind once and reuse the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import DomainError, PhiRangeError

__all__ = [
    "Family",
    "ScalarField",
    "ExponentField",
    "PhiFunction",
    "BoundPhi",
    "ValidationReport",
    "evaluate",
    "validate_phi",
]


class Family(str, Enum):
    POWER_VARIABLE = "power_variable"
    DOUBLE_PHASE = "double_phase"
    POWER_LOG = "power_log"
    EXP_POWER = "exp_power"
    ORLICZ_CUSTOM = "orlicz_custom"


def _as_points(x) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1)
    return pts


class ScalarField:
    """A real field x -> f(x) on R^N.

    Three representations are supported: a constant, a closed form (a
    Python callable on point arrays, or an expression string in ``x1..xN``
    compiled with sympy), and nodal samples on a rectilinear grid with
    multilinear interpolation in between.

    ``box`` optionally restricts the points the field accepts; sampled
    fields always carry the box spanned by their grid.
    """

    def __init__(self, kind, *, value=None, func=None, expr=None, axes=None,
                 samples=None, box=None, lower=None, upper=None):
        self.kind = kind
        self.value = value
        self.expr = expr
        self._func = func
        self._interp = None
        self.axes = None
        self.samples = None
        if kind == "grid_samples":
            self.axes = tuple(np.asarray(a, dtype=float) for a in axes)
            self.samples = np.asarray(samples, dtype=float)
            self._interp = RegularGridInterpolator(
                self.axes, self.samples, method="linear", bounds_error=False,
                fill_value=None)
            box = (np.array([a[0] for a in self.axes]),
                   np.array([a[-1] for a in self.axes]))
            lower = float(self.samples.min()) if lower is None else lower
            upper = float(self.samples.max()) if upper is None else upper
        elif kind == "constant":
            lower = upper = float(value)
        if box is not None:
            box = (np.asarray(box[0], dtype=float), np.asarray(box[1], dtype=float))
        self.box = box
        self.lower = lower
        self.upper = upper

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, value: float):
        return cls("constant", value=float(value))

    @classmethod
    def from_callable(cls, func: Callable, *, lower=None, upper=None, box=None):
        return cls("closed_form", func=func, lower=lower, upper=upper, box=box)

    @classmethod
    def from_expression(cls, expr: str, dim: int, *, lower=None, upper=None, box=None):
        """Compile ``expr`` (symbols ``x1``..``xN``, e.g. ``"2 + sin(2*pi*x1)"``)."""
        import sympy

        symbols = sympy.symbols(" ".join(f"x{i + 1}" for i in range(dim)))
        if dim == 1:
            symbols = (symbols,)
        local = {f"x{i + 1}": s for i, s in enumerate(symbols)}
        try:
            parsed = sympy.sympify(expr, locals=local)
        except (sympy.SympifyError, SyntaxError, TypeError) as exc:
            raise ValueError(f"cannot parse expression {expr!r}: {exc}") from None
        unknown = parsed.free_symbols - set(symbols)
        if unknown:
            names = ", ".join(sorted(str(s) for s in unknown))
            raise ValueError(f"expression {expr!r} uses unknown symbols: {names}")
        compiled = sympy.lambdify(symbols, parsed, modules="numpy")

        def func(pts):
            out = compiled(*(pts[..., i] for i in range(dim)))
            return np.broadcast_to(np.asarray(out, dtype=float), pts.shape[:-1])

        return cls("closed_form", func=func, expr=expr, lower=lower, upper=upper, box=box)

    @classmethod
    def from_samples(cls, axes: Sequence[np.ndarray], samples: np.ndarray):
        return cls("grid_samples", axes=axes, samples=samples)

    # -- evaluation -------------------------------------------------------
    def _check_box(self, pts):
        if self.box is None:
            return
        lo, hi = self.box
        span = np.maximum(hi - lo, 1.0)
        slack = 1e-12 * span
        outside = np.any((pts < lo - slack) | (pts > hi + slack), axis=-1)
        if np.any(outside):
            bad = pts.reshape(-1, pts.shape[-1])[np.flatnonzero(outside.ravel())[0]]
            raise DomainError(f"point {bad.tolist()} outside field domain "
                              f"[{lo.tolist()}, {hi.tolist()}]")

    def __call__(self, x) -> np.ndarray:
        pts = _as_points(x)
        self._check_box(pts)
        if self.kind == "constant":
            return np.full(pts.shape[:-1], self.value)
        if self.kind == "grid_samples":
            lo, hi = self.box
            clipped = np.clip(pts, lo, hi)
            return self._interp(clipped.reshape(-1, pts.shape[-1])).reshape(pts.shape[:-1])
        return np.asarray(self._func(pts), dtype=float)

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    def describe(self) -> str:
        if self.kind == "constant":
            return f"{self.value:g}"
        if self.expr is not None:
            return self.expr
        if self.kind == "grid_samples":
            return f"grid_samples{tuple(len(a) for a in self.axes)}"
        return "closed_form"

    def sampled_range(self, points) -> tuple[float, float]:
        vals = self(points)
        return float(np.min(vals)), float(np.max(vals))


class ExponentField(ScalarField):
    """Variable exponent p(x) with 1 < p- <= p(x) <= p+ < infinity.

    Constant and sampled exponents are range-checked at construction;
    closed forms are checked wherever they are evaluated.
    """

    def __init__(self, *args, check_range: bool = True, **kwargs):
        super().__init__(*args, **kwargs)
        self.check_range = check_range
        if not check_range:
            return
        if self.lower is not None and not self.lower > 1:
            raise ValueError("exponent lower bound must exceed 1")
        if self.upper is not None and not math.isfinite(self.upper):
            raise ValueError("exponent upper bound must be finite")

    @classmethod
    def unchecked(cls, field: ScalarField) -> "ExponentField":
        """Wrap ``field`` without the 1 < p range check.

        Meant for probing structural conditions on exponents that touch 1
        (such as 2 + sin(2 pi x1)); the result is not a Phi-function there.
        """
        return cls(field.kind, value=field.value, func=field._func, expr=field.expr,
                   axes=field.axes, samples=field.samples, box=field.box,
                   lower=field.lower, upper=field.upper, check_range=False)

    def __call__(self, x) -> np.ndarray:
        vals = super().__call__(x)
        if not self.check_range:
            return vals
        if vals.size and not (np.all(vals > 1.0) and np.all(np.isfinite(vals))):
            raise ValueError("exponent lower bound must exceed 1 "
                             f"(sampled min {float(np.min(vals)):g})")
        return vals


def _coerce_exponent(p) -> ExponentField:
    if isinstance(p, ExponentField):
        return p
    if isinstance(p, ScalarField):
        return ExponentField(p.kind, value=p.value, func=p._func, expr=p.expr,
                             axes=p.axes, samples=p.samples, box=p.box,
                             lower=p.lower, upper=p.upper)
    if callable(p):
        return ExponentField("closed_form", func=p)
    return ExponentField("constant", value=float(p))


def _coerce_field(a) -> ScalarField:
    if isinstance(a, ScalarField):
        return a
    if callable(a):
        return ScalarField.from_callable(a)
    return ScalarField.constant(a)


@dataclass(frozen=True)
class PhiFunction:
    """A Musielak Phi-function from one of the supported families.

    ===============  =====================================
    family           M(x, t)
    ===============  =====================================
    power_variable   t^p(x)
    double_phase     t^p_base + a(x) t^q
    power_log        t^p(x) log(e + t)
    exp_power        exp(t^p(x)) - 1
    orlicz_custom    custom(t), independent of x
    ===============  =====================================
    """

    family: Family
    p: Optional[ExponentField] = None
    q: Optional[float] = None
    a: Optional[ScalarField] = None
    p_base: Optional[float] = None
    custom: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if fam is Family.DOUBLE_PHASE:
            if self.p_base is None or self.q is None or self.a is None:
                raise ValueError("double_phase needs p_base, q and a weight field")
            if not self.p_base > 1:
                raise ValueError("exponent lower bound must exceed 1")
            if not self.q > self.p_base:
                raise ValueError("double_phase needs q > p_base")
        elif fam is Family.ORLICZ_CUSTOM:
            if self.custom is None:
                raise ValueError("orlicz_custom needs a custom evaluator")
        elif self.p is None:
            raise ValueError(f"{fam.value} needs an exponent field p")

    # -- constructors -----------------------------------------------------
    @classmethod
    def power(cls, p, name=""):
        return cls(Family.POWER_VARIABLE, p=_coerce_exponent(p), name=name)

    @classmethod
    def double_phase(cls, p_base, q, a, name=""):
        return cls(Family.DOUBLE_PHASE, p_base=float(p_base), q=float(q),
                   a=_coerce_field(a), name=name)

    @classmethod
    def power_log(cls, p, name=""):
        return cls(Family.POWER_LOG, p=_coerce_exponent(p), name=name)

    @classmethod
    def exp_power(cls, p, name=""):
        return cls(Family.EXP_POWER, p=_coerce_exponent(p), name=name)

    @classmethod
    def orlicz(cls, func, name=""):
        return cls(Family.ORLICZ_CUSTOM, custom=func, name=name)

    # -- metadata ---------------------------------------------------------
    @property
    def x_independent(self) -> bool:
        if self.family is Family.ORLICZ_CUSTOM:
            return True
        if self.family is Family.DOUBLE_PHASE:
            return self.a.is_constant
        return self.p.is_constant

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        fam = self.family
        if fam is Family.POWER_VARIABLE:
            return f"t^({self.p.describe()})"
        if fam is Family.POWER_LOG:
            return f"t^({self.p.describe()}) log(e+t)"
        if fam is Family.EXP_POWER:
            return f"exp(t^({self.p.describe()})) - 1"
        if fam is Family.DOUBLE_PHASE:
            return f"t^{self.p_base:g} + ({self.a.describe()}) t^{self.q:g}"
        return "orlicz_custom"

    # -- evaluation -------------------------------------------------------
    def bind(self, points, strict: bool = True) -> "BoundPhi":
        """Resolve the spatial fields on ``points`` (shape ``(..., N)``)."""
        pts = _as_points(points)
        shape = pts.shape[:-1]
        p = a = None
        fam = self.family
        if fam in (Family.POWER_VARIABLE, Family.POWER_LOG, Family.EXP_POWER):
            p = self.p(pts)
        elif fam is Family.DOUBLE_PHASE:
            a = self.a(pts)
            if np.any(a < 0):
                raise ValueError("double_phase weight a(x) must be nonnegative")
        return BoundPhi(self, pts, shape, p, a, strict)

    def __call__(self, x, t, strict: bool = True):
        return evaluate(self, x, t, strict=strict)


class BoundPhi:
    """t -> M(x, t) on a fixed set of points.

    ``t`` must broadcast against the point shape. With ``strict`` set, a
    non-finite value raises :class:`PhiRangeError` naming the first
    offending point; otherwise overflow is returned as ``inf``.
    """

    def __init__(self, phi, points, shape, p, a, strict, origin=None):
        self.phi = phi
        self.origin = origin  # grid node numbers of the points, set by take()
        self.points = points
        self.shape = shape
        self.p = p
        self.a = a
        self.strict = strict

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("Phi-functions are evaluated at t >= 0 only")
        fam = self.phi.family
        with np.errstate(over="ignore"):
            if fam is Family.POWER_VARIABLE:
                out = np.power(t, self.p)
            elif fam is Family.POWER_LOG:
                out = np.power(t, self.p) * np.log(np.e + t)
            elif fam is Family.EXP_POWER:
                out = np.expm1(np.power(t, self.p))
            elif fam is Family.DOUBLE_PHASE:
                out = np.power(t, self.phi.p_base) + self.a * np.power(t, self.phi.q)
            else:
                out = np.asarray(self.phi.custom(t), dtype=float)
                out = np.broadcast_to(out, np.broadcast_shapes(out.shape, self.shape))
        if self.strict and not np.all(np.isfinite(out)):
            self._raise_range(out)
        return out

    def take(self, index) -> "BoundPhi":
        """Restrict to the flattened point indices ``index`` (a 1-d integer array)."""
        index = np.asarray(index)
        pts = self.points.reshape(-1, self.points.shape[-1])[index]
        p = None if self.p is None else self.p.reshape(-1)[index]
        a = None if self.a is None else self.a.reshape(-1)[index]
        origin = index if self.origin is None else self.origin[index]
        return BoundPhi(self.phi, pts, pts.shape[:-1], p, a, self.strict, origin)

    def _raise_range(self, out):
        flat = np.flatnonzero(~np.isfinite(out.ravel()))[0]
        point = None
        if out.shape == self.shape:
            point = self.points.reshape(-1, self.points.shape[-1])[flat].tolist()
            if self.origin is not None:
                flat = int(self.origin[flat])
        raise PhiRangeError(
            f"{self.phi.label} overflowed at node {flat}"
            + (f" (x={point})" if point is not None else ""),
            index=int(flat), point=point)


def evaluate(phi: PhiFunction, x, t, strict: bool = True):
    """M(x, t) for a single point or an array of points.

    Returns a float for a single point and scalar ``t``.
    """
    pts = _as_points(x)
    out = phi.bind(pts, strict=strict)(t)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass
class ValidationReport:
    passed: bool
    checks: dict
    first_failure: Optional[str] = None
    witness: Optional[dict] = None

    def to_dict(self):
        return {"passed": self.passed, "checks": dict(self.checks),
                "first_failure": self.first_failure, "witness": self.witness}


_CHECK_ORDER = ("zero", "positive", "monotone", "convex", "limit_small", "limit_large")


def validate_phi(phi: PhiFunction, sample_points, t_grid=None) -> ValidationReport:
    """Sampled check of the Phi-function axioms at every point in ``sample_points``.

    Checks, in order: M(x,0)=0, M(x,t)>0 for t>0, monotonicity on ``t_grid``,
    midpoint convexity on every pair of ``t_grid`` values, and the limit
    ratios M(x,s)/s < 1e-3 at ``t_grid[0]`` and > 1e3 at ``t_grid[-1]``.
    Overflow counts as +inf (which passes the growth checks).
    """
    if t_grid is None:
        t_grid = np.logspace(-8, 8, 64)
    t_grid = np.sort(np.asarray(t_grid, dtype=float))
    pts = _as_points(sample_points)
    if pts.ndim == 1:
        pts = pts[None, :]
    checks = {name: True for name in _CHECK_ORDER}
    witnesses = {}

    def fail(name, witness):
        if checks[name]:
            checks[name] = False
            witnesses[name] = witness

    si, sj = np.triu_indices(t_grid.size, k=1)
    mids = 0.5 * (t_grid[si] + t_grid[sj])
    with np.errstate(over="ignore", invalid="ignore"):
        for x in pts:
            bound = phi.bind(x, strict=False)
            xl = x.tolist()
            m0 = float(bound(0.0))
            if m0 != 0.0:
                fail("zero", {"x": xl, "t": 0.0, "M": m0})
            vals = np.asarray(bound(t_grid), dtype=float)
            nonpos = np.flatnonzero(~(vals > 0))
            if nonpos.size:
                k = nonpos[0]
                fail("positive", {"x": xl, "t": float(t_grid[k]), "M": float(vals[k])})
            drops = np.flatnonzero(~(vals[1:] >= vals[:-1]))
            if drops.size:
                k = drops[0]
                fail("monotone", {"x": xl, "s": float(t_grid[k]), "t": float(t_grid[k + 1]),
                                  "M_s": float(vals[k]), "M_t": float(vals[k + 1])})
            m_mid = np.asarray(bound(mids), dtype=float)
            chord = 0.5 * (vals[si] + vals[sj])
            slack = 1e-12 * np.maximum(1.0, vals[sj])
            bad = np.flatnonzero(~(m_mid <= chord + slack))
            if bad.size:
                k = bad[0]
                fail("convex", {"x": xl, "s": float(t_grid[si[k]]), "t": float(t_grid[sj[k]]),
                                "M_mid": float(m_mid[k]), "chord": float(chord[k])})
            lo_ratio = vals[0] / t_grid[0]
            hi_ratio = vals[-1] / t_grid[-1]
            if not lo_ratio < 1e-3:
                fail("limit_small", {"x": xl, "t": float(t_grid[0]), "ratio": float(lo_ratio)})
            if not hi_ratio > 1e3:
                fail("limit_large", {"x": xl, "t": float(t_grid[-1]), "ratio": float(hi_ratio)})
    first = next((name for name in _CHECK_ORDER if not checks[name]), None)
    return ValidationReport(first is None, checks, first, witnesses.get(first))
