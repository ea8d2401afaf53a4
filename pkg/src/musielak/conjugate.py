"""Numerical Young conjugate M*(x, s) = sup_{t >= 0} (s t - M(x, t)), and the
Young and Hoelder inequality checks built on it.

The supremum of the concave map t -> s t - M(x, t) is located by bracket
expansion followed by golden-section search, vectorized over points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import GridFunction
from .errors import ConvergenceError
from .modular_norms import DEFAULT_TOL, luxemburg_norm

__all__ = [
    "ConjugateResult",
    "ConjugatePhi",
    "conjugate",
    "conjugate_values",
    "young_check",
    "holder_check",
    "biconjugate_audit",
    "audit_grid",
]

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_MAX_DOUBLINGS = 1000


def audit_grid(n: int = 256, lo: float = 1e-4, hi: float = 1e4) -> np.ndarray:
    return np.logspace(math.log10(lo), math.log10(hi), n)


def _golden(g, a, b, n):
    """n golden-section steps maximizing g on [a, b] elementwise.

    Returns the final bracket and the objective at its two interior points.
    """
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    gc, gd = g(c), g(d)
    for _ in range(n):
        left = gc > gd
        # maximizer in [a, d] where left, else in [c, b]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = np.where(left, b - INV_PHI * (b - a), d)
        new_d = np.where(left, c, a + INV_PHI * (b - a))
        c, d = new_c, new_d
        probe = np.where(left, c, d)
        gp = g(probe)
        gc, gd = np.where(left, gp, gd), np.where(left, gc, gp)
    return a, b, gc, gd


def _maximize(evaluate, s, tol):
    """Vectorized sup_{t>=0} (s t - F(t)) for convex nondecreasing F with F(0) = 0.

    ``evaluate`` maps an array of t (same shape as ``s``) to F(t).
    Returns (value, argmax, bracket width).
    """
    s = np.asarray(s, dtype=float)
    shape = s.shape
    s = s.ravel()

    def g(t):
        with np.errstate(over="ignore", invalid="ignore"):
            return s * t - np.asarray(evaluate(t.reshape(shape)), dtype=float).ravel()

    zero = s == 0.0
    hi = np.ones_like(s)
    # grow until the objective drops across [hi/2, hi]
    active = ~zero
    for _ in range(_MAX_DOUBLINGS):
        if not active.any():
            break
        rising = g(hi) >= g(0.5 * hi)
        active &= rising
        hi = np.where(active, 2.0 * hi, hi)
    else:
        bad = np.flatnonzero(active)[0]
        raise ConvergenceError(
            f"s t - M(t) still increasing at t={hi[bad]:.3g} for s={s[bad]:g}: "
            "input is not a Phi-function")
    # shrink while the maximizer sits below hi/2
    active = ~zero
    for _ in range(_MAX_DOUBLINGS):
        if not active.any():
            break
        falling = (g(0.5 * hi) < g(0.25 * hi)) & (hi > 1e-300)
        active &= falling
        hi = np.where(active, 0.5 * hi, hi)
    n = max(1, int(math.ceil(math.log(tol / 0.75) / math.log(INV_PHI))))
    a, b, gc, gd = _golden(g, 0.25 * hi, hi.copy(), n)
    t_star = 0.5 * (a + b)
    value = np.maximum(g(t_star), np.maximum(gc, gd))
    value = np.maximum(value, 0.0)
    t_star = np.where(zero, 0.0, t_star)
    value = np.where(zero, 0.0, value)
    width = np.where(zero, 0.0, b - a)
    return value.reshape(shape), t_star.reshape(shape), width.reshape(shape)


def conjugate_values(phi, points, s, tol: float = DEFAULT_TOL):
    """M*(x, s) at each point (points shape ``(..., N)``, ``s`` broadcast to ``(...)``).

    Returns (values, argmax, bracket width) arrays.
    """
    pts = np.asarray(points, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("conjugate is defined for s >= 0")
    shape = np.broadcast_shapes(pts.shape[:-1], s.shape)
    pts = np.broadcast_to(pts, shape + pts.shape[-1:])
    bound = phi.bind(pts, strict=False)
    return _maximize(bound, np.broadcast_to(s, shape), tol)


@dataclass
class ConjugateResult:
    value: float
    argmax: float
    bracket_width: float

    def to_dict(self):
        return {"value": self.value, "argmax": self.argmax, "bracket_width": self.bracket_width}


def conjugate(phi, x, s: float, tol: float = DEFAULT_TOL) -> ConjugateResult:
    """M*(x, s) for one point and one s >= 0."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    val, arg, width = conjugate_values(phi, x[None, :], np.array([s]), tol)
    return ConjugateResult(float(val[0]), float(arg[0]), float(width[0]))


class _BoundConjugate:
    def __init__(self, bound, tol):
        self.bound = bound
        self.tol = tol

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        s = np.broadcast_to(s, self.bound.shape) if s.ndim == 0 else s
        return _maximize(self.bound, s, self.tol)[0]

    def take(self, index):
        return _BoundConjugate(self.bound.take(index), self.tol)


@dataclass(frozen=True)
class ConjugatePhi:
    """The complementary function M* as a Phi-function-like object.

    Supports :meth:`bind`, so it can be handed to the modular and norm
    solvers (for example to compute ||v||_{M*}).
    """

    phi: object
    tol: float = DEFAULT_TOL
    name: str = field(default="", compare=False)

    def bind(self, points, strict: bool = True):
        return _BoundConjugate(self.phi.bind(points, strict=False), self.tol)

    @property
    def label(self):
        return self.name or f"({self.phi.label})*"


def biconjugate_audit(phi, points, t, tol: float = DEFAULT_TOL, probes=None) -> dict:
    """Compare M**(x, t) = sup_s (t s - M*(x, s)) with M(x, t).

    The sup is first taken over the ``probes`` audit grid, then refined by
    golden section between the neighbours of the best probe (to relative
    width sqrt(tol), enough since the objective is flat at its maximum).
    When the best probe is the last one, the refinement brackets the
    central-difference slope of M at t instead. Every s gives a lower bound
    of M**, so the refinement can only tighten the audit.
    Passes when ``M - 1e3 tol scale <= M** <= M + 10 tol scale`` with
    ``scale = max(1, M)``.
    """
    pts = np.asarray(points, dtype=float)
    t = np.broadcast_to(np.asarray(t, dtype=float), pts.shape[:-1])
    shape = t.shape
    flat_pts = pts.reshape(-1, pts.shape[-1])
    t = t.ravel()
    probes = audit_grid() if probes is None else np.sort(np.asarray(probes, dtype=float))
    grid_pts = np.broadcast_to(flat_pts[:, None, :], t.shape + probes.shape + flat_pts.shape[-1:])
    grid_conj = conjugate_values(phi, grid_pts, np.broadcast_to(probes, grid_pts.shape[:-1]), tol)[0]
    objective = t[:, None] * probes - grid_conj
    k = np.argmax(objective, axis=-1)
    bi = objective[np.arange(t.size), k]

    bound = phi.bind(flat_pts, strict=False)
    last = probes.size - 1
    a = np.where(k > 0, probes[np.maximum(k - 1, 0)], 0.0)
    b = probes[np.minimum(k + 1, last)]
    # best probe at the top of the grid: bracket around the slope M'(x, t),
    # where the sup is attained for smooth M
    edge = k == last
    if np.any(edge):
        step = 1e-6 * t
        slope = (bound(t + step) - bound(t - step)) / (2 * step)
        a = np.where(edge, np.maximum(probes[-2], 0.5 * slope), a)
        b = np.where(edge, np.maximum(probes[-1], 2.0 * slope), b)

    def g(s):
        return t * s - conjugate_values(phi, flat_pts, s, tol)[0]

    n = max(1, int(math.ceil(math.log(math.sqrt(tol) / 4.0) / math.log(INV_PHI))))
    _, _, gc, gd = _golden(g, a, b, n)
    bi = np.maximum(bi, np.maximum(gc, gd))

    m = np.asarray(bound(t), dtype=float)
    scale = np.maximum(1.0, m)
    upper_ok = bi <= m + 10 * tol * scale
    lower_ok = bi >= m - 1e3 * tol * scale
    ok = upper_ok & lower_ok
    rel = np.abs(bi - m) / scale
    worst = int(np.argmax(rel))
    return {
        "passed": bool(np.all(ok)),
        "samples": int(ok.size),
        "failures": int(np.count_nonzero(~ok)),
        "max_rel_error": float(np.max(rel)),
        "worst": {"x": flat_pts[worst].tolist(), "t": float(t[worst]), "M": float(m[worst]),
                  "M_bi": float(bi[worst])},
        "shape": list(shape),
    }


def young_check(phi, xs, us, vs, tol: float = 1e-9, conj_tol: float = DEFAULT_TOL) -> dict:
    """Check u v <= M(x, u) + M*(x, v) on each triple.

    The slack ``tol * max(1, u v)`` is one-sided: it only absorbs the
    numerical shortfall of M*, so a reported violation is genuine.
    """
    xs = np.asarray(xs, dtype=float)
    us = np.asarray(us, dtype=float)
    vs = np.asarray(vs, dtype=float)
    if np.any(us < 0) or np.any(vs < 0):
        raise ValueError("Young's inequality is checked for u, v >= 0")
    m_u = phi.bind(xs, strict=False)(us)
    m_star = conjugate_values(phi, xs, vs, conj_tol)[0]
    lhs = us * vs
    with np.errstate(invalid="ignore"):
        margin = m_u + m_star - lhs
    slack = tol * np.maximum(1.0, lhs)
    ok = margin >= -slack
    k = int(np.argmin(np.where(np.isfinite(margin), margin / np.maximum(1.0, lhs), np.inf)))
    return {
        "passed": bool(np.all(ok)),
        "triples": int(ok.size),
        "violations": int(np.count_nonzero(~ok)),
        "worst_margin": float(margin.ravel()[k]),
        "worst_triple": {"x": xs.reshape(-1, xs.shape[-1])[k].tolist(),
                         "u": float(us.ravel()[k]), "v": float(vs.ravel()[k])},
    }


def holder_check(phi, u: GridFunction, v: GridFunction, tol: float = 1e-6,
                 norm_tol: float = DEFAULT_TOL) -> dict:
    """integral |u v| <= 2 ||u||_M ||v||_{M*}, passing when LHS <= RHS (1 + tol)."""
    if u.domain != v.domain:
        from .errors import DomainMismatchError
        raise DomainMismatchError("holder_check needs u and v on the same domain")
    lhs = u.domain.integrate(np.abs(u.values * v.values))
    norm_u = luxemburg_norm(phi, u, norm_tol).value
    norm_v = luxemburg_norm(ConjugatePhi(phi, norm_tol), v, norm_tol).value
    rhs = 2.0 * norm_u * norm_v
    return {"passed": bool(lhs <= rhs * (1.0 + tol)), "lhs": lhs, "rhs": rhs,
            "norm_u": norm_u, "norm_v_conjugate": norm_v}
