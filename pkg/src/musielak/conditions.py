"""Sampled checkers for the structural hypotheses on Phi-functions.

Each checker returns a :class:`ConditionReport`. A ``pass`` verdict means
the predicate held at every sample of the declared resolution, never more.
A ``fail`` verdict carries a witness that :func:`reproduce` re-evaluates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .domain import Box, Domain

__all__ = [
    "ConditionReport",
    "sample_pairs",
    "check_M1",
    "check_log_holder",
    "check_Y",
    "check_local_integrability",
    "log_holder_varphi",
    "reproduce",
    "DEFAULT_T_LADDER",
]

MONOTONE_RTOL = 1e-12
DEFAULT_T_LADDER = np.logspace(-4, 4, 64)
DEFAULT_EPS_LADDER = 2.0 ** -np.arange(3, 21)


@dataclass
class ConditionReport:
    condition: str
    verdict: str  # "pass" | "fail" | "inconclusive"
    witness: Optional[dict]
    resolution: dict
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self):
        return {"condition": self.condition, "verdict": self.verdict, "witness": self.witness,
                "resolution": self.resolution, "details": self.details}


# -- sampling -------------------------------------------------------------------

def sample_pairs(domain: Domain, base_nodes: int = 17, levels: int = 20,
                 max_distance: float = 0.5, seed: int = 0):
    """Deterministic point pairs (x, y) with 0 < |x - y| <= ``max_distance``.

    Base points form a lattice with ``base_nodes`` per axis; partners sit at
    distances ``max_distance * 2^-k`` (k < ``levels``) along each axis and,
    in two or more dimensions, along the main diagonals. A nonzero ``seed``
    jitters the base points inside their lattice cells.
    """
    lo, hi = np.array(domain.lower), np.array(domain.upper)
    grids = [np.linspace(a, b, base_nodes) for a, b in zip(lo, hi)]
    base = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, domain.dim)
    if seed:
        rng = np.random.default_rng(seed)
        cell = (hi - lo) / (base_nodes - 1)
        base = np.clip(base + rng.uniform(-0.5, 0.5, base.shape) * cell, lo, hi)
    dirs = [np.eye(domain.dim)[i] for i in range(domain.dim)]
    if domain.dim >= 2:
        dirs.append(np.ones(domain.dim) / math.sqrt(domain.dim))
        alt = np.ones(domain.dim)
        alt[1::2] = -1.0
        dirs.append(alt / math.sqrt(domain.dim))
    dists = max_distance * 2.0 ** -np.arange(levels)
    xs, ys = [], []
    for d in dirs:
        for sign in (1.0, -1.0):
            off = sign * dists[:, None] * d[None, :]
            y = base[:, None, :] + off[None, :, :]
            x = np.broadcast_to(base[:, None, :], y.shape)
            inside = np.all((y >= lo) & (y <= hi), axis=-1)
            xs.append(x[inside])
            ys.append(y[inside])
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    tau = np.linalg.norm(x - y, axis=-1)
    keep = (tau > 0) & (tau <= max_distance * (1 + 1e-12))
    return x[keep], y[keep]


def _pairs(pair_samples, domain):
    if pair_samples is None:
        if domain is None:
            raise ValueError("give pair_samples or a domain to sample from")
        return sample_pairs(domain)
    x, y = pair_samples
    return np.atleast_2d(np.asarray(x, dtype=float)), np.atleast_2d(np.asarray(y, dtype=float))


# -- (M1) -------------------------------------------------------------------------

def log_holder_varphi(C: float) -> Callable:
    """phi(tau, s) = max(s^sigma, s^-sigma) with sigma(tau) = -C / log(tau)."""

    def varphi(tau, s):
        tau = np.asarray(tau, dtype=float)
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            sigma = np.where(tau > 0, -C / np.log(np.where(tau > 0, tau, 0.5)), 0.0)
        return np.maximum(s**sigma, s ** (-sigma))

    return varphi


def _growth_verdict(values, cap):
    if not np.all(np.isfinite(values)) or np.max(values) > cap:
        return "fail"
    tail = values[-2:]
    if tail[0] > 0 and (tail[1] - tail[0]) / tail[0] > 1e-2:
        return "inconclusive"
    return "pass"


def check_M1(phi, varphi: Callable, c: float = 1.0, pair_samples=None, eps_ladder=None,
             domain: Optional[Domain] = None, s_ladder=None, cap: float = 1e6,
             dim: Optional[int] = None) -> ConditionReport:
    """M(x, s) <= varphi(|x - y|, s) M(y, s) on sampled pairs, plus the growth
    cap on varphi(eps, c eps^-N) along a decreasing eps ladder.

    Verdict ``fail`` when the domination breaks or the ladder exceeds
    ``cap``; ``inconclusive`` when the ladder stays below the cap but its
    last step still grows by more than 1%.
    """
    x, y = _pairs(pair_samples, domain)
    n_dim = dim or x.shape[-1]
    s = DEFAULT_T_LADDER if s_ladder is None else np.asarray(s_ladder, dtype=float)
    eps = DEFAULT_EPS_LADDER if eps_ladder is None else np.asarray(eps_ladder, dtype=float)
    tau = np.linalg.norm(x - y, axis=-1)
    mx = phi.bind(x, strict=False)(s[:, None])
    my = phi.bind(y, strict=False)(s[:, None])
    bound = np.asarray(varphi(tau[None, :], s[:, None]), dtype=float) * my
    with np.errstate(invalid="ignore", divide="ignore"):
        excess = np.where(mx <= bound * (1 + MONOTONE_RTOL), 0.0,
                          (mx - bound) / np.maximum(np.abs(bound), 1e-300))
    ladder = np.asarray(varphi(eps, c * eps ** (-float(n_dim))), dtype=float)
    resolution = {"pairs": int(tau.size), "s_samples": int(s.size), "eps_ladder": eps.tolist()}
    details = {"ladder_values": ladder.tolist(), "cap": cap,
               "varphi_monotone": _varphi_monotone(varphi, s)}
    witness = None
    if np.any(excess > 0):
        k_s, k_p = np.unravel_index(int(np.argmax(excess)), excess.shape)
        witness = {"x": x[k_p].tolist(), "y": y[k_p].tolist(), "s": float(s[k_s]),
                   "M_x": float(mx[k_s, k_p]), "M_y": float(my[k_s, k_p]),
                   "varphi": float(bound[k_s, k_p] / my[k_s, k_p]) if my[k_s, k_p] else None,
                   "violations": int(np.count_nonzero(excess > 0))}
        return ConditionReport("M1", "fail", witness, resolution, details)
    growth = _growth_verdict(ladder, cap)
    if growth != "pass":
        k = int(np.argmax(np.where(np.isfinite(ladder), ladder, np.inf)))
        witness = {"eps": float(eps[k]), "value": float(ladder[k])}
    return ConditionReport("M1", growth, witness, resolution, details)


def _varphi_monotone(varphi, s_ladder):
    taus = np.linspace(1e-3, 0.5, 64)
    grid = np.asarray(varphi(taus[:, None], s_ladder[None, :]), dtype=float)
    tol = MONOTONE_RTOL * np.maximum(1.0, np.abs(grid))
    in_tau = bool(np.all(np.diff(grid, axis=0) >= -tol[1:]))
    in_s = bool(np.all(np.diff(grid, axis=1) >= -tol[:, 1:]))
    return {"in_tau": in_tau, "in_s": in_s}


# -- log-Hoelder --------------------------------------------------------------------

def check_log_holder(p_field, C0: float, pair_samples=None,
                     domain: Optional[Domain] = None) -> ConditionReport:
    """|p(x) - p(y)| <= -C0 / log|x - y| on sampled pairs with 0 < |x - y| <= 1/2."""
    x, y = _pairs(pair_samples, domain)
    tau = np.linalg.norm(x - y, axis=-1)
    keep = (tau > 0) & (tau <= 0.5 * (1 + 1e-12))
    x, y, tau = x[keep], y[keep], tau[keep]
    lhs = np.abs(p_field(x) - p_field(y))
    rhs = -C0 / np.log(np.minimum(tau, 0.5))
    gap = lhs - rhs
    k = int(np.argmax(gap))
    ok = lhs <= rhs * (1 + MONOTONE_RTOL)
    witness = {"x": x[k].tolist(), "y": y[k].tolist(), "lhs": float(lhs[k]), "rhs": float(rhs[k]),
               "violations": int(np.count_nonzero(~ok))}
    verdict = "pass" if np.all(ok) else "fail"
    return ConditionReport("log_holder", verdict, witness, {"pairs": int(tau.size)}, {"C0": C0})


# -- (Y0) / (Y_inf) ------------------------------------------------------------------

def _line_points(domain: Domain, axis: int, segment, x_resolution: int, other_resolution: int):
    a, b = segment
    xi = np.linspace(a, b, x_resolution)
    others = [np.linspace(domain.lower[j], domain.upper[j], other_resolution)
              for j in range(domain.dim) if j != axis]
    if others:
        combos = np.stack(np.meshgrid(*others, indexing="ij"), axis=-1).reshape(-1, domain.dim - 1)
    else:
        combos = np.zeros((1, 0))
    pts = np.empty((combos.shape[0], x_resolution, domain.dim))
    pts[:, :, axis] = xi[None, :]
    rest = [j for j in range(domain.dim) if j != axis]
    for k, j in enumerate(rest):
        pts[:, :, j] = combos[:, k][:, None]
    return pts


class _Monotonicity:
    """Direction classification of x_i -> M(x, t) along sampled lines."""

    def __init__(self, phi, points):
        self.points = points
        self.bound = phi.bind(points, strict=False)

    def steps(self, t):
        m = np.asarray(self.bound(np.full(self.points.shape[:-1], float(t))), dtype=float)
        d = np.diff(m, axis=-1)
        tol = MONOTONE_RTOL * np.maximum(np.abs(m[..., 1:]), np.abs(m[..., :-1]))
        return m, d, tol

    def directions(self, t):
        _, d, tol = self.steps(t)
        return bool(np.all(d >= -tol)), bool(np.all(d <= tol))

    def item(self, t, sign):
        """A witness step at ``t`` that strictly rises (sign > 0) or falls (sign < 0)."""
        m, d, tol = self.steps(t)
        score = sign * d - tol
        line, k = np.unravel_index(int(np.argmax(score)), score.shape)
        if score[line, k] <= 0:
            return None
        return {"t": float(t), "x_a": self.points[line, k].tolist(),
                "x_b": self.points[line, k + 1].tolist(),
                "M_a": float(m[line, k]), "M_b": float(m[line, k + 1]),
                "sign": "+" if sign > 0 else "-"}


def _uniform(dirs):
    inc = all(d[0] for d in dirs)
    dec = all(d[1] for d in dirs)
    return inc, dec


def _direction_name(inc, dec):
    if inc and dec:
        return "constant"
    if inc:
        return "nondecreasing"
    if dec:
        return "nonincreasing"
    return None


def _failure_items(mono, ts, dirs):
    for t, (inc, dec) in zip(ts, dirs):
        if not inc and not dec:
            return [mono.item(t, +1), mono.item(t, -1)]
    # every t is monotone, so the direction must alternate: collect the turns
    items, last = [], 0
    for t, (inc, dec) in zip(ts, dirs):
        sign = +1 if inc and not dec else -1 if dec and not inc else 0
        if sign and sign != last:
            items.append(mono.item(t, sign))
            last = sign
            if len(items) == 3:
                break
    return items


def check_Y(phi, domain: Domain, axis: int = 0, segment=None, t0: Optional[float] = None,
            x_resolution: int = 257, t_ladder=None, other_resolution: int = 9) -> ConditionReport:
    """Directional monotonicity of x_i -> M(x, t) on ``segment`` of axis ``axis``.

    (Y_inf) holds when one direction (nondecreasing or nonincreasing) is
    shared by every t of the ladder. (Y_0) holds at t0 when one direction is
    shared by all t >= t0 and one (possibly different) direction by all
    t < t0. Without ``t0`` the split is searched over the ladder and, when the
    direction changes, refined by bisection. The overall verdict passes when
    either form holds.
    """
    if segment is None:
        segment = (domain.lower[axis], domain.upper[axis])
    a, b = map(float, segment)
    if a < domain.lower[axis] - 1e-12 or b > domain.upper[axis] + 1e-12 or not b > a:
        raise ValueError(f"segment {segment} is not inside axis {axis} of the domain")
    ts = np.sort(DEFAULT_T_LADDER if t_ladder is None else np.asarray(t_ladder, dtype=float))
    if t0 is not None:
        ts = np.unique(np.append(ts, float(t0)))
    mono = _Monotonicity(phi, _line_points(domain, axis, (a, b), x_resolution, other_resolution))
    dirs = [mono.directions(t) for t in ts]
    resolution = {"axis": axis, "segment": [a, b], "x_resolution": x_resolution,
                  "other_resolution": other_resolution, "t_samples": int(ts.size),
                  "t_range": [float(ts[0]), float(ts[-1])]}
    inc_all, dec_all = _uniform(dirs)
    y_inf = inc_all or dec_all
    details = {"Y_inf": y_inf, "Y_inf_direction": _direction_name(inc_all, dec_all),
               "Y_0": False, "t0": None, "below_t0": None, "above_t0": None}

    split = None
    if t0 is not None:
        k = int(np.searchsorted(ts, float(t0)))
        lo_dir, hi_dir = _uniform(dirs[:k]), _uniform(dirs[k:])
        if (lo_dir[0] or lo_dir[1]) and (hi_dir[0] or hi_dir[1]):
            split = (float(t0), lo_dir, hi_dir)
    else:
        split = _search_split(mono, ts, dirs)
    if split is not None:
        t_split, lo_dir, hi_dir = split
        details.update({"Y_0": True, "t0": t_split,
                        "below_t0": _direction_name(*lo_dir),
                        "above_t0": _direction_name(*hi_dir)})
    passed = y_inf or details["Y_0"]
    witness = None
    if not passed:
        if t0 is not None:
            k = int(np.searchsorted(ts, float(t0)))
            side = (ts[:k], dirs[:k]) if not any(_uniform(dirs[:k])) else (ts[k:], dirs[k:])
            items = _failure_items(mono, *side)
        else:
            items = _failure_items(mono, ts, dirs)
        witness = {"items": [it for it in items if it is not None], "axis": axis}
    return ConditionReport("Y", "pass" if passed else "fail", witness, resolution, details)


def _search_split(mono, ts, dirs):
    """First ladder split with uniform directions on both sides, preferring a change."""
    candidates = []
    for k in range(1, len(ts)):
        lo_dir, hi_dir = _uniform(dirs[:k]), _uniform(dirs[k:])
        if (lo_dir[0] or lo_dir[1]) and (hi_dir[0] or hi_dir[1]):
            candidates.append((k, lo_dir, hi_dir))
    if not candidates:
        return None
    for k, lo_dir, hi_dir in candidates:
        # a genuine change: the upper direction fails just below the split
        up = 0 if hi_dir[0] and not hi_dir[1] else 1 if hi_dir[1] and not hi_dir[0] else None
        if up is None or dirs[k - 1][up]:
            continue
        lo, hi = float(ts[k - 1]), float(ts[k])
        for _ in range(200):
            if hi / lo - 1.0 <= 1e-13:
                break
            mid = math.sqrt(lo * hi)
            if mono.directions(mid)[up]:
                hi = mid
            else:
                lo = mid
        return hi, lo_dir, hi_dir
    k, lo_dir, hi_dir = candidates[0]
    return float(ts[k]), lo_dir, hi_dir


# -- local integrability -------------------------------------------------------------

def check_local_integrability(phi, c: float, K: Box, resolution: int = 257,
                              domain: Optional[Domain] = None) -> ConditionReport:
    """Trapezoidal integral of x -> M(x, c) over the box K.

    Passes when every nodal value and the integral are finite; an overflow
    gives ``inconclusive`` with the first non-finite node as witness.
    """
    if domain is not None and not domain.contains_box(K):
        raise ValueError(f"K={K.to_dict()} is not inside the domain")
    grid = Domain(tuple(K.lower), tuple(K.upper), (resolution,) * len(K.lower))
    vals = np.asarray(phi.bind(grid.points, strict=False)(float(c)), dtype=float)
    vals = np.broadcast_to(vals, grid.shape)
    resolution_info = {"nodes_per_axis": resolution}
    if not np.all(np.isfinite(vals)):
        k = int(np.flatnonzero(~np.isfinite(vals.ravel()))[0])
        witness = {"x": grid.points.reshape(-1, grid.dim)[k].tolist(), "c": float(c),
                   "value": float(vals.ravel()[k])}
        return ConditionReport("local_integrability", "inconclusive", witness, resolution_info,
                               {"integral": None})
    integral = grid.integrate(vals)
    verdict = "pass" if math.isfinite(integral) else "inconclusive"
    return ConditionReport("local_integrability", verdict, None, resolution_info,
                           {"integral": integral, "c": float(c)})


# -- witness replay -------------------------------------------------------------------

def reproduce(report: ConditionReport, phi=None, p_field=None, varphi=None,
              C0: Optional[float] = None) -> bool:
    """Re-evaluate a fail witness; True when the violation is reproduced."""
    w = report.witness
    if report.verdict != "fail" or not w:
        return False
    if report.condition == "log_holder":
        x, y = np.array(w["x"]), np.array(w["y"])
        C = report.details["C0"] if C0 is None else C0
        lhs = abs(float(p_field(x[None])[0]) - float(p_field(y[None])[0]))
        return lhs > -C / math.log(float(np.linalg.norm(x - y))) * (1 + MONOTONE_RTOL)
    if report.condition == "M1":
        if "x" not in w:
            return bool(w["value"] > report.details["cap"] or not math.isfinite(w["value"]))
        x, y = np.array(w["x"]), np.array(w["y"])
        mx = float(phi.bind(x[None], strict=False)(w["s"])[0])
        my = float(phi.bind(y[None], strict=False)(w["s"])[0])
        vp = float(np.asarray(varphi(np.linalg.norm(x - y), w["s"])))
        return mx > vp * my * (1 + MONOTONE_RTOL)
    if report.condition == "Y":
        signs = set()
        for it in w["items"]:
            pts = np.array([it["x_a"], it["x_b"]])
            m = phi.bind(pts, strict=False)(it["t"])
            step = float(m[1] - m[0])
            tol = MONOTONE_RTOL * max(abs(float(m[0])), abs(float(m[1])))
            if it["sign"] == "+" and step > tol:
                signs.add("+")
            elif it["sign"] == "-" and step < -tol:
                signs.add("-")
            else:
                return False
        return signs == {"+", "-"}
    raise ValueError(f"no witness replay for condition {report.condition!r}")
