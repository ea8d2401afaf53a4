"""Poincare-type modular and norm inequalities on sampled test functions.

For compactly supported u and a Phi-function satisfying the monotonicity
hypothesis, the modular inequality

    sum_{|a| < m} int M(x, |D^a u|) <= sum_{|a| = m} int M(x, c |D^a u|)

holds with c = 2 d at order one (d the diameter of the box). The norm form
uses C(m) = c (1 + #{|b| = m}).
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .domain import Domain, GridFunction, derivative, make_bump, multi_indices
from .errors import MusielakError
from .modular_norms import DEFAULT_TOL, Gauge, luxemburg_norm

__all__ = [
    "PoincareReport",
    "poincare_constant",
    "norm_constant",
    "count_multi_indices",
    "verify_modular_poincare",
    "verify_norm_poincare",
    "counterexample_search",
    "default_test_functions",
    "default_scalings",
    "sweep",
    "MODULAR_TOL",
    "NORM_TOL",
]

MODULAR_TOL = 1e-8
NORM_TOL = 1e-6


def poincare_constant(domain: Domain, m: int = 1) -> float:
    """c_{m} = 2d max(1, 2d)^(m-1): the order-one constant 2d chained m times."""
    if m < 1:
        raise ValueError("order m must be at least 1")
    two_d = 2.0 * domain.diameter
    return two_d * max(1.0, two_d) ** (m - 1)


def count_multi_indices(dim: int, order: int) -> int:
    return math.comb(order + dim - 1, dim - 1)


def norm_constant(domain: Domain, m: int = 1) -> float:
    return poincare_constant(domain, m) * (1 + count_multi_indices(domain.dim, m))


@dataclass
class PoincareReport:
    test_function: str
    order: int
    constant: Optional[float] = None
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    ratio: Optional[float] = None
    verdict: Optional[str] = None
    tol: Optional[float] = None
    norm_lower_sum: Optional[float] = None
    norm_top_sum: Optional[float] = None
    norm_constant: Optional[float] = None
    norm_ratio: Optional[float] = None
    norm_verdict: Optional[str] = None
    norm_tol: Optional[float] = None
    compact: bool = True
    phi: str = ""

    def to_dict(self):
        return asdict(self)

    def merged(self, other: "PoincareReport") -> "PoincareReport":
        data = self.to_dict()
        data.update({k: v for k, v in other.to_dict().items() if v is not None})
        return PoincareReport(**data)


def _ratio(lhs, rhs):
    if rhs > 0:
        return lhs / rhs
    return 0.0 if lhs == 0 else math.inf


def _lower_and_top(u: GridFunction, m: int):
    lower = [derivative(u, a).values for k in range(m) for a in multi_indices(u.domain.dim, k)]
    top = [derivative(u, a).values for a in multi_indices(u.domain.dim, m)]
    return lower, top


def verify_modular_poincare(phi, u: GridFunction, m: int = 1, c: Optional[float] = None,
                            tol: float = MODULAR_TOL) -> PoincareReport:
    """Both sides of the modular inequality by trapezoidal quadrature.

    Passes when LHS <= RHS (1 + tol). ``c`` defaults to :func:`poincare_constant`.
    """
    c = poincare_constant(u.domain, m) if c is None else float(c)
    lower, top = _lower_and_top(u, m)
    lhs = sum(Gauge(phi, u.domain, [arr])(1.0) for arr in lower)
    rhs = sum(Gauge(phi, u.domain, [c * arr])(1.0) for arr in top)
    verdict = "pass" if lhs <= rhs * (1.0 + tol) else "fail"
    return PoincareReport(u.label, m, c, lhs, rhs, _ratio(lhs, rhs), verdict, tol,
                          compact=u.compact, phi=getattr(phi, "label", ""))


def verify_norm_poincare(phi, u: GridFunction, m: int = 1, tol: float = NORM_TOL,
                         norm_tol: float = DEFAULT_TOL) -> PoincareReport:
    """sum_{|a|<m} ||D^a u||_M <= C(m) sum_{|a|=m} ||D^a u||_M, with (1 + tol) slack."""
    big_c = norm_constant(u.domain, m)
    lower, top = _lower_and_top(u, m)
    dom = u.domain
    lower_sum = sum(luxemburg_norm(phi, GridFunction.from_values(dom, a), norm_tol).value
                    for a in lower)
    top_sum = sum(luxemburg_norm(phi, GridFunction.from_values(dom, a), norm_tol).value
                  for a in top)
    verdict = "pass" if lower_sum <= big_c * top_sum * (1.0 + tol) else "fail"
    return PoincareReport(u.label, m, poincare_constant(dom, m), norm_lower_sum=lower_sum,
                          norm_top_sum=top_sum, norm_constant=big_c,
                          norm_ratio=_ratio(lower_sum, big_c * top_sum),
                          norm_verdict=verdict, norm_tol=tol, compact=u.compact,
                          phi=getattr(phi, "label", ""))


# -- test-function families ------------------------------------------------------

DEFAULT_BUMPS = (
    {"name": "centered", "kind": "smooth_exp", "center": 0.5, "width": 0.3},
    {"name": "off_left", "kind": "smooth_exp", "center": 0.3, "width": 0.2},
    {"name": "off_right", "kind": "smooth_exp", "center": 0.7, "width": 0.2},
    {"name": "narrow", "kind": "smooth_exp", "center": 0.5, "width": 0.05},
    {"name": "wide", "kind": "smooth_exp", "center": 0.5, "width": 0.45},
    {"name": "poly4_centered", "kind": "poly_4", "center": 0.5, "width": 0.4},
    {"name": "poly4_off", "kind": "poly_4", "center": 0.4, "width": 0.25},
)


def bump_from_params(domain: Domain, params: dict) -> GridFunction:
    """Bump whose center and width are given as fractions of each box side."""
    lo = np.array(domain.lower)
    length = domain.lengths
    center = lo + np.broadcast_to(np.asarray(params["center"], dtype=float), (domain.dim,)) * length
    width = np.broadcast_to(np.asarray(params["width"], dtype=float), (domain.dim,)) * length
    return make_bump(domain, center, width, params.get("kind", "smooth_exp"),
                     label=params.get("name", ""))


def default_test_functions(domain: Domain) -> list[GridFunction]:
    """Five smooth_exp bumps (centered, two off-center, narrow, wide) and two poly_4 bumps."""
    return [bump_from_params(domain, p) for p in DEFAULT_BUMPS]


def default_scalings() -> list[float]:
    return [2.0**k for k in range(-5, 6)]


# -- exploration -----------------------------------------------------------------

def counterexample_search(phi, domain: Domain, bump_params: Optional[Sequence[dict]] = None,
                          scalings: Optional[Sequence[float]] = None,
                          c: Optional[float] = None) -> dict:
    """Order-one ratio LHS/RHS over scaled bumps; reports the largest ratio found.

    Makes no pass/fail claim: the output is the ratio-vs-scaling curve per
    bump and its supremum, for inspection.
    """
    bump_params = list(DEFAULT_BUMPS if bump_params is None else bump_params)
    scalings = default_scalings() if scalings is None else [float(s) for s in scalings]
    c = poincare_constant(domain, 1) if c is None else float(c)
    curves = []
    best = {"ratio": -math.inf}
    for params in bump_params:
        u = bump_from_params(domain, params)
        lower, top = _lower_and_top(u, 1)
        rows = []
        for s in scalings:
            lhs = sum(Gauge(phi, domain, [s * a])(1.0) for a in lower)
            rhs = sum(Gauge(phi, domain, [c * s * a])(1.0) for a in top)
            ratio = _ratio(lhs, rhs)
            rows.append({"scaling": s, "lhs": lhs, "rhs": rhs, "ratio": ratio})
            if ratio > best["ratio"]:
                best = {"ratio": ratio, "bump": params.get("name", u.label), "scaling": s,
                        "params": dict(params)}
        curves.append({"bump": params.get("name", u.label), "params": dict(params), "curve": rows})
    return {"phi": getattr(phi, "label", ""), "constant": c, "sup_ratio": best["ratio"],
            "argmax": best, "curves": curves}


# -- sweeps ----------------------------------------------------------------------

@dataclass
class SweepReport:
    cells: list = field(default_factory=list)
    timings: list = field(default_factory=list)

    @property
    def modular_verdicts(self):
        return [c["report"]["verdict"] for c in self.cells if c.get("report")]

    def summary(self) -> dict:
        reps = [c["report"] for c in self.cells if c.get("report")]
        errors = [c for c in self.cells if c.get("error")]
        mod = [r for r in reps if r.get("verdict")]
        nrm = [r for r in reps if r.get("norm_verdict")]
        return {
            "cells": len(self.cells),
            "errors": len(errors),
            "modular_pass": sum(r["verdict"] == "pass" for r in mod),
            "modular_fail": sum(r["verdict"] == "fail" for r in mod),
            "norm_pass": sum(r["norm_verdict"] == "pass" for r in nrm),
            "norm_fail": sum(r["norm_verdict"] == "fail" for r in nrm),
            "worst_modular_ratio": max((r["ratio"] for r in mod), default=None),
            "worst_norm_ratio": max((r["norm_ratio"] for r in nrm), default=None),
        }

    @property
    def all_passed(self) -> bool:
        s = self.summary()
        return s["errors"] == 0 and s["modular_fail"] == 0 and s["norm_fail"] == 0

    def to_dict(self, include_timing: bool = False):
        out = {"summary": self.summary(), "cells": self.cells}
        if include_timing:
            out["timings"] = self.timings
        return out


def sweep(phi_list: Sequence, test_functions: Sequence[GridFunction], m: int = 1,
          tol: float = MODULAR_TOL, norm_tol: float = NORM_TOL,
          scalings: Optional[Sequence[float]] = None, threads: int = 1,
          sides: Sequence[str] = ("modular", "norm"), c: Optional[float] = None) -> SweepReport:
    """Run the modular and norm checks over phi x test function x scaling.

    A cell that raises records its error and the sweep continues. Cells are
    independent, so ``threads`` only changes wall time, not results.
    """
    scalings = [1.0] if scalings is None else [float(s) for s in scalings]
    jobs = [(i, j, s) for i in range(len(phi_list))
            for j in range(len(test_functions)) for s in scalings]

    def run(job):
        i, j, s = job
        phi, u = phi_list[i], test_functions[j]
        cell = {"phi": getattr(phi, "label", str(i)), "test_function": u.label or str(j),
                "scaling": s}
        start = time.perf_counter()
        try:
            us = u.scaled(s)
            report = None
            if "modular" in sides:
                report = verify_modular_poincare(phi, us, m, c, tol)
            if "norm" in sides:
                nrep = verify_norm_poincare(phi, us, m, norm_tol)
                report = nrep if report is None else report.merged(nrep)
            cell["report"] = report.to_dict()
        except (MusielakError, ArithmeticError, ValueError) as exc:
            cell["error"] = f"{type(exc).__name__}: {exc}"
        return cell, time.perf_counter() - start

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]
    return SweepReport([r[0] for r in results], [r[1] for r in results])
