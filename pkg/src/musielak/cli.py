"""Batch front-end: ``musielak run --config cfg.json --out reports/`` and ``musielak describe``.

Exit status of ``run``: 0 when every theorem check passes, 1 when a
Poincare check (or a condition marked ``required``) fails, 2 on a
configuration or evaluation error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np
import sympy

from . import conditions as cond
from .conjugate import conjugate_values
from .domain import Box, Domain, GridFunction, make_bump, sine_mode
from .errors import ConfigError, MusielakError
from .modular_norms import DEFAULT_TOL, luxemburg_norm, sobolev_norm
from .phi_functions import ExponentField, PhiFunction, ScalarField, validate_phi
from .poincare import (DEFAULT_BUMPS, MODULAR_TOL, NORM_TOL, bump_from_params,
                       count_multi_indices, counterexample_search, default_scalings,
                       default_test_functions, norm_constant, poincare_constant, sweep)

SCHEMA_VERSION = 1
TASK_TYPES = ("validate-phi", "check-conditions", "compute-norm", "conjugate-table",
              "verify-poincare", "counterexample-search", "sweep")
MIN_NODES = 9


# -- configuration ----------------------------------------------------------------

def _require(mapping, key, where):
    if not isinstance(mapping, dict) or key not in mapping:
        raise ConfigError(f"missing required field {key!r}", where)
    return mapping[key]


def build_domain(spec) -> Domain:
    bounds = _require(spec, "bounds", "domain")
    nodes = _require(spec, "nodes", "domain")
    if not isinstance(bounds, list) or not bounds:
        raise ConfigError("bounds must be a non-empty list of [lower, upper] pairs", "domain.bounds")
    if isinstance(nodes, int):
        nodes = [nodes] * len(bounds)
    if len(nodes) != len(bounds):
        raise ConfigError("one node count per axis expected", "domain.nodes")
    if any(int(n) < MIN_NODES for n in nodes):
        raise ConfigError(f"node counts must be at least {MIN_NODES} per axis", "domain.nodes")
    try:
        return Domain.box(bounds, nodes)
    except (ValueError, TypeError, IndexError) as exc:
        raise ConfigError(str(exc), "domain") from None


def _field(value, domain: Domain, where: str, exponent: bool, check_range: bool = True):
    try:
        if isinstance(value, (int, float)):
            fld = ScalarField.constant(value)
        elif isinstance(value, str):
            fld = ScalarField.from_expression(value, domain.dim)
        elif isinstance(value, dict) and "samples" in value:
            axes = value.get("axes") or domain.axes
            fld = ScalarField.from_samples([np.asarray(a) for a in axes], np.asarray(value["samples"]))
        else:
            raise ConfigError("expected a number, an expression string or {samples, axes}", where)
        lo, hi = fld.sampled_range(domain.points)
    except ConfigError:
        raise
    except (ValueError, TypeError, AttributeError) as exc:
        raise ConfigError(str(exc), where) from None
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ConfigError("field takes non-finite values on the domain", where)
    if exponent:
        if check_range and not lo > 1:
            raise ConfigError(f"exponent lower bound must exceed 1 (sampled p- = {lo:g})", where)
        fld = ExponentField(fld.kind, value=fld.value, func=fld._func, expr=fld.expr,
                            axes=fld.axes, samples=fld.samples, box=fld.box,
                            lower=lo if fld.kind != "constant" else None,
                            upper=hi if fld.kind != "constant" else None,
                            check_range=check_range)
    elif lo < 0:
        raise ConfigError("weight field must be nonnegative", where)
    return fld


def build_phi(spec, domain: Domain, where: str) -> PhiFunction:
    family = _require(spec, "family", where)
    name = str(spec.get("id", ""))
    check = bool(spec.get("check_range", True))
    try:
        if family in ("power_variable", "power_log", "exp_power"):
            p = _field(_require(spec, "p", where), domain, f"{where}.p", True, check)
            ctor = {"power_variable": PhiFunction.power, "power_log": PhiFunction.power_log,
                    "exp_power": PhiFunction.exp_power}[family]
            return ctor(p, name=name)
        if family == "double_phase":
            p_base = float(_require(spec, "p_base", where))
            if not p_base > 1:
                raise ConfigError("exponent lower bound must exceed 1", f"{where}.p_base")
            a = _field(_require(spec, "a", where), domain, f"{where}.a", False)
            return PhiFunction.double_phase(p_base, float(_require(spec, "q", where)), a, name=name)
        if family == "orlicz_custom":
            t = sympy.Symbol("t")
            expr = sympy.sympify(_require(spec, "expr", where), locals={"t": t})
            if expr.free_symbols - {t}:
                raise ConfigError("custom expression may only use t", f"{where}.expr")
            func = sympy.lambdify(t, expr, modules="numpy")
            return PhiFunction.orlicz(lambda s: np.asarray(func(s), dtype=float) + 0.0 * s,
                                      name=name or str(expr))
    except ConfigError:
        raise
    except (ValueError, TypeError, sympy.SympifyError) as exc:
        raise ConfigError(str(exc), where) from None
    raise ConfigError(f"unknown family {family!r}", f"{where}.family")


def build_function(spec, domain: Domain, where: str) -> GridFunction:
    kind = _require(spec, "kind", where)
    try:
        if kind == "sine":
            return sine_mode(domain, spec.get("modes", 1), label=spec.get("name", ""))
        if kind == "constant":
            value = float(spec.get("value", 1.0))
            return GridFunction.from_values(domain, np.full(domain.shape, value),
                                            label=spec.get("name", f"const({value:g})"))
        if kind == "expression":
            fld = ScalarField.from_expression(_require(spec, "expr", where), domain.dim)
            return GridFunction.from_function(domain, fld, label=spec.get("name", spec["expr"]))
        if kind in ("smooth_exp", "poly") or kind.startswith("poly_"):
            if spec.get("fractional", False):
                return bump_from_params(domain, spec)
            return make_bump(domain, _require(spec, "center", where), _require(spec, "width", where),
                             kind, spec.get("k"), label=spec.get("name", ""))
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc), where) from None
    raise ConfigError(f"unknown test function kind {kind!r}", f"{where}.kind")


def build_test_functions(spec, domain: Domain, where: str):
    if spec is None or spec == "default":
        return default_test_functions(domain)
    if not isinstance(spec, list):
        raise ConfigError('expected "default" or a list of test functions', where)
    return [build_function(s, domain, f"{where}[{i}]") for i, s in enumerate(spec)]


class RunConfig:
    """A parsed and validated configuration."""

    def __init__(self, data: dict):
        if not isinstance(data, dict):
            raise ConfigError("top level must be a JSON object")
        self.data = data
        self.domain = build_domain(_require(data, "domain", ""))
        self.order = int(data.get("order", 1))
        if self.order < 1:
            raise ConfigError("order must be at least 1", "order")
        specs = data.get("phi_functions", [])
        if not isinstance(specs, list):
            raise ConfigError("expected a list", "phi_functions")
        self.phis = {}
        self.phi_specs = {}
        for i, spec in enumerate(specs):
            phi = build_phi(spec, self.domain, f"phi_functions[{i}]")
            key = str(spec.get("id", i))
            if key in self.phis:
                raise ConfigError(f"duplicate id {key!r}", f"phi_functions[{i}].id")
            self.phis[key] = phi
            self.phi_specs[key] = spec
        tols = data.get("tolerances", {})
        self.tolerances = {"modular": float(tols.get("modular", MODULAR_TOL)),
                           "norm": float(tols.get("norm", NORM_TOL)),
                           "solver": float(tols.get("solver", DEFAULT_TOL)),
                           "conjugate": float(tols.get("conjugate", DEFAULT_TOL))}
        self.tasks = data.get("tasks", [])
        if not isinstance(self.tasks, list):
            raise ConfigError("expected a list", "tasks")
        for i, task in enumerate(self.tasks):
            kind = _require(task, "type", f"tasks[{i}]")
            if kind not in TASK_TYPES:
                raise ConfigError(f"unknown task type {kind!r}; expected one of {TASK_TYPES}",
                                  f"tasks[{i}].type")
            self._phi_refs(task, f"tasks[{i}]")

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        return cls(data)

    def _phi_refs(self, task, where):
        ref = task.get("phi")
        if ref is None:
            return list(self.phis)
        refs = [ref] if isinstance(ref, (str, int)) else list(ref)
        out = []
        for r in refs:
            if str(r) not in self.phis:
                raise ConfigError(f"unknown phi id {r!r}", f"{where}.phi")
            out.append(str(r))
        return out

    def phis_for(self, task, where):
        return [(k, self.phis[k]) for k in self._phi_refs(task, where)]


# -- reporting helpers ------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def _write_json(path: Path, payload):
    path.write_text(json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                             for v in row])


# -- tasks ------------------------------------------------------------------------

class TaskContext:
    def __init__(self, config: RunConfig, out: Optional[Path], threads: int,
                 tolerance: Optional[float], seed: int):
        self.config = config
        self.out = out
        self.threads = threads
        self.seed = seed
        self.tol_modular = config.tolerances["modular"] if tolerance is None else tolerance
        self.tol_norm = config.tolerances["norm"] if tolerance is None else tolerance


def task_validate_phi(ctx, task, where):
    dom = ctx.config.domain
    n = int(task.get("sample_nodes", 5))
    grids = [np.linspace(a, b, n) for a, b in zip(dom.lower, dom.upper)]
    pts = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, dom.dim)
    t_grid = None
    if "t_grid" in task:
        lo, hi, k = task["t_grid"]
        t_grid = np.logspace(math.log10(lo), math.log10(hi), int(k))
    results = {key: validate_phi(phi, pts, t_grid).to_dict() for key, phi in ctx.config.phis_for(task, where)}
    return {"phi": results}, False


def _varphi(spec, where):
    if spec is None:
        return None
    kind = spec.get("kind") if isinstance(spec, dict) else spec
    if kind == "one":
        return lambda tau, s: np.ones(np.broadcast_shapes(np.shape(tau), np.shape(s)))
    if kind == "log_holder":
        return cond.log_holder_varphi(float(spec.get("C", 1.0)) if isinstance(spec, dict) else 1.0)
    raise ConfigError(f"unknown varphi kind {kind!r}", f"{where}.varphi")


def task_check_conditions(ctx, task, where):
    dom = ctx.config.domain
    wanted = task.get("conditions", ["Y", "local_integrability"])
    axis = int(task.get("axis", 1)) - 1
    if not 0 <= axis < dom.dim:
        raise ConfigError(f"axis must be in 1..{dom.dim}", f"{where}.axis")
    pairs = cond.sample_pairs(dom, seed=ctx.seed)
    results = {}
    failed_required = False
    for key, phi in ctx.config.phis_for(task, where):
        out = {}
        for name in wanted:
            if name == "Y":
                rep = cond.check_Y(phi, dom, axis, task.get("segment"), task.get("t0"),
                                   int(task.get("x_resolution", 257)))
            elif name == "M1":
                varphi = _varphi(task.get("varphi", "one"), where)
                rep = cond.check_M1(phi, varphi, float(task.get("c", 1.0)), pairs, dim=dom.dim)
            elif name == "log_holder":
                if phi.p is None:
                    continue
                rep = cond.check_log_holder(phi.p, float(task.get("C0", 1.0)), pairs)
            elif name == "local_integrability":
                margin = 0.1 * dom.lengths
                K = task.get("K")
                box = Box(np.array(dom.lower) + margin, np.array(dom.upper) - margin) if K is None \
                    else Box(K[0], K[1])
                rep = cond.check_local_integrability(phi, float(task.get("c_integrability", 1.0)),
                                                     box, domain=dom)
            else:
                raise ConfigError(f"unknown condition {name!r}", f"{where}.conditions")
            out[name] = rep.to_dict()
            if rep.verdict == "fail" and task.get("required", False):
                failed_required = True
        results[key] = out
    return {"phi": results}, failed_required


def task_compute_norm(ctx, task, where):
    dom = ctx.config.domain
    u = build_function(_require(task, "function", where), dom, f"{where}.function")
    order = int(task.get("sobolev_order", 0))
    tol = ctx.config.tolerances["solver"]
    results = {}
    for key, phi in ctx.config.phis_for(task, where):
        res = luxemburg_norm(phi, u, tol) if order == 0 else sobolev_norm(phi, u, order, tol)
        results[key] = res.to_dict()
    return {"function": u.label, "sobolev_order": order, "phi": results}, False


def task_conjugate_table(ctx, task, where):
    dom = ctx.config.domain
    xs = np.atleast_2d(np.asarray(task.get("x", [[0.5 * (a + b) for a, b in zip(dom.lower, dom.upper)]]),
                                  dtype=float))
    ss = np.asarray(task.get("s", [0.25, 0.5, 1.0, 2.0, 4.0]), dtype=float)
    tol = ctx.config.tolerances["conjugate"]
    results = {}
    for key, phi in ctx.config.phis_for(task, where):
        pts = np.repeat(xs, ss.size, axis=0)
        svals = np.tile(ss, xs.shape[0])
        val, arg, _ = conjugate_values(phi, pts, svals, tol)
        rows = [list(p) + [s, v, a] for p, s, v, a in zip(pts.tolist(), svals, val, arg)]
        results[key] = rows
        if ctx.out is not None:
            header = [f"x{i + 1}" for i in range(dom.dim)] + ["s", "M_star", "t_star"]
            _write_csv(ctx.out / f"{task['_stem']}_{key}.csv", header, rows)
    return {"columns": [f"x{i + 1}" for i in range(dom.dim)] + ["s", "M_star", "t_star"],
            "phi": results}, False


def _run_sweep(ctx, task, where, scalings_default):
    dom = ctx.config.domain
    phis = ctx.config.phis_for(task, where)
    tfs = build_test_functions(task.get("test_functions", "default"), dom, f"{where}.test_functions")
    scalings = task.get("scalings", scalings_default)
    rep = sweep([p for _, p in phis], tfs, ctx.config.order, ctx.tol_modular, ctx.tol_norm,
                scalings, ctx.threads, c=task.get("c"))
    for cell, (key, _) in zip(rep.cells, [(k, p) for k, p in phis for _ in range(len(tfs) * len(scalings))]):
        cell["phi_id"] = key
    result = rep.to_dict()
    errors = [c for c in rep.cells if "error" in c]
    if errors:
        first = errors[0]
        result["evaluation_error"] = (
            f"{len(errors)} cell(s) failed to evaluate; first: phi={first['phi_id']} "
            f"test_function={first['test_function']} scaling={first['scaling']}: {first['error']}")
    return result, not rep.all_passed, rep.timings


def task_verify_poincare(ctx, task, where):
    return _run_sweep(ctx, task, where, [1.0])


def task_sweep(ctx, task, where):
    return _run_sweep(ctx, task, where, default_scalings())


def task_counterexample(ctx, task, where):
    dom = ctx.config.domain
    bumps = task.get("bumps", list(DEFAULT_BUMPS))
    scalings = task.get("scalings", [2.0**k for k in range(-10, 11)])
    results = {}
    for key, phi in ctx.config.phis_for(task, where):
        res = counterexample_search(phi, dom, bumps, scalings, task.get("c"))
        results[key] = res
        if ctx.out is not None:
            best = next(c for c in res["curves"] if c["bump"] == res["argmax"]["bump"])
            rows = [[r["scaling"], r["lhs"], r["rhs"], r["ratio"]] for r in best["curve"]]
            _write_csv(ctx.out / f"{task['_stem']}_{key}.csv", ["scaling", "lhs", "rhs", "ratio"], rows)
    return {"phi": results}, False


TASKS = {
    "validate-phi": task_validate_phi,
    "check-conditions": task_check_conditions,
    "compute-norm": task_compute_norm,
    "conjugate-table": task_conjugate_table,
    "verify-poincare": task_verify_poincare,
    "counterexample-search": task_counterexample,
    "sweep": task_sweep,
}


def run(config: RunConfig, out: Optional[Path] = None, threads: int = 1,
        tolerance: Optional[float] = None, seed: int = 0, log=None) -> int:
    """Execute the configured tasks in order; returns the exit status."""
    log = sys.stderr if log is None else log
    ctx = TaskContext(config, out, threads, tolerance, seed)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    status = 0
    timings = []
    for i, task in enumerate(config.tasks):
        where = f"tasks[{i}]"
        stem = f"{i:02d}_{task['type']}"
        task = dict(task, _stem=stem)
        start = time.perf_counter()
        extra = None
        try:
            outcome = TASKS[task["type"]](ctx, task, where)
        except ConfigError as exc:
            print(f"configuration error: {exc}", file=log)
            return 2
        except (MusielakError, ArithmeticError, ValueError) as exc:
            print(f"evaluation error in {where} ({task['type']}): {exc}", file=log)
            return 2
        result, failed = outcome[0], outcome[1]
        if len(outcome) > 2:
            extra = outcome[2]
        elapsed = time.perf_counter() - start
        timings.append({"task": stem, "seconds": elapsed, "cells": extra})
        if out is not None:
            spec = {k: v for k, v in task.items() if not k.startswith("_")}
            _write_json(out / f"{stem}.json", {"schema_version": SCHEMA_VERSION, "task": spec,
                                               "failed": failed, "result": result})
        if "evaluation_error" in result:
            # per-cell errors are kept in the report; the run goes on but ends with status 2
            print(f"evaluation error in {where} ({task['type']}): {result['evaluation_error']}",
                  file=log)
            status = 2
        elif failed:
            status = max(status, 1)
        print(f"{stem}: {'FAIL' if failed else 'ok'} ({elapsed:.2f} s)", file=log)
    if out is not None and timings:
        _write_json(out / "timings.json", {"schema_version": SCHEMA_VERSION, "tasks": timings})
    return status


# -- describe ---------------------------------------------------------------------

def _pretty_constant(expr) -> str:
    text = str(sympy.nsimplify(expr))
    text = re.sub(r"\*?sqrt\((\d+)\)", r"√\1", text)
    return text.replace("*", "·")


def describe(config: RunConfig) -> str:
    dom = config.domain
    m = config.order
    lines = [f"domain: N = {dom.dim}, bounds = {[[a, b] for a, b in zip(dom.lower, dom.upper)]}",
             f"  nodes = {list(dom.nodes)}, h = {[float(f'{h:.12g}') for h in dom.spacing]}",
             f"  d = {dom.diameter:.12g}"]
    lines.append("phi functions:")
    for key, phi in config.phis.items():
        lines.append(f"  {key}: {phi.family.value}  M(x,t) = {_formula(phi, config.phi_specs[key])}")
    sq = sum((sympy.Rational(str(b)) - sympy.Rational(str(a))) ** 2
             for a, b in zip(dom.lower, dom.upper))
    two_d = 2 * sympy.sqrt(sq)
    c_exact = two_d * sympy.Max(1, two_d) ** (m - 1)
    c_val = poincare_constant(dom, m)
    c_text = _pretty_constant(c_exact)
    lines.append(f"order m = {m}")
    if sympy.nsimplify(c_exact).is_Integer:
        lines.append(f"c = {c_text}")
    else:
        lines.append(f"c = {c_text} ≈ {c_val:.6f}")
    count = count_multi_indices(dom.dim, m)
    lines.append(f"#{{|β|={m}}} = {count}, C = c·{1 + count} ≈ {norm_constant(dom, m):.6f}")
    lines.append(f"tasks: {[t.get('type') for t in config.tasks]}")
    return "\n".join(lines)


def _formula(phi, spec):
    fam = phi.family.value
    if fam == "double_phase":
        return f"t^{phi.p_base:g} + ({phi.a.describe()}) t^{phi.q:g}"
    if fam == "orlicz_custom":
        return str(spec["expr"])
    p = phi.p.describe()
    return {"power_variable": f"t^({p})", "power_log": f"t^({p}) log(e+t)",
            "exp_power": f"exp(t^({p})) - 1"}[fam]


# -- entry point ------------------------------------------------------------------

def _parser():
    parser = argparse.ArgumentParser(prog="musielak", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="execute the tasks of a config and write JSON reports")
    run_p.add_argument("--config", required=True, help="path to the JSON run configuration")
    run_p.add_argument("--out", default="reports", help="output directory for reports")
    run_p.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    run_p.add_argument("--tolerance", type=float, default=None,
                       help="relative verdict tolerance (overrides the config)")
    run_p.add_argument("--seed", type=int, default=0,
                       help="jitter seed for checker sample points; 0 = plain lattice")
    desc_p = sub.add_parser("describe", help="print the resolved setup without running tasks")
    desc_p.add_argument("--config", required=True)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = RunConfig.load(args.config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    if args.command == "describe":
        print(describe(config))
        return 0
    if args.threads < 1:
        print("configuration error: --threads must be at least 1", file=sys.stderr)
        return 2
    return run(config, Path(args.out), args.threads, args.tolerance, args.seed)


if __name__ == "__main__":
    sys.exit(main())
