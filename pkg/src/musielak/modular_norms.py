"""Modulars, Luxemburg norms and modular-convergence gaps on grid functions."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .domain import Domain, GridFunction, MultiIndex, derivative, multi_indices
from .errors import ConvergenceError, DomainMismatchError

__all__ = [
    "NormResult",
    "Gauge",
    "modular",
    "luxemburg_norm",
    "sobolev_norm",
    "modular_gap",
    "DEFAULT_TOL",
    "MAX_BISECTIONS",
]

DEFAULT_TOL = 1e-10
MAX_BISECTIONS = 200
_MAX_BRACKET_STEPS = 2100


@lru_cache(maxsize=16)
def _grid_bound(phi, domain: Domain, strict: bool):
    return phi.bind(domain.points, strict=strict)


class Gauge:
    """lam -> sum_k integral M(x, |f_k(x)| / lam) dx for a fixed list of grid arrays.

    Only nodes where some f_k is nonzero are kept: M(x, 0) = 0, so the
    others contribute nothing. The reduction order is fixed by the node
    order, so repeated calls are bit-identical.
    """

    def __init__(self, phi, domain: Domain, arrays: Sequence[np.ndarray], strict: bool = True):
        bound = _grid_bound(phi, domain, strict)
        weights = domain.weights.ravel()
        idx, mags, wts = [], [], []
        for arr in arrays:
            flat = np.abs(np.asarray(arr, dtype=float)).ravel()
            nz = np.flatnonzero(flat)
            idx.append(nz)
            mags.append(flat[nz])
            wts.append(weights[nz])
        index = np.concatenate(idx) if idx else np.zeros(0, dtype=int)
        self.magnitudes = np.concatenate(mags) if mags else np.zeros(0)
        self.weights = np.concatenate(wts) if wts else np.zeros(0)
        self.bound = bound.take(index)
        self.index = index
        self.scale = float(self.magnitudes.max()) if self.magnitudes.size else 0.0

    def __call__(self, lam: float = 1.0) -> float:
        if self.magnitudes.size == 0:
            return 0.0
        return float(np.sum(self.weights * self.bound(self.magnitudes / lam)))


def modular(phi, u: GridFunction) -> float:
    """Trapezoidal quadrature of x -> M(x, |u(x)|) over the domain.

    Raises :class:`~musielak.errors.PhiRangeError` naming the node if M overflows.
    """
    return Gauge(phi, u.domain, [u.values])(1.0)


@dataclass
class NormResult:
    value: float
    lambda_bracket: tuple
    modular_at_value: float
    iterations: int

    def to_dict(self):
        return {"value": self.value, "lambda_bracket": list(self.lambda_bracket),
                "modular_at_value": self.modular_at_value, "iterations": self.iterations}


def _solve_gauge(gauge: Gauge, tol: float, max_iter: int) -> NormResult:
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    if gauge.scale == 0.0:
        return NormResult(0.0, (0.0, 0.0), 0.0, 0)

    def above_one(lam):
        val = gauge(lam)
        return not val <= 1.0  # inf (overflow) counts as above

    lam = gauge.scale
    steps = 0
    if above_one(lam):
        lo = lam
        hi = 2.0 * lam
        while above_one(hi):
            lo, hi = hi, 2.0 * hi
            steps += 1
            if steps > _MAX_BRACKET_STEPS:
                raise ConvergenceError("could not bracket the norm from above")
    else:
        hi = lam
        lo = 0.5 * lam
        while not above_one(lo):
            hi, lo = lo, 0.5 * lo
            steps += 1
            if steps > _MAX_BRACKET_STEPS:
                raise ConvergenceError("could not bracket the norm from below")

    iterations = 0
    while hi - lo > tol * lo:
        if iterations >= max_iter:
            raise ConvergenceError(
                f"norm bisection did not reach tol={tol:g} in {max_iter} iterations "
                f"(bracket [{lo!r}, {hi!r}])")
        mid = 0.5 * (lo + hi)
        if above_one(mid):
            lo = mid
        else:
            hi = mid
        iterations += 1
    value = 0.5 * (lo + hi)
    return NormResult(value, (lo, hi), gauge(value), iterations)


def luxemburg_norm(phi, u: GridFunction, tol: float = DEFAULT_TOL,
                   max_iter: int = MAX_BISECTIONS) -> NormResult:
    """inf{lam > 0 : modular(u / lam) <= 1}.

    Brackets lam by doubling/halving from max|u|, then bisects until the
    bracket width is at most ``tol`` times its lower end.
    """
    return _solve_gauge(Gauge(phi, u.domain, [u.values], strict=False), tol, max_iter)


def sobolev_norm(phi, u: GridFunction, m: int, tol: float = DEFAULT_TOL,
                 max_iter: int = MAX_BISECTIONS) -> NormResult:
    """inf{lam > 0 : sum_{|alpha| <= m} modular(D^alpha u / lam) <= 1}."""
    arrays = [derivative(u, alpha).values
              for k in range(m + 1) for alpha in multi_indices(u.domain.dim, k)]
    return _solve_gauge(Gauge(phi, u.domain, arrays, strict=False), tol, max_iter)


def modular_gap(phi, u: GridFunction, v: GridFunction, lam: float = 1.0) -> float:
    """modular((u - v) / lam), the quantity that tends to zero under modular convergence."""
    if u.domain != v.domain:
        raise DomainMismatchError("modular_gap needs u and v on the same domain")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    return Gauge(phi, u.domain, [(u.values - v.values) / lam])(1.0)


def derivative_arrays(u: GridFunction, order: int) -> list[tuple[MultiIndex, np.ndarray]]:
    return [(alpha, derivative(u, alpha).values) for alpha in multi_indices(u.domain.dim, order)]
