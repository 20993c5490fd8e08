"""Damped least squares with simple box bounds.

Steps solve ``(J^T J + lam * diag(J^T J)) dx = -J^T r`` and are projected
onto the bounds.  A step is accepted only if the cost drops; the damping is
then halved, otherwise it is multiplied by ten.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "FitProblem",
    "FitResult",
    "FitError",
    "finite_difference_jacobian",
    "levenberg_marquardt",
]

ResidualFn = Callable[[np.ndarray], np.ndarray]


class FitError(RuntimeError):
    pass


@dataclass
class FitProblem:
    """Residual function, start point, bounds and parameter names.

    Residuals are expected to be already weighted (divided by their
    uncertainties).  ``absolute_sigma`` says whether those weights are
    real measurement errors; if not, the covariance is rescaled by the
    reduced chi-square.
    """

    residual: ResidualFn
    x0: np.ndarray
    names: Sequence[str]
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None
    absolute_sigma: bool = False

    def __post_init__(self) -> None:
        self.x0 = np.asarray(self.x0, dtype=float)
        n = len(self.x0)
        if len(self.names) != n:
            raise ValueError("one name per parameter required")
        self.lower = np.full(n, -np.inf) if self.lower is None else np.asarray(self.lower, dtype=float)
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float)
        if np.any(self.lower >= self.upper):
            raise ValueError("every lower bound must be below its upper bound")


@dataclass
class FitResult:
    names: tuple[str, ...]
    x: np.ndarray
    stderr: np.ndarray
    covariance: np.ndarray
    cost: float
    residual_norm: float
    converged: bool
    iterations: int
    message: str
    jacobian_rank: int
    condition: float
    at_bound: tuple[str, ...] = ()
    history: list[float] = field(default_factory=list)
    n_residuals: int = 0
    flags: list[str] = field(default_factory=list)

    @property
    def params(self) -> dict[str, float]:
        return {k: float(v) for k, v in zip(self.names, self.x)}

    @property
    def errors(self) -> dict[str, float]:
        return {k: float(v) for k, v in zip(self.names, self.stderr)}

    @property
    def identifiable(self) -> bool:
        return "non-identifiable" not in self.flags

    def to_dict(self) -> dict:
        return {
            "parameters": self.params,
            "errors": {k: (v if np.isfinite(v) else None) for k, v in self.errors.items()},
            "residual_norm": self.residual_norm,
            "cost": self.cost,
            "converged": self.converged,
            "iterations": self.iterations,
            "message": self.message,
            "jacobian_rank": self.jacobian_rank,
            "condition": self.condition if np.isfinite(self.condition) else None,
            "at_bound": list(self.at_bound),
            "flags": list(self.flags),
            "n_residuals": self.n_residuals,
        }


def finite_difference_jacobian(
    fun: ResidualFn,
    x: np.ndarray,
    rel_step: float = 1e-6,
    abs_step: float = 1e-8,
    lower: np.ndarray | None = None,
    upper: np.ndarray | None = None,
    f0: np.ndarray | None = None,
) -> np.ndarray:
    """Central-difference Jacobian with per-parameter relative steps.

    The step is ``max(rel_step * |x_i|, abs_step)``.  Next to a bound the
    difference falls back to one-sided.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    lower = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    upper = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    cols = []
    for i in range(n):
        h = max(rel_step * abs(x[i]), abs_step)
        up_ok = x[i] + h <= upper[i]
        down_ok = x[i] - h >= lower[i]
        xp = x.copy()
        xm = x.copy()
        if up_ok and down_ok:
            xp[i] += h
            xm[i] -= h
            cols.append((np.asarray(fun(xp)) - np.asarray(fun(xm))) / (2.0 * h))
            continue
        base = np.asarray(fun(x)) if f0 is None else f0
        if up_ok:
            xp[i] += h
            cols.append((np.asarray(fun(xp)) - base) / h)
        elif down_ok:
            xm[i] -= h
            cols.append((base - np.asarray(fun(xm))) / h)
        else:
            raise FitError(f"bounds on parameter {i} are narrower than the difference step")
    return np.stack(cols, axis=1)


def _covariance(jac: np.ndarray, cost: float, absolute_sigma: bool) -> tuple[np.ndarray, int, float]:
    n, p = jac.shape
    u, s, vt = np.linalg.svd(jac, full_matrices=False)
    tol = s.max() * max(n, p) * np.finfo(float).eps if s.size and s.max() > 0 else 0.0
    rank = int(np.sum(s > tol))
    cond = float(s.max() / s.min()) if s.size and s.min() > 0 else np.inf
    if rank < p:
        cov = np.full((p, p), np.inf)
        return cov, rank, cond
    cov = (vt.T / s**2) @ vt
    if not absolute_sigma:
        dof = n - p
        cov = cov * (2.0 * cost / dof if dof > 0 else np.inf)
    return cov, rank, cond


def levenberg_marquardt(
    problem: FitProblem,
    max_iter: int = 500,
    ftol: float = 1e-10,
    xtol: float = 1e-12,
    damping: float = 1e-3,
    rel_step: float = 1e-6,
    max_condition: float = 1e10,
) -> FitResult:
    """Minimize ``0.5 * |r(x)|^2`` subject to ``lower <= x <= upper``."""
    lo, hi = problem.lower, problem.upper
    x = np.clip(problem.x0, lo, hi)
    fun = problem.residual

    def jac(xx: np.ndarray, rr: np.ndarray) -> np.ndarray:
        if problem.jacobian is not None:
            return np.asarray(problem.jacobian(xx), dtype=float)
        return finite_difference_jacobian(fun, xx, rel_step=rel_step, lower=lo, upper=hi, f0=rr)

    r = np.asarray(fun(x), dtype=float)
    if r.size < x.size:
        raise FitError(f"{r.size} residuals cannot constrain {x.size} parameters")
    if not np.all(np.isfinite(r)):
        raise FitError("residuals are not finite at the start point")
    cost = 0.5 * float(r @ r)
    history = [cost]
    lam = damping
    converged = False
    message = "maximum iterations reached"
    iterations = 0
    j = jac(x, r)
    while iterations < max_iter:
        iterations += 1
        if cost == 0.0:
            converged, message = True, "zero residual"
            break
        g = j.T @ r
        a = j.T @ j
        diag = np.maximum(np.diag(a), 1e-12 * max(1.0, float(np.max(np.diag(a)))))
        accepted = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(a + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            x_new = np.clip(x + step, lo, hi)
            r_new = np.asarray(fun(x_new), dtype=float)
            cost_new = 0.5 * float(r_new @ r_new) if np.all(np.isfinite(r_new)) else np.inf
            if cost_new < cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            converged, message = True, "no cost-reducing step left (local minimum)"
            break
        dx = np.linalg.norm(x_new - x)
        drop = cost - cost_new
        x, r, cost = x_new, r_new, cost_new
        history.append(cost)
        lam = max(lam * 0.5, 1e-12)
        j = jac(x, r)
        if drop <= ftol * max(cost + drop, np.finfo(float).tiny):
            converged, message = True, "relative cost change below ftol"
            break
        if dx <= xtol * (np.linalg.norm(x) + xtol):
            converged, message = True, "step below xtol"
            break

    cov, rank, cond = _covariance(j, cost, problem.absolute_sigma)
    identifiable = rank == len(x) and cond <= max_condition
    if not identifiable:
        # a near-singular Jacobian gives meaningless finite errors
        cov = np.full_like(cov, np.inf)
    stderr = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    tol = 1e-9 * np.maximum(1.0, np.abs(x))
    at_bound = tuple(
        name
        for name, xi, l, u, t in zip(problem.names, x, lo, hi, tol)
        if abs(xi - l) <= t or abs(xi - u) <= t
    )
    flags = []
    if not identifiable:
        flags.append("non-identifiable")
    if at_bound:
        flags.append("parameter-at-bound")
    if not converged:
        flags.append("not-converged")
    return FitResult(
        names=tuple(problem.names),
        x=x,
        stderr=stderr,
        covariance=cov,
        cost=cost,
        residual_norm=float(np.sqrt(2.0 * cost)),
        converged=converged,
        iterations=iterations,
        message=message,
        jacobian_rank=rank,
        condition=cond,
        at_bound=at_bound,
        history=history,
        n_residuals=int(r.size),
        flags=flags,
    )
