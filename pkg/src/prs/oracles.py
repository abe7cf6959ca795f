"""Brute-force and finite-difference oracles used to cross-check the solvers.

Nothing in the solver code paths imports this module.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NoFeasibleGridPoint

CHUNK = 1 << 20


@dataclass(frozen=True)
class GridSpec:
    box_center: np.ndarray
    box_halfwidth: float
    points_per_axis: int

    def __post_init__(self):
        if self.points_per_axis < 3:
            raise ValueError("points_per_axis must be at least 3")
        if not self.box_halfwidth > 0:
            raise ValueError("box_halfwidth must be positive")
        object.__setattr__(self, "box_center", np.asarray(self.box_center, dtype=float).reshape(-1))

    @property
    def step(self) -> float:
        return 2.0 * self.box_halfwidth / (self.points_per_axis - 1)

    def axis(self, i: int) -> np.ndarray:
        c = self.box_center[i]
        return np.linspace(c - self.box_halfwidth, c + self.box_halfwidth, self.points_per_axis)


def grid_points(grid: GridSpec, start: int, stop: int) -> np.ndarray:
    """Rows ``start:stop`` of the full tensor grid in C order."""
    n = grid.box_center.size
    k = grid.points_per_axis
    idx = np.arange(start, stop)
    out = np.empty((idx.size, n))
    for i in range(n - 1, -1, -1):
        out[:, i] = grid.axis(i)[idx % k]
        idx = idx // k
    return out


def grid_search(objective_batch: Callable, grid: GridSpec, feasible_batch: Callable | None = None,
                keep: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Best ``keep`` feasible grid points (rows) and their values, ascending.

    ``objective_batch`` and ``feasible_batch`` take an (N, n) array.
    """
    n = grid.box_center.size
    total = grid.points_per_axis**n
    best_x = np.empty((0, n))
    best_v = np.empty(0)
    for start in range(0, total, CHUNK):
        X = grid_points(grid, start, min(start + CHUNK, total))
        if feasible_batch is not None:
            X = X[feasible_batch(X)]
            if X.shape[0] == 0:
                continue
        v = objective_batch(X)
        if keep < v.size:
            sel = np.argpartition(v, keep)[:keep]
            X, v = X[sel], v[sel]
        best_x = np.vstack([best_x, X])
        best_v = np.concatenate([best_v, v])
        if best_v.size > keep:
            sel = np.argsort(best_v, kind="stable")[:keep]
            best_x, best_v = best_x[sel], best_v[sel]
    if best_v.size == 0:
        raise NoFeasibleGridPoint("no grid point satisfies the feasibility predicate")
    order = np.argsort(best_v, kind="stable")
    return best_x[order], best_v[order]


def grid_search_instance(inst, grid: GridSpec, rows=None, lower=None, upper=None,
                         keep: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """``grid_search`` specialised to a ``PrsInstance`` objective and slab feasibility.

    The grid is swept one slice x_0 = const at a time.  Every term of the
    objective and of ``rows @ x`` splits into a part on the trailing axes,
    computed once, and a cheap update in x_0.
    """
    n = grid.box_center.size
    if n == 1:
        feas = None
        if rows is not None and len(rows):
            feas = lambda X: np.all((X @ rows.T >= lower) & (X @ rows.T <= upper), axis=1)  # noqa: E731
        return grid_search(inst.objective_batch, grid, feas, keep)
    H, c, sigma, p = inst.H, inst.c, inst.sigma, inst.p
    tail = np.stack(np.meshgrid(*[grid.axis(i) for i in range(1, n)], indexing="ij"), axis=-1).reshape(-1, n - 1)
    q_tail = 0.5 * np.einsum("ij,ij->i", tail @ H[1:, 1:], tail) + tail @ c[1:]
    cross = tail @ H[0, 1:]
    sq_tail = np.einsum("ij,ij->i", tail, tail)
    has_rows = rows is not None and len(rows) > 0
    if has_rows:
        ax_tail = np.ascontiguousarray((tail @ rows[:, 1:].T).T)
    best_x = np.empty((0, n))
    best_v = np.empty(0)
    for a in grid.axis(0):
        sq = sq_tail + a * a
        v = q_tail + a * cross + (0.5 * H[0, 0] * a * a + c[0] * a)
        v += (sigma / p) * (sq * sq if p == 4.0 else sq ** (p / 2))
        ok = v < best_v[-1] if best_v.size >= keep else np.ones(v.size, dtype=bool)
        if has_rows:
            for r in range(rows.shape[0]):
                shift = a * rows[r, 0]
                ok &= ax_tail[r] >= lower[r] - shift
                ok &= ax_tail[r] <= upper[r] - shift
        idx = np.flatnonzero(ok)
        if idx.size == 0:
            continue
        v = v[idx]
        if keep < v.size:
            sel = np.argpartition(v, keep)[:keep]
            idx, v = idx[sel], v[sel]
        X = np.column_stack([np.full(idx.size, a), tail[idx]])
        best_x = np.vstack([best_x, X])
        best_v = np.concatenate([best_v, v])
        if best_v.size > keep:
            sel = np.argsort(best_v, kind="stable")[:keep]
            best_x, best_v = best_x[sel], best_v[sel]
    if best_v.size == 0:
        raise NoFeasibleGridPoint("no grid point satisfies the slab constraints")
    order = np.argsort(best_v, kind="stable")
    return best_x[order], best_v[order]


def coordinate_polish(objective: Callable, x0, step: float, feasible: Callable | None = None,
                      min_step: float = 1e-8) -> tuple[np.ndarray, float]:
    """Compass search along the axes with step halving down to ``min_step``."""
    x = np.array(x0, dtype=float)
    fx = objective(x)
    n = x.size
    while step >= min_step:
        improved = False
        for i in range(n):
            for sgn in (1.0, -1.0):
                y = x.copy()
                y[i] += sgn * step
                if feasible is not None and not feasible(y):
                    continue
                fy = objective(y)
                if fy < fx:
                    x, fx, improved = y, fy, True
                    break
        if not improved:
            step *= 0.5
    return x, fx


def grid_minimize(objective: Callable, grid: GridSpec, feasibility: Callable | None = None,
                  objective_batch: Callable | None = None,
                  feasible_batch: Callable | None = None) -> tuple[np.ndarray, float]:
    """Best feasible grid point followed by coordinate-descent polish.

    ``objective`` and ``feasibility`` act on single points; the optional
    batch versions act on (N, n) arrays and are used for the sweep.
    """
    if objective_batch is None:
        objective_batch = lambda X: np.array([objective(x) for x in X])  # noqa: E731
    if feasible_batch is None and feasibility is not None:
        feasible_batch = lambda X: np.array([bool(feasibility(x)) for x in X], dtype=bool)  # noqa: E731
    X, _ = grid_search(objective_batch, grid, feasible_batch, keep=1)
    return coordinate_polish(objective, X[0], grid.step, feasibility)


def grid_minimize_slabs(inst, cons, grid: GridSpec, starts: int = 20):
    """Grid sweep over the slab-feasible points, then SLSQP from the best few.

    Compass search stalls on oblique facets, so the linear constraints are
    handed to a local SQP solver; the best ``starts`` grid points (at least
    a few grid steps apart) seed it.
    """
    from scipy.optimize import minimize

    A, lo, hi = cons.rows, cons.lower, cons.upper

    X, V = grid_search_instance(inst, grid, A, lo, hi, keep=50 * starts)
    seeds = []
    for x in X:
        if all(np.max(np.abs(x - s)) > 2.5 * grid.step for s in seeds):
            seeds.append(x)
        if len(seeds) >= starts:
            break
    best_x, best_v = X[0], float(V[0])
    cons_list = []
    if A.shape[0]:
        cons_list = [
            {"type": "ineq", "fun": lambda x: A @ x - lo, "jac": lambda x: A},
            {"type": "ineq", "fun": lambda x: hi - A @ x, "jac": lambda x: -A},
        ]
    for s in seeds:
        res = minimize(inst.objective, s, jac=inst.gradient, method="SLSQP",
                       constraints=cons_list, options={"ftol": 1e-15, "maxiter": 500})
        x = res.x
        if A.shape[0] and not (np.all(A @ x >= lo - 1e-9) and np.all(A @ x <= hi + 1e-9)):
            continue
        v = inst.objective(x)
        if v < best_v:
            best_x, best_v = x, v
    return best_x, best_v


def constrained_multistart(inst, cons, rng: np.random.Generator, starts: int = 20,
                           radius: float = 1.0) -> float:
    """Best SLSQP value over ``starts`` random starts in a ball of ``radius``."""
    from scipy.optimize import minimize

    A, lo, hi = cons.rows, cons.lower, cons.upper
    cons_list = [
        {"type": "ineq", "fun": lambda x: A @ x - lo, "jac": lambda x: A},
        {"type": "ineq", "fun": lambda x: hi - A @ x, "jac": lambda x: -A},
    ]
    best = np.inf
    for _ in range(starts):
        x0 = rng.uniform(-radius, radius, inst.n)
        res = minimize(inst.objective, x0, jac=inst.gradient, method="SLSQP",
                       constraints=cons_list, options={"ftol": 1e-15, "maxiter": 500})
        if cons.is_feasible(res.x, tol=1e-9):
            best = min(best, inst.objective(res.x))
    return float(best)


def fd_gradient(objective: Callable, x, step: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (objective(x + e) - objective(x - e)) / (2 * step)
    return g


def fd_hessian(objective: Callable, x, step: float = 1e-4) -> np.ndarray:
    """Central second differences of function values."""
    x = np.asarray(x, dtype=float)
    n = x.size
    Hm = np.empty((n, n))
    f0 = objective(x)
    E = np.eye(n) * step
    for i in range(n):
        Hm[i, i] = (objective(x + E[i]) - 2 * f0 + objective(x - E[i])) / step**2
        for j in range(i + 1, n):
            v = (objective(x + E[i] + E[j]) - objective(x + E[i] - E[j])
                 - objective(x - E[i] + E[j]) + objective(x - E[i] - E[j])) / (4 * step**2)
            Hm[i, j] = Hm[j, i] = v
    return Hm
