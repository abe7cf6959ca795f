"""Global minimization of the p = 4 subproblem under a few slab constraints.

The feasible region is ``{x : l_i <= a_i'x <= u_i}``.  The global minimum
is either a global minimizer of the unconstrained problem that happens to
be feasible, the (unique) local-nonglobal minimizer when it lies strictly
inside every slab, or a minimizer on one of the 2m facets ``a_j'x = l_j``
/ ``a_j'x = u_j``.  Each facet is again a p = 4 problem in one dimension
fewer (null-space substitution), so the facets are solved recursively.
Facet subproblems reached along different branches are the same affine
slice; they are memoized on the set of fixed (row, side) pairs.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

from .errors import CapExceeded, DegenerateRow, Infeasible, InvalidInstance
from .global_solver import GlobalSolution, solve_global
from .instance import PrsInstance
from .local_solver import solve_local_nonglobal

MAX_M = 12
TAU_FEAS = 1e-8
INTERIOR_MARGIN = 1e-10
DUP_VALUE = 1e-8
DUP_POINT = 1e-6
_ROW_DROP = 1e-12

LOWER, UPPER = "lower", "upper"


@dataclass(frozen=True, eq=False)
class SlabConstraints:
    rows: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        if rows.ndim == 1:
            rows = rows.reshape(1, -1) if rows.size else rows.reshape(0, 0)
        lower = np.array(self.lower, dtype=float).reshape(-1)
        upper = np.array(self.upper, dtype=float).reshape(-1)
        m = rows.shape[0]
        if lower.shape != (m,) or upper.shape != (m,):
            raise InvalidInstance("lower/upper must have one entry per row")
        if not (np.all(np.isfinite(rows)) and np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise InvalidInstance("constraint data must be finite")
        if np.any(lower > upper):
            raise InvalidInstance("need lower <= upper for every slab")
        if m and np.any(np.linalg.norm(rows, axis=1) == 0):
            raise DegenerateRow("constraint rows must be nonzero")
        for a in (rows, lower, upper):
            a.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    @classmethod
    def empty(cls, n: int) -> "SlabConstraints":
        return cls(np.zeros((0, n)), np.zeros(0), np.zeros(0))

    def max_row_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.rows, axis=1))) if self.m else 0.0

    def feas_tol(self, x) -> float:
        return TAU_FEAS * (1.0 + float(np.linalg.norm(x))) * max(self.max_row_norm(), 1.0)

    def is_feasible(self, x, tol: float | None = None) -> bool:
        if self.m == 0:
            return True
        x = np.asarray(x, dtype=float)
        tol = self.feas_tol(x) if tol is None else tol
        ax = self.rows @ x
        return bool(np.all(ax >= self.lower - tol) and np.all(ax <= self.upper + tol))

    def is_strictly_interior(self, x, margin: float) -> bool:
        ax = self.rows @ np.asarray(x, dtype=float)
        return bool(np.all(ax > self.lower + margin) and np.all(ax < self.upper - margin))


@dataclass(frozen=True, eq=False)
class ConstrainedSolution:
    point: np.ndarray
    value: float
    facet_trace: list = field(default_factory=list)
    subproblems: int = 0


def feasible_point(cons: SlabConstraints, n: int) -> np.ndarray | None:
    """Some point of the polyhedron, or None when it is empty."""
    if cons.m == 0:
        return np.zeros(n)
    A = np.vstack([cons.rows, -cons.rows])
    b = np.concatenate([cons.upper, -cons.lower])
    res = linprog(np.zeros(n), A_ub=A, b_ub=b, bounds=[(None, None)] * n, method="highs")
    if res.status != 0:
        return None
    return res.x


# ---------------------------------------------------------------- sphere / polyhedron

def _min_norm_dual_pg(G, lo, hi, tol=1e-10, max_iter=20000):
    """min ||y|| s.t. lo <= G y <= hi via projected gradient on the dual.

    Dual variables (lam, nu) >= 0 for the two sides, y = G'(lam - nu).
    Each step is a projected gradient step of length 1/L followed by an
    exact line search along the resulting direction.
    """
    m, k = G.shape
    L = 2.0 * max(np.linalg.norm(G, 2) ** 2, 1e-300)
    lam = np.zeros(m)
    nu = np.zeros(m)
    y = np.zeros(k)
    for _ in range(max_iter):
        Gy = G @ y
        g_lam = Gy - lo
        g_nu = hi - Gy
        lam_new = np.maximum(lam - g_lam / L, 0.0)
        nu_new = np.maximum(nu - g_nu / L, 0.0)
        d_lam = lam_new - lam
        d_nu = nu_new - nu
        gap = math.sqrt(float(d_lam @ d_lam + d_nu @ d_nu)) * L
        if gap <= tol * (1.0 + float(np.max(np.abs(np.concatenate([lo, hi]))))):
            break
        dy = G.T @ (d_lam - d_nu)
        curv = float(dy @ dy)
        slope = float(g_lam @ d_lam + g_nu @ d_nu)
        tau = 1.0 if curv <= 0 else min(1.0, max(0.0, -slope / curv))
        lam = lam + tau * d_lam
        nu = nu + tau * d_nu
        y = G.T @ (lam - nu)
    return y, lam, nu


def _polish_active(G, lo, hi, y, lam, nu, tol):
    """Exact min-norm point on the active face identified by the dual iterate."""
    Gy = G @ y
    scale = 1.0 + np.abs(np.concatenate([lo, hi])).max()
    act_lo = (lam > 0) | (np.abs(Gy - lo) <= 1e-7 * scale)
    act_hi = (nu > 0) | (np.abs(Gy - hi) <= 1e-7 * scale)
    act_hi &= ~act_lo | (lo == hi)
    rows = np.vstack([G[act_lo], G[act_hi]])
    rhs = np.concatenate([lo[act_lo], hi[act_hi]])
    if rows.shape[0] == 0:
        return np.zeros(G.shape[1])
    z, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    Gz = G @ z
    if np.all(Gz >= lo - tol) and np.all(Gz <= hi + tol):
        return z
    return None


def min_norm_in_slabs(G, lo, hi, tol=1e-10) -> np.ndarray:
    """Minimum-norm point of ``{y : lo <= G y <= hi}`` (assumed nonempty)."""
    G = np.asarray(G, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.all(lo <= 0) and np.all(hi >= 0):
        return np.zeros(G.shape[1])
    y, lam, nu = _min_norm_dual_pg(G, lo, hi, tol=tol)
    feas_tol = 1e-9 * (1.0 + np.abs(np.concatenate([lo, hi])).max())
    z = _polish_active(G, lo, hi, y, lam, nu, feas_tol)
    if z is not None and np.linalg.norm(z) <= np.linalg.norm(y) + 1e-9 * (1 + np.linalg.norm(y)):
        return z
    return y


def max_norm_vertex(G, lo, hi, tol=1e-9) -> np.ndarray | None:
    """Vertex of the bounded polyhedron ``{lo <= G y <= hi}`` of largest norm.

    Requires rank(G) = k (columns).  Vertices are enumerated from all
    k-subsets of rows with either bound active.
    """
    m, k = G.shape
    best, best_n = None, -1.0
    scale = 1.0 + np.abs(np.concatenate([lo, hi])).max()
    for S in itertools.combinations(range(m), k):
        GS = G[list(S)]
        if np.linalg.matrix_rank(GS) < k:
            continue
        choices = [(lo[i],) if lo[i] == hi[i] else (lo[i], hi[i]) for i in S]
        lu = scipy.linalg.lu_factor(GS)
        for rhs in itertools.product(*choices):
            v = scipy.linalg.lu_solve(lu, np.array(rhs))
            Gv = G @ v
            if np.all(Gv >= lo - tol * scale) and np.all(Gv <= hi + tol * scale):
                nv = float(v @ v)
                if nv > best_n:
                    best, best_n = v, nv
    return best


def _sphere_point_in_slabs(G, lo, hi, rho) -> np.ndarray | None:
    """A point with ||y|| = rho and lo <= G y <= hi, or None."""
    k = G.shape[1]
    keep = np.linalg.norm(G, axis=1) > 0
    G, lo, hi = G[keep], lo[keep], hi[keep]
    if G.shape[0] == 0:
        y = np.zeros(k)
        y[0] = rho
        return y
    rho2 = rho * rho
    y_min = min_norm_in_slabs(G, lo, hi)
    n_min = float(y_min @ y_min)
    slack = 1e-12 * max(1.0, rho2)
    if n_min > rho2 + slack:
        return None
    sv = np.linalg.svd(G, compute_uv=False)
    rank = int(np.sum(sv > 1e-12 * max(sv[0], 1e-300)))
    if rank < k:
        _, _, Vt = np.linalg.svd(G)
        d = Vt[-1]
        b = float(y_min @ d)
        s = -b + math.sqrt(max(b * b - (n_min - rho2), 0.0))
        return y_min + s * d
    v = max_norm_vertex(G, lo, hi)
    if v is None:
        return None
    n_max = float(v @ v)
    if n_max < rho2 - slack:
        return None
    e = v - y_min
    a = float(e @ e)
    if a == 0.0:
        return y_min
    b = float(y_min @ e)
    disc = max(b * b - a * (n_min - rho2), 0.0)
    s = min(max((-b + math.sqrt(disc)) / a, 0.0), 1.0)
    return y_min + s * e


def intersect_global_set(sol: GlobalSolution, cons: SlabConstraints) -> np.ndarray | None:
    """A global minimizer of the unconstrained problem satisfying ``cons``."""
    if not sol.is_sphere:
        return sol.point if cons.is_feasible(sol.point) else None
    if cons.m == 0:
        return sol.representative()
    B = sol.sphere_basis
    ctr = sol.sphere_center
    G = cons.rows @ B
    shift = cons.rows @ ctr
    lo = cons.lower - shift
    hi = cons.upper - shift
    # rows blind to the eigenspace only see the fixed center
    blind = np.linalg.norm(G, axis=1) <= _ROW_DROP * np.linalg.norm(cons.rows, axis=1)
    tol = cons.feas_tol(ctr)
    if np.any(blind & ((lo > tol) | (hi < -tol))):
        return None
    G, lo, hi = G[~blind], lo[~blind], hi[~blind]
    if G.shape[0] == 0:
        return sol.representative()
    y = _sphere_point_in_slabs(G, lo, hi, sol.sphere_radius)
    if y is None:
        return None
    x = ctr + B @ y
    return x if cons.is_feasible(x) else None


# ---------------------------------------------------------------- facet reduction

@dataclass(frozen=True, eq=False)
class Reduction:
    instance: PrsInstance | None  # None when the facet is a single point
    constraints: SlabConstraints
    kept: list                    # indices (into the input constraints) still present
    x_hat: np.ndarray
    P: np.ndarray
    offset: float

    def back_map(self, z) -> np.ndarray:
        return self.x_hat + self.P @ np.asarray(z, dtype=float).reshape(-1)

    def reduced_objective(self, z) -> float:
        """Objective of the reduced problem plus the carried constant."""
        z = np.asarray(z, dtype=float)
        if self.instance is None:
            return self.offset
        return self.instance.objective(z) + self.offset


def null_space_reduce(inst: PrsInstance, cons: SlabConstraints, j: int, side: str) -> Reduction:
    """Restrict ``inst`` (p = 4) to the hyperplane ``a_j'x = b`` with b = l_j or u_j.

    With P an orthonormal basis of the null space of a_j and x_hat the
    point of the hyperplane closest to the origin, x = x_hat + P z gives
    ||x||^4 = (w + ||z||^2)^2 with w = ||x_hat||^2, hence the reduced data
    H' = P'HP + sigma w I, c' = P'(H x_hat + c), constant g(x_hat).

    Raises ``Infeasible`` when a remaining row becomes constant on the
    hyperplane and its slab excludes that constant.
    """
    if inst.p != 4.0:
        raise InvalidInstance("facet reduction is exact only for p = 4")
    a = cons.rows[j]
    na = float(np.linalg.norm(a))
    if na <= 1e-14 * max(1.0, cons.max_row_norm()):
        raise DegenerateRow(f"row {j} is numerically zero")
    b = cons.lower[j] if side == LOWER else cons.upper[j]
    x_hat = a * (b / na**2)
    P = scipy.linalg.null_space(a.reshape(1, -1))
    offset = inst.objective(x_hat)

    kept = []
    rows, lower, upper = [], [], []
    for i in range(cons.m):
        if i == j:
            continue
        ai = cons.rows[i]
        r = ai @ P
        s = float(ai @ x_hat)
        if np.linalg.norm(r) <= _ROW_DROP * np.linalg.norm(ai):
            tol = TAU_FEAS * (1.0 + np.linalg.norm(x_hat)) * max(np.linalg.norm(ai), 1.0)
            if s < cons.lower[i] - tol or s > cons.upper[i] + tol:
                raise Infeasible(f"row {i} is parallel to row {j} and excludes the facet")
            continue
        kept.append(i)
        rows.append(r)
        lower.append(cons.lower[i] - s)
        upper.append(cons.upper[i] - s)
    k = P.shape[1]
    red_cons = SlabConstraints(np.array(rows).reshape(len(rows), k), lower, upper)
    if k == 0:
        return Reduction(None, red_cons, kept, x_hat, P, offset)
    w = float(x_hat @ x_hat)
    Hr = P.T @ inst.H @ P + inst.sigma * w * np.eye(k)
    cr = P.T @ (inst.H @ x_hat + inst.c)
    noise = 16 * np.finfo(float).eps * (np.linalg.norm(inst.H, 2) * np.sqrt(w) + np.linalg.norm(inst.c)) * inst.n
    if np.linalg.norm(cr) <= noise:
        cr = np.zeros(k)
    red = PrsInstance(0.5 * (Hr + Hr.T), cr, inst.sigma, 4.0)
    return Reduction(red, red_cons, kept, x_hat, P, offset)


# ---------------------------------------------------------------- recursion

def facet_bound(m: int, n: int) -> int:
    """Upper bound prod_{j<s} (2m - 2j), s = min(m, n), on facet subproblems."""
    s = min(m, n)
    out = 1
    for j in range(s):
        out *= 2 * m - 2 * j
    return out


class _Search:
    def __init__(self, inst: PrsInstance, cons: SlabConstraints):
        self.root = inst
        self.cons = cons
        self.memo: dict[frozenset, tuple | None] = {}

    def candidate(self, x, trace):
        if not self.cons.is_feasible(x):
            return None
        return (self.root.objective(x), x, trace)

    def node(self, inst, cons, labels, x0, M, trace):
        key = frozenset(trace)
        if key in self.memo:
            return self.memo[key]
        self.memo[key] = best = self._solve_node(inst, cons, labels, x0, M, trace)
        return best

    def _solve_node(self, inst, cons, labels, x0, M, trace):
        if inst is None:
            return self.candidate(x0, trace)
        if cons.m == 0:
            sol = solve_global(inst)
            return self.candidate(x0 + M @ sol.representative(), trace)
        if feasible_point(cons, inst.n) is None:
            return None
        sol = solve_global(inst)
        w = intersect_global_set(sol, cons)
        if w is not None:
            hit = self.candidate(x0 + M @ w, trace)
            if hit is not None:
                return hit

        cands = []
        loc = solve_local_nonglobal(inst, spec=sol.spectrum)
        if loc.exists:
            margin = INTERIOR_MARGIN * (1.0 + float(np.linalg.norm(loc.point)))
            if cons.is_strictly_interior(loc.point, margin):
                _push(cands, self.candidate(x0 + M @ loc.point, trace))
        for j, side in _facets(cons):
            _push(cands, self.child(inst, cons, labels, x0, M, trace, j, side))
        return min(cands, key=lambda c: c[0]) if cands else None

    def child(self, inst, cons, labels, x0, M, trace, j, side):
        try:
            red = null_space_reduce(inst, cons, j, side)
        except Infeasible:
            return None
        sub_labels = [labels[i] for i in red.kept]
        x0c = x0 + M @ red.x_hat
        Mc = M @ red.P
        return self.node(red.instance, red.constraints, sub_labels, x0c, Mc,
                         trace + ((labels[j], side),))


def _facets(cons: SlabConstraints):
    for j in range(cons.m):
        yield j, LOWER
        if cons.upper[j] != cons.lower[j]:
            yield j, UPPER


def _push(cands, c):
    if c is None:
        return
    for v, x, _ in cands:
        if abs(v - c[0]) <= DUP_VALUE * max(1.0, abs(v)) and np.linalg.norm(x - c[1]) <= DUP_POINT:
            return
    cands.append(c)


def solve_constrained(inst: PrsInstance, cons: SlabConstraints,
                      max_workers: int | None = None) -> ConstrainedSolution:
    """Global minimizer of ``inst`` (p = 4) over ``l <= A x <= u``.

    Parameters
    ----------
    inst : PrsInstance
        Must have ``p == 4``.
    cons : SlabConstraints
        At most 12 slabs.
    max_workers : int, optional
        Evaluate the top-level facet branches on a thread pool.  Each branch
        keeps its own memo; the results are min-reduced.

    Raises
    ------
    Infeasible
        When the polyhedron is empty.
    CapExceeded
        When more than 12 slabs are given.
    """
    if inst.p != 4.0:
        raise InvalidInstance("constrained solving is only supported for p = 4")
    if cons.m > MAX_M:
        raise CapExceeded(f"m = {cons.m} exceeds the cap of {MAX_M}")
    if cons.m and cons.rows.shape[1] != inst.n:
        raise InvalidInstance("constraint rows do not match the dimension of H")
    if feasible_point(cons, inst.n) is None:
        raise Infeasible("the slab system has no feasible point")

    n = inst.n
    x0 = np.zeros(n)
    M = np.eye(n)
    labels = list(range(cons.m))
    search = _Search(inst, cons)

    if cons.m == 0 or not max_workers or max_workers <= 1:
        best = search.node(inst, cons, labels, x0, M, ())
        count = len(search.memo) - 1
    else:
        best, count = _solve_parallel(inst, cons, labels, max_workers)
    if best is None:
        raise Infeasible("no feasible candidate survived the facet recursion")
    value, x, trace = best
    return ConstrainedSolution(point=x, value=value, facet_trace=list(trace), subproblems=count)


def _solve_parallel(inst, cons, labels, max_workers):
    n = inst.n
    x0, M = np.zeros(n), np.eye(n)
    top = _Search(inst, cons)
    sol = solve_global(inst)
    w = intersect_global_set(sol, cons)
    if w is not None and top.candidate(w, ()) is not None:
        return top.candidate(w, ()), 0
    cands = []
    loc = solve_local_nonglobal(inst, spec=sol.spectrum)
    if loc.exists and cons.is_strictly_interior(
            loc.point, INTERIOR_MARGIN * (1.0 + float(np.linalg.norm(loc.point)))):
        _push(cands, top.candidate(loc.point, ()))

    def branch(js):
        s = _Search(inst, cons)
        return s.child(inst, cons, labels, x0, M, (), *js), s.memo.keys()

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        results = list(pool.map(branch, list(_facets(cons))))
    keys = set()
    for c, ks in results:
        _push(cands, c)
        keys.update(ks)
    best = min(cands, key=lambda c: c[0]) if cands else None
    return best, len(keys)
