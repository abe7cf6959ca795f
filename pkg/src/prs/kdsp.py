"""k-dispersion-sum problem and its quartic-penalty embedding as a p = 4 instance.

KDSP: d* = min -x'Dx over x in {0,1}^n with e'x = k.  The embedding keeps
the linear constraints, relaxes x to [0,1]^n and adds theta (k - x'x)^2,
which on e'x = k equals theta (x'(e - x))^2 and vanishes exactly at the
binary points.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .constrained import SlabConstraints
from .errors import InvalidInstance, InvalidK, TooLarge
from .instance import PrsInstance

MAX_BRUTE_N = 20


@dataclass(frozen=True, eq=False)
class KdspInstance:
    D: np.ndarray
    k: int

    def __post_init__(self):
        D = np.asarray(self.D)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise InvalidInstance("D must be square")
        if not np.all(np.equal(np.mod(D, 1), 0)):
            raise InvalidInstance("D must have integer entries")
        D = D.astype(np.int64)
        if not np.array_equal(D, D.T):
            raise InvalidInstance("D must be symmetric")
        if np.any(np.diag(D) != 0):
            raise InvalidInstance("D must have a zero diagonal")
        if not 1 <= int(self.k) <= D.shape[0]:
            raise InvalidK(f"k = {self.k} outside 1..{D.shape[0]}")
        D.setflags(write=False)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "k", int(self.k))

    @property
    def n(self) -> int:
        return self.D.shape[0]


@dataclass(frozen=True, eq=False)
class KdspReduction:
    instance: PrsInstance
    constraints: SlabConstraints
    theta: float
    constant: float  # theta k^2, to add to the reduced optimal value


def default_theta(kd: KdspInstance) -> float:
    return 8.0 * kd.k**2 * float(np.max(np.abs(kd.D))) + 1.0


def kdsp_reduce(kd: KdspInstance, theta: float | None = None) -> KdspReduction:
    """-x'Dx + theta (k - x'x)^2 = 1/2 x'Hx + (sigma/4)||x||^4 + theta k^2.

    H = -2 (D + 2 theta k I), c = 0, sigma = 4 theta; constraints are the
    unit box on every coordinate plus the equality slab e'x = k.
    """
    if theta is None:
        theta = default_theta(kd)
    theta = float(theta)
    if not theta > 0:
        raise InvalidInstance("theta must be positive")
    n, k = kd.n, kd.k
    H = -2.0 * (kd.D.astype(float) + 2.0 * theta * k * np.eye(n))
    inst = PrsInstance(H, np.zeros(n), 4.0 * theta, 4.0)
    rows = np.vstack([np.eye(n), np.ones((1, n))])
    lower = np.concatenate([np.zeros(n), [k]])
    upper = np.concatenate([np.ones(n), [k]])
    return KdspReduction(inst, SlabConstraints(rows, lower, upper), theta, theta * k * k)


def penalized_objective(kd: KdspInstance, theta: float, x) -> float:
    x = np.asarray(x, dtype=float)
    return float(-x @ kd.D @ x + theta * (kd.k - x @ x) ** 2)


def kdsp_brute(kd: KdspInstance) -> float:
    """Exact d* by enumerating all k-subsets."""
    if kd.n > MAX_BRUTE_N:
        raise TooLarge(f"n = {kd.n} exceeds {MAX_BRUTE_N}")
    D = kd.D
    best = None
    for S in itertools.combinations(range(kd.n), kd.k):
        idx = np.array(S)
        v = -int(D[np.ix_(idx, idx)].sum())
        if best is None or v < best:
            best = v
    return float(best)


def vertex_gap_bound(cons: SlabConstraints) -> float:
    """Lower bound on x'(e - x) at fractional vertices of an integer polytope.

    (d - 1)/d^2 with d = max_j ||a_j||_inf when d >= 2, else 1/2.
    """
    A = cons.rows
    if not np.all(np.equal(np.mod(A, 1), 0)):
        raise InvalidInstance("vertex gap bound needs integer rows")
    d = float(np.max(np.abs(A)))
    if d >= 2:
        return (d - 1.0) / d**2
    return 0.5
