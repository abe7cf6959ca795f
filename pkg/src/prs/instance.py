"""Problem data for min 1/2 x'Hx + c'x + (sigma/p) ||x||^p and its derivatives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidInstance, NonSymmetric

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PrsInstance:
    """A p-regularized subproblem.

    ``H`` is symmetrized on construction (after the symmetry check) so that
    downstream eigensolvers see an exactly symmetric matrix.
    """

    H: np.ndarray
    c: np.ndarray
    sigma: float
    p: float

    def __post_init__(self):
        H = np.array(self.H, dtype=float)
        c = np.array(self.c, dtype=float).reshape(-1)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise DimensionMismatch(f"H must be square, got shape {H.shape}")
        n = H.shape[0]
        if n < 1:
            raise InvalidInstance("n must be at least 1")
        if c.shape != (n,):
            raise DimensionMismatch(f"c has length {c.size}, expected {n}")
        if not (np.all(np.isfinite(H)) and np.all(np.isfinite(c))):
            raise InvalidInstance("H and c must be finite")
        scale = max(1.0, float(np.max(np.abs(H))))
        if np.max(np.abs(H - H.T)) > SYMMETRY_TOL * scale:
            raise NonSymmetric("H is not symmetric")
        sigma = float(self.sigma)
        p = float(self.p)
        if not sigma > 0:
            raise InvalidInstance(f"sigma must be positive, got {sigma}")
        if not p > 2:
            raise InvalidInstance(f"p must exceed 2, got {p}")
        H = 0.5 * (H + H.T)
        H.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.H.shape[0]

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x)
        return float(0.5 * x @ self.H @ x + self.c @ x + self.sigma / self.p * r**self.p)

    def gradient(self, x) -> np.ndarray:
        """(H + sigma ||x||^{p-2} I) x + c."""
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x)
        return self.H @ x + self.sigma * r ** (self.p - 2) * x + self.c

    def hessian(self, x) -> np.ndarray:
        """H + sigma ||x||^{p-2} I + sigma (p-2) ||x||^{p-4} x x'.

        For p < 4 the rank-one term is undefined at x = 0; it is dropped
        there (its limit along any ray is unbounded, callers should avoid it).
        """
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x)
        Q = self.H + self.sigma * r ** (self.p - 2) * np.eye(self.n)
        if r > 0:
            Q = Q + self.sigma * (self.p - 2) * r ** (self.p - 4) * np.outer(x, x)
        return Q

    def objective_batch(self, X: np.ndarray) -> np.ndarray:
        """Objective values for the rows of ``X``."""
        X = np.asarray(X, dtype=float)
        sq = np.einsum("ij,ij->i", X, X)
        quad = 0.5 * np.einsum("ij,jk,ik->i", X, self.H, X)
        return quad + X @ self.c + self.sigma / self.p * sq ** (self.p / 2)
