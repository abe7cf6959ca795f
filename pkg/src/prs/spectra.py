"""Diagonal frame of an instance: eigenvalues of H, eigenbasis, rotated c."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, EigFailure
from .instance import PrsInstance

TAU_TIE = 1e-9


@dataclass(frozen=True, eq=False)
class Spectrum:
    alphas: np.ndarray
    basis: np.ndarray
    c_rot: np.ndarray
    multiplicity_k: int
    sigma: float
    p: float

    @property
    def n(self) -> int:
        return self.alphas.size

    @property
    def scale(self) -> float:
        return max(1.0, abs(self.alphas[0]), abs(self.alphas[-1]))

    @property
    def c_norm(self) -> float:
        return float(np.linalg.norm(self.c_rot))

    def block_norm(self) -> float:
        """Norm of the component of c in the alpha_1 eigenspace."""
        return float(np.linalg.norm(self.c_rot[: self.multiplicity_k]))

    def to_rotated(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DimensionMismatch(f"expected length {self.n}, got {x.shape}")
        return self.basis.T @ x

    def diagonal_objective(self, y) -> float:
        y = np.asarray(y, dtype=float)
        r = np.linalg.norm(y)
        return float(0.5 * np.sum(self.alphas * y * y) + self.c_rot @ y + self.sigma / self.p * r**self.p)


def decompose(inst: PrsInstance, tau_tie: float = TAU_TIE) -> Spectrum:
    """Eigendecompose ``inst.H`` and rotate ``c`` into the eigenbasis.

    Eigenvalues come back ascending (LAPACK ``syevd`` order); ties keep the
    solver's order.  ``multiplicity_k`` counts eigenvalues within
    ``tau_tie * max(1, |alpha_1|, |alpha_n|)`` of the smallest one.
    """
    try:
        alphas, U = scipy.linalg.eigh(inst.H)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigFailure(str(exc)) from exc
    order = np.argsort(alphas, kind="stable")
    alphas = np.ascontiguousarray(alphas[order])
    U = np.ascontiguousarray(U[:, order])
    scale = max(1.0, abs(alphas[0]), abs(alphas[-1]))
    k = int(np.count_nonzero(alphas - alphas[0] <= tau_tie * scale))
    c_rot = U.T @ inst.c
    for a in (alphas, U, c_rot):
        a.setflags(write=False)
    return Spectrum(alphas=alphas, basis=U, c_rot=c_rot, multiplicity_k=k,
                    sigma=inst.sigma, p=inst.p)


def to_original(spec: Spectrum, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (spec.n,):
        raise DimensionMismatch(f"expected length {spec.n}, got {y.shape}")
    return spec.basis @ y
