"""The local-nonglobal minimizer of the p-regularized subproblem.

There is at most one.  It exists iff h has a root t with h'(t) > 0 inside
``(max(-alpha_2/sigma, 0), -alpha_1/sigma)``; then
x = -(sigma t I + H)^{-1} c.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import CertificateFailure, GenericityViolated
from .global_solver import TAU_PSD, TAU_SIGN
from .instance import PrsInstance
from .secular import SecularContext, local_roots
from .spectra import TAU_TIE, Spectrum, decompose

TAU_DERIV = 1e-12


class Reason(str, Enum):
    FOUND = "found"
    CONVEX = "alpha1_nonnegative"          # alpha_1 >= 0
    REPEATED = "alpha1_repeated"           # alpha_1 = alpha_2
    ORTHOGONAL = "c_orthogonal_alpha1"     # c has no alpha_1 eigen-component
    NO_ROOT = "no_increasing_root"
    DEGENERATE = "degenerate_root"         # root with 0 <= h' <= tau_deriv


@dataclass(frozen=True, eq=False)
class LocalNonglobal:
    exists: bool
    reason: Reason
    point: np.ndarray | None = None
    point_rot: np.ndarray | None = None
    t_val: float | None = None
    value: float | None = None
    hess_min_eig: float | None = None
    h_prime: float | None = None

    @property
    def fast_path(self) -> bool:
        return self.reason in (Reason.CONVEX, Reason.REPEATED, Reason.ORTHOGONAL)


def solve_local_nonglobal(inst: PrsInstance, spec: Spectrum | None = None,
                          tol_psd: float = TAU_PSD) -> LocalNonglobal:
    """Find the local-nonglobal minimizer of ``inst`` if there is one.

    Returns ``exists=False`` with a ``reason`` naming the rejection branch.
    Raises ``CertificateFailure`` when a qualifying root produces a point whose
    Hessian is not numerically positive definite.
    """
    if spec is None:
        spec = decompose(inst)
    alphas = spec.alphas
    scale = spec.scale
    if alphas[0] >= -tol_psd * scale:
        return LocalNonglobal(False, Reason.CONVEX)
    if spec.n > 1 and alphas[1] - alphas[0] <= TAU_TIE * scale:
        return LocalNonglobal(False, Reason.REPEATED)
    tau_c = 1e-11 * spec.c_norm
    if spec.block_norm() <= tau_c:
        return LocalNonglobal(False, Reason.ORTHOGONAL)

    ctx = SecularContext.from_spectrum(spec)
    rising = [r for r in local_roots(ctx) if r.h_prime >= 0]
    if not rising:
        return LocalNonglobal(False, Reason.NO_ROOT)
    root = max(rising, key=lambda r: r.t)
    if root.h_prime <= TAU_DERIV * (1.0 + abs(root.t)):
        return LocalNonglobal(False, Reason.DEGENERATE, t_val=root.t, h_prime=root.h_prime)

    y = -spec.c_rot / (spec.sigma * root.t + alphas)
    x = spec.basis @ y
    lam = float(np.linalg.eigvalsh(inst.hessian(x))[0])
    if not lam > 0:
        raise CertificateFailure(
            f"root t={root.t:.17g} has h'={root.h_prime:.3e} > 0 but the Hessian "
            f"minimum eigenvalue is {lam:.3e}")
    return LocalNonglobal(True, Reason.FOUND, point=x, point_rot=y, t_val=root.t,
                          value=inst.objective(x), hess_min_eig=lam, h_prime=root.h_prime)


def check_local_sign_structure(spec: Spectrum, x_rot) -> bool:
    """c_1 x_1 > 0 and c_i x_i <= 0 for i >= 2, in the eigenbasis."""
    x_rot = np.asarray(x_rot, dtype=float)
    c = spec.c_rot
    tau = TAU_SIGN * spec.c_norm * float(np.linalg.norm(x_rot))
    return bool(c[0] * x_rot[0] > 0 and np.all(c[1:] * x_rot[1:] <= tau))


class CriticalPoint(NamedTuple):
    t: float
    x: np.ndarray
    kind: str          # global_min | local_nonglobal | saddle | local_max
    hess_min_eig: float


def enumerate_critical_points_p4(inst: PrsInstance, max_n: int = 8) -> list[CriticalPoint]:
    """All stationary points of a generic p = 4 instance, classified.

    Clears denominators in the secular equation to get the degree 2n+1
    polynomial ``t prod(sigma t + alpha_i)^2 - sum_j c_j^2 prod_{i!=j}
    (sigma t + alpha_i)^2``, takes its positive real roots from the
    companion matrix, polishes each by Newton on the rational form, and
    classifies x(t) by the spectrum of the Hessian.
    """
    if inst.p != 4.0:
        raise GenericityViolated("enumeration needs p = 4")
    n = inst.n
    if n > max_n:
        raise GenericityViolated(f"n = {n} exceeds {max_n}")
    alphas, U = np.linalg.eigh(inst.H)
    c = U.T @ inst.c
    scale = max(1.0, float(np.max(np.abs(alphas))))
    if n > 1 and np.min(np.diff(alphas)) <= 1e-9 * scale:
        raise GenericityViolated("eigenvalues of H are not distinct")
    if np.min(np.abs(c)) <= 1e-11 * max(np.linalg.norm(c), 1e-300):
        raise GenericityViolated("c has a zero component in the eigenbasis")
    sigma = inst.sigma
    P = np.polynomial.Polynomial

    lin = [P([a, sigma]) for a in alphas]
    full = P([1.0])
    for f in lin:
        full = full * f * f
    poly = P([0.0, 1.0]) * full
    for j in range(n):
        others = P([1.0])
        for i, f in enumerate(lin):
            if i != j:
                others = others * f * f
        poly = poly - c[j] ** 2 * others
    raw = np.roots(poly.coef[::-1])

    def h(t):
        return float(np.sum(c**2 / (sigma * t + alphas) ** 2) - t)

    def dh(t):
        return float(-np.sum(2 * sigma * c**2 / (sigma * t + alphas) ** 3) - 1.0)

    ts: list[float] = []
    for r in raw:
        if abs(r.imag) > 1e-6 * max(1.0, abs(r.real)) or r.real <= 0:
            continue
        t = float(r.real)
        for _ in range(50):
            step = h(t) / dh(t)
            t_new = t - step
            if not np.isfinite(t_new) or t_new <= 0:
                break
            t = t_new
            if abs(step) <= 4 * np.finfo(float).eps * max(1.0, t):
                break
        if t <= 0 or np.any(sigma * t + alphas == 0):
            continue
        if abs(h(t)) > 1e-6 * (1.0 + t):
            continue
        if all(abs(t - s) > 1e-10 * max(1.0, t) for s in ts):
            ts.append(t)

    out = []
    for t in sorted(ts):
        y = -c / (sigma * t + alphas)
        x = U @ y
        ev = np.linalg.eigvalsh(inst.hessian(x))
        if ev[0] > 0:
            kind = "global_min" if sigma * t + alphas[0] >= 0 else "local_nonglobal"
        elif ev[-1] < 0:
            kind = "local_max"
        else:
            kind = "saddle"
        out.append(CriticalPoint(t, x, kind, float(ev[0])))
    return out
