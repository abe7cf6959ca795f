"""Global minimizers of min 1/2 x'Hx + c'x + (sigma/p) ||x||^p.

x is a global minimizer iff (H + sigma ||x||^{p-2} I) x = -c and
H + sigma ||x||^{p-2} I is positive semidefinite.  All global minimizers
share one norm, and the set is a single point unless c has no component in
the alpha_1 eigenspace and the reduced secular function is nonpositive at
-alpha_1/sigma; then it is a sphere in that eigenspace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceFailure
from .instance import PrsInstance
from .secular import TAU_ROOT, SecularContext, eval_h, global_root
from .spectra import Spectrum, decompose

TAU_KKT = 1e-8
TAU_PSD = 1e-8
TAU_SIGN = 1e-10
RADIUS_CLAMP = 1e-12


class Variant(str, Enum):
    UNIQUE_POINT = "UniquePoint"
    SPHERE = "Sphere"


@dataclass(frozen=True, eq=False)
class GlobalSolution:
    variant: Variant
    t_star: float
    value: float
    point: np.ndarray | None = None
    sphere_center: np.ndarray | None = None
    sphere_radius: float | None = None
    sphere_basis: np.ndarray | None = None
    spectrum: Spectrum | None = field(default=None, repr=False)
    # the branch of the case analysis that produced this solution
    case: str = ""

    @property
    def is_sphere(self) -> bool:
        return self.variant is Variant.SPHERE

    def representative(self) -> np.ndarray:
        """One concrete global minimizer."""
        if not self.is_sphere:
            return self.point
        return self.sphere_center + self.sphere_radius * self.sphere_basis[:, 0]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """``size`` minimizers drawn uniformly from the solution set (rows)."""
        if not self.is_sphere:
            return np.tile(self.point, (size, 1))
        k = self.sphere_basis.shape[1]
        u = rng.standard_normal((size, k))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        return self.sphere_center + self.sphere_radius * u @ self.sphere_basis.T

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.representative()))


def solve_global(inst: PrsInstance, tol_root: float = TAU_ROOT,
                 spec: Spectrum | None = None) -> GlobalSolution:
    """Return the full set of global minimizers of ``inst``.

    Parameters
    ----------
    inst : PrsInstance
    tol_root : float
        Residual tolerance ``|h(t)| <= tol_root * (1 + t)`` for the secular root.
    spec : Spectrum, optional
        Precomputed eigendecomposition of ``inst.H``.

    Returns
    -------
    GlobalSolution
        ``UniquePoint`` or ``Sphere`` (center, radius, orthonormal basis of the
        alpha_1 eigenspace), both in the original coordinates.
    """
    if spec is None:
        spec = decompose(inst)
    alphas, c_rot, sigma, p = spec.alphas, spec.c_rot, spec.sigma, spec.p
    k = spec.multiplicity_k
    a1 = float(alphas[0])
    tau_c = 1e-11 * spec.c_norm

    if spec.block_norm() > tau_c:
        ctx = SecularContext(alphas, c_rot, sigma, p)
        t = global_root(ctx, tol=tol_root)
        if abs(eval_h(ctx, t)) > tol_root * (1.0 + t):
            return _near_pole(inst, spec, t, ctx.q)
        return _unique(inst, spec, t, c_rot, case="easy")

    # c has no component in the alpha_1 eigenspace: reduced secular function
    c_red = np.array(c_rot)
    c_red[:k] = 0.0
    ctx = SecularContext(alphas, c_red, sigma, p)
    left = max(-a1 / sigma, 0.0)
    h_left = eval_h(ctx, left)
    if a1 > 0 or h_left > tol_root * (1.0 + left):
        if h_left <= 0.0:
            # only c = 0 with alpha_1 > 0 lands here: the minimizer is the origin
            return _unique(inst, spec, 0.0, c_red, case="zero")
        t = global_root(ctx, tol=tol_root)
        return _unique(inst, spec, t, c_red, case="reduced")

    t = left
    tail = np.zeros_like(c_red)
    tail[k:] = -c_red[k:] / (alphas[k:] - a1)
    rad2 = -h_left
    if abs(rad2) <= RADIUS_CLAMP * max(1.0, left ** ctx.q):
        rad2 = max(rad2, 0.0)
    radius = math.sqrt(max(rad2, 0.0))
    center = spec.basis @ tail
    if a1 == 0.0 and radius == 0.0:
        return _unique(inst, spec, 0.0, c_red, case="zero")
    basis = np.array(spec.basis[:, :k])
    x = center + radius * basis[:, 0]
    return GlobalSolution(
        variant=Variant.SPHERE, t_star=t, value=inst.objective(x),
        sphere_center=center, sphere_radius=radius, sphere_basis=basis,
        spectrum=spec, case="hard",
    )


def _unique(inst, spec, t, c_rot, case) -> GlobalSolution:
    d = spec.sigma * t + spec.alphas
    y = np.zeros_like(c_rot)
    nz = c_rot != 0.0
    y[nz] = -c_rot[nz] / d[nz]
    x = spec.basis @ y
    return GlobalSolution(variant=Variant.UNIQUE_POINT, t_star=float(t),
                          value=inst.objective(x), point=x, spectrum=spec, case=case)


def _near_pole(inst, spec, t, q) -> GlobalSolution:
    # sigma t + alpha_1 is at rounding level: the alpha_1 block of x points
    # along -c and its length completes ||x||^2 = t^q
    k = spec.multiplicity_k
    c = spec.c_rot
    y = np.zeros_like(c)
    y[k:] = -c[k:] / (spec.sigma * t + spec.alphas[k:])
    rest = max(t**q - float(y[k:] @ y[k:]), 0.0)
    cb = c[:k]
    y[:k] = -cb / np.linalg.norm(cb) * np.sqrt(rest)
    x = spec.basis @ y
    return GlobalSolution(variant=Variant.UNIQUE_POINT, t_star=float(t),
                          value=inst.objective(x), point=x, spectrum=spec, case="near_hard")


def check_sign_structure(spec: Spectrum, x_rot) -> bool:
    """c_i x_i <= 0 in the eigenbasis (up to 1e-10 ||c|| ||x||)."""
    x_rot = np.asarray(x_rot, dtype=float)
    tau = TAU_SIGN * spec.c_norm * float(np.linalg.norm(x_rot))
    return bool(np.all(spec.c_rot * x_rot <= tau))


def certify(inst: PrsInstance, x, tol_kkt: float = TAU_KKT, tol_psd: float = TAU_PSD) -> dict:
    """Stationarity residual and PSD margin of H + sigma ||x||^{p-2} I at ``x``."""
    x = np.asarray(x, dtype=float)
    resid = float(np.linalg.norm(inst.gradient(x)))
    shift = inst.sigma * np.linalg.norm(x) ** (inst.p - 2)
    ev = np.linalg.eigvalsh(inst.H)
    lam = float(ev[0] + shift)
    scale = max(1.0, abs(ev[0]), abs(ev[-1]))
    return {
        "kkt_residual": resid,
        "kkt_ok": resid <= tol_kkt * (1.0 + float(np.linalg.norm(inst.c))),
        "psd_margin": lam,
        "psd_ok": lam >= -tol_psd * scale,
    }


def _convex_objective(z, abs_c, alphas, sigma, p):
    return float(-abs_c @ np.sqrt(z) + 0.5 * alphas @ z + sigma / p * np.sum(z) ** (p / 2))


def solve_global_convex_oracle(inst: PrsInstance, tol: float = 1e-15,
                               max_sweeps: int = 1_000_000) -> float:
    """Optimal value through the hidden-convexity reformulation.

    Minimizes ``-sum |c_i| sqrt(z_i) + 1/2 sum alpha_i z_i
    + (sigma/p) (sum z_i)^{p/2}`` over ``z >= 0`` by exact cyclic
    coordinate descent.  Only meant as an independent cross-check.
    """
    spec = decompose(inst)
    abs_c = np.abs(spec.c_rot)
    alphas = np.array(spec.alphas)
    sigma, p = inst.sigma, inst.p
    n = alphas.size
    z = np.zeros(n)
    s = 0.0
    f_old = 0.0
    e = p / 2 - 1

    for _ in range(max_sweeps):
        for i in range(n):
            rest = max(s - z[i], 0.0)

            def dfi(zi, i=i, rest=rest):
                # derivative of the objective in z_i, increasing in z_i
                lin = 0.5 * alphas[i] + 0.5 * sigma * (rest + zi) ** e
                if abs_c[i] == 0.0:
                    return lin
                if zi == 0.0:
                    return -math.inf
                return lin - 0.5 * abs_c[i] / math.sqrt(zi)

            if dfi(0.0) >= 0:
                zi = 0.0
            else:
                hi = max(z[i], 1.0)
                while dfi(hi) < 0:
                    hi *= 2.0
                zi = brentq(dfi, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500) \
                    if abs_c[i] == 0.0 else _brent_sqrt(dfi, hi)
            s = rest + zi
            z[i] = zi
        f = _convex_objective(z, abs_c, alphas, sigma, p)
        if abs(f_old - f) <= tol * max(1.0, abs(f)):
            return f
        f_old = f
    raise ConvergenceFailure("coordinate descent hit the sweep cap")


def _brent_sqrt(dfi, hi):
    # root in z_i where the derivative blows up at 0; bracket away from 0
    lo = hi
    while dfi(lo) >= 0:
        lo *= 0.5
        if lo == 0.0:
            return 0.0
    return brentq(dfi, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
