"""Secular function h(t) = sum c_i^2/(sigma t + alpha_i)^2 - t^{2/(p-2)} and its roots.

A root t of h gives the stationary point x_i = -c_i / (sigma t + alpha_i)
with ||x||^{p-2} = t.  Two intervals matter:

* ``(max(-alpha_1/sigma, 0), inf)`` where h is strictly decreasing and the
  unique root gives the global minimizer;
* ``(max(-alpha_2/sigma, 0), -alpha_1/sigma)`` where
  ``log ||(sigma t I + H)^{-1} c||^2 - (2/(p-2)) log t`` is strictly convex,
  so h has at most two roots there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import NegativeT, NoRoot, PoleHit, ZeroT

TAU_ROOT = 1e-12
TAU_C_REL = 1e-11
EPS_INT_REL = 1e-12
_MAX_BISECT = 400
_MAX_NEWTON = 500


@dataclass(frozen=True, eq=False)
class SecularContext:
    alphas: np.ndarray
    c_rot: np.ndarray
    sigma: float
    p_exp: float
    tau_c: float | None = None

    def __post_init__(self):
        alphas = np.asarray(self.alphas, dtype=float).reshape(-1)
        c = np.asarray(self.c_rot, dtype=float).reshape(-1)
        if alphas.shape != c.shape:
            raise ValueError("alphas and c_rot must have equal length")
        if not self.sigma > 0 or not self.p_exp > 2:
            raise ValueError("need sigma > 0 and p > 2")
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "c_rot", c)
        if self.tau_c is None:
            object.__setattr__(self, "tau_c", TAU_C_REL * float(np.linalg.norm(c)))

    @classmethod
    def from_spectrum(cls, spec, c_rot=None) -> "SecularContext":
        c = spec.c_rot if c_rot is None else c_rot
        return cls(spec.alphas, c, spec.sigma, spec.p)

    @property
    def q(self) -> float:
        """Exponent 2/(p-2) on t."""
        return 2.0 / (self.p_exp - 2.0)


class SecularRoot(NamedTuple):
    t: float
    h_prime: float

    @property
    def sign(self) -> int:
        return int(np.sign(self.h_prime))


def _t_pow(t: float, p: float, q: float) -> float:
    # t^q with the common exponents special-cased
    if t == 0.0:
        return 0.0
    if p == 4.0:
        return t
    if p == 3.0:
        return t * t
    return math.exp(q * math.log(t))


def _terms(ctx: SecularContext, t: float):
    """Active numerators c_i^2 and denominators sigma t + alpha_i.

    Returns ``None`` for the denominators when a pole with a
    non-negligible numerator is hit.
    """
    if t < 0:
        raise NegativeT(f"t must be nonnegative, got {t}")
    d = ctx.sigma * t + ctx.alphas
    c = ctx.c_rot
    at_pole = d == 0.0
    keep = c != 0.0
    if np.any(at_pole & keep):
        if np.any(at_pole & (np.abs(c) > ctx.tau_c)):
            return c, None
        keep &= ~at_pole
    return c[keep] ** 2, d[keep]


def eval_h(ctx: SecularContext, t: float) -> float:
    c2, d = _terms(ctx, t)
    if d is None:
        raise PoleHit(f"sigma*t + alpha_i = 0 at t = {t}")
    return float(np.sum(c2 / d**2)) - _t_pow(t, ctx.p_exp, ctx.q)


def eval_h_prime(ctx: SecularContext, t: float) -> float:
    c2, d = _terms(ctx, t)
    if d is None:
        raise PoleHit(f"sigma*t + alpha_i = 0 at t = {t}")
    q = ctx.q
    e = q - 1.0  # (4 - p)/(p - 2)
    if t == 0.0:
        if e < 0:
            raise ZeroT("h' is unbounded at t = 0 for p > 4")
        tail = q if e == 0 else 0.0
    else:
        tail = q * (1.0 if e == 0 else math.exp(e * math.log(t)))
    return float(-np.sum(2.0 * ctx.sigma * c2 / d**3)) - tail


def eval_p(ctx: SecularContext, t: float) -> float:
    """log ||(sigma t I + H)^{-1} c||^2 - q log t; same roots as h for t > 0."""
    if t <= 0:
        raise NegativeT("p(t) needs t > 0")
    c2, d = _terms(ctx, t)
    if d is None:
        raise PoleHit(f"sigma*t + alpha_i = 0 at t = {t}")
    return math.log(float(np.sum(c2 / d**2))) - ctx.q * math.log(t)


def eval_p_prime(ctx: SecularContext, t: float) -> float:
    if t <= 0:
        raise NegativeT("p(t) needs t > 0")
    c2, d = _terms(ctx, t)
    if d is None:
        raise PoleHit(f"sigma*t + alpha_i = 0 at t = {t}")
    phi = float(np.sum(c2 / d**2))
    dphi = float(-np.sum(2.0 * ctx.sigma * c2 / d**3))
    return dphi / phi - ctx.q / t


def _h_or_inf(ctx: SecularContext, t: float) -> float:
    c2, d = _terms(ctx, t)
    if d is None:
        return math.inf
    with np.errstate(over="ignore", divide="ignore"):
        return float(np.sum(c2 / d**2)) - _t_pow(t, ctx.p_exp, ctx.q)


def global_root(ctx: SecularContext, tol: float = TAU_ROOT) -> float:
    """Unique root of h on ``(max(-alpha_1/sigma, 0), inf)``.

    Safeguarded Newton: each iterate updates a sign bracket and a Newton
    step that leaves the bracket is replaced by bisection.
    """
    a = max(-float(np.min(ctx.alphas)) / ctx.sigma, 0.0)
    ha = _h_or_inf(ctx, a)
    if not ha > 0:
        raise NoRoot(f"h({a}) = {ha} is not positive; no root to the right")
    width = max(1.0, a)
    b = a + width
    for _ in range(2100):
        if _h_or_inf(ctx, b) < 0:
            break
        width *= 2.0
        b = a + width
    else:
        raise NoRoot("failed to bracket the root of h")

    best_t, best_h = b, _h_or_inf(ctx, b)
    t = b
    step_old = b - a
    for _ in range(_MAX_NEWTON):
        ht = eval_h(ctx, t)
        if abs(ht) < abs(best_h):
            best_t, best_h = t, ht
        if abs(ht) <= tol * (1.0 + t):
            return t
        if ht > 0:
            a = t
        else:
            b = t
        if b - a <= 4 * np.finfo(float).eps * max(1.0, b):
            break
        dh = eval_h_prime(ctx, t)
        tn = t - ht / dh if dh < 0 else math.nan
        # bisect when Newton leaves the bracket or is not halving its step
        if not (a < tn < b) or abs(tn - t) > 0.5 * abs(step_old):
            tn = 0.5 * (a + b)
        step_old = tn - t
        t = tn
    if b - a <= 4 * np.finfo(float).eps * max(1.0, b) or abs(best_h) <= 1e3 * tol * (1.0 + best_t):
        # bracket at float resolution: t is as accurate as it gets even if
        # |h| stays large next to a pole
        return best_t
    raise NoRoot(f"secular iteration did not converge (|h| = {abs(best_h):.3e})")


def _bisect(f, a: float, b: float, fa_positive: bool) -> float:
    """Shrink [a, b] around a sign change of f down to adjacent floats."""
    fa = fb = None
    for _ in range(_MAX_BISECT):
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        fm = f(m)
        if (fm > 0) == fa_positive:
            a, fa = m, fm
        else:
            b, fb = m, fm
    fa = f(a) if fa is None else fa
    fb = f(b) if fb is None else fb
    return a if abs(fa) <= abs(fb) else b


def local_interval(ctx: SecularContext) -> tuple[float, float]:
    """Open interval ``(max(-alpha_2/sigma, 0), -alpha_1/sigma)``."""
    alphas = np.sort(ctx.alphas)
    right = -alphas[0] / ctx.sigma
    left = max(-alphas[1] / ctx.sigma, 0.0) if alphas.size > 1 else 0.0
    return left, right


def local_roots(ctx: SecularContext) -> list[SecularRoot]:
    """All roots of h on the local-nonglobal interval, with h' at each.

    The convex surrogate p(t) is minimized first (bisection on its
    increasing derivative); roots are then bracketed on either side of
    the minimizer.  The left root has h' <= 0, the right one h' >= 0.
    """
    alphas = ctx.alphas
    if alphas.size > 1 and not np.all(np.diff(alphas) >= 0):
        raise ValueError("alphas must be sorted ascending")
    if alphas[0] >= 0 or (alphas.size > 1 and alphas[1] <= alphas[0]):
        return []
    if abs(ctx.c_rot[0]) <= ctx.tau_c:
        return []
    left, right = local_interval(ctx)
    eps = EPS_INT_REL * max(1.0, right)
    lo, hi = left + eps, right - eps
    if not lo < hi:
        return []

    def pp(t):
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            try:
                return eval_p_prime(ctx, t)
            except PoleHit:
                return -math.inf if t < 0.5 * (lo + hi) else math.inf

    if pp(lo) >= 0:
        t_min = lo
    elif pp(hi) <= 0:
        t_min = hi
    else:
        t_min = _bisect(pp, lo, hi, fa_positive=False)

    h = lambda t: _h_or_inf(ctx, t)  # noqa: E731
    h_min = h(t_min)
    roots: list[SecularRoot] = []
    if h_min > 0:
        return roots
    if h_min == 0:
        return [SecularRoot(t_min, eval_h_prime(ctx, t_min))]
    if t_min > lo and h(lo) > 0:
        r = _bisect(h, lo, t_min, fa_positive=True)
        roots.append(SecularRoot(r, eval_h_prime(ctx, r)))
    if h(hi) > 0:
        r = _bisect(h, t_min, hi, fa_positive=False)
        roots.append(SecularRoot(r, eval_h_prime(ctx, r)))
    return roots
