import math

import numpy as np
import pytest

from prs.errors import NegativeT, NoRoot, PoleHit, ZeroT
from prs.secular import (TAU_ROOT, SecularContext, eval_h, eval_h_prime, eval_p, eval_p_prime, global_root,
                         local_interval, local_roots)


def ctx(alphas, c, sigma=1.0, p=4.0):
    return SecularContext(np.array(alphas, float), np.array(c, float), sigma, p)


def real_positive_roots(coeffs):
    r = np.roots(coeffs)
    return np.sort(r[(np.abs(r.imag) < 1e-9) & (r.real > 0)].real)


def random_ctx(rng, n=None, p=None):
    n = int(rng.integers(1, 6)) if n is None else n
    p = float(rng.choice([3.0, 4.0, 5.5])) if p is None else p
    alphas = np.sort(rng.uniform(-3, 3, n))
    c = rng.standard_normal(n)
    c = np.sign(c) * np.maximum(np.abs(c), 0.05)
    return ctx(alphas, c, rng.uniform(0.3, 2.0), p)


# ---------------------------------------------------------------- eval_h

def test_h_direct_arithmetic():
    assert eval_h(ctx([-1.0], [1.0]), 2.0) == pytest.approx(-1.0, abs=1e-15)


@pytest.mark.parametrize("p", [3.0, 4.0, 5.5])
def test_h_zero_numerators(p):
    t = 1.7
    assert eval_h(ctx([-1.0, 2.0], [0.0, 0.0], p=p), t) == pytest.approx(-t ** (2 / (p - 2)), rel=1e-14)


def test_h_vanishes_at_companion_root():
    # 1/(t-1)^2 = t on (1, inf) is the root of t^3 - 2t^2 + t - 1
    roots = real_positive_roots([1.0, -2.0, 1.0, -1.0])
    t = roots[roots > 1][0]
    assert abs(eval_h(ctx([-1.0], [1.0]), t)) <= 1e-12


def test_h_pole_with_zero_numerator_is_skipped():
    c = ctx([-1.0, 1.0], [0.0, 2.0])
    assert eval_h(c, 1.0) == pytest.approx(4.0 / 4.0 - 1.0)


def test_h_pole_hit():
    with pytest.raises(PoleHit):
        eval_h(ctx([-1.0], [1.0]), 1.0)


def test_h_negative_t():
    with pytest.raises(NegativeT):
        eval_h(ctx([1.0], [1.0]), -0.5)


def test_h_at_zero_t():
    assert eval_h(ctx([2.0], [1.0], p=5.5), 0.0) == pytest.approx(0.25)


# ---------------------------------------------------------------- eval_h_prime

def test_h_prime_direct_arithmetic():
    assert eval_h_prime(ctx([-1.0], [1.0]), 2.0) == pytest.approx(-3.0, abs=1e-15)


def test_h_prime_zero_numerators_p4():
    assert eval_h_prime(ctx([1.0, 2.0], [0.0, 0.0]), 5.0) == pytest.approx(-1.0)


def test_h_prime_zero_t_large_p():
    with pytest.raises(ZeroT):
        eval_h_prime(ctx([1.0], [1.0], p=5.5), 0.0)


def test_h_prime_matches_finite_differences(rng):
    for _ in range(200):
        c = random_ctx(rng)
        lo = max(-c.alphas[0] / c.sigma, 0.0)
        t = lo + rng.uniform(0.05, 3.0)
        step = 1e-6 * max(1.0, abs(t))
        fd = (eval_h(c, t + step) - eval_h(c, t - step)) / (2 * step)
        an = eval_h_prime(c, t)
        assert abs(fd - an) <= 1e-5 * max(1.0, abs(an))


# ---------------------------------------------------------------- global_root

def test_global_root_unit_example():
    t = global_root(ctx([1.0], [2.0]))
    assert t == pytest.approx(1.0, abs=1e-12)


def test_global_root_against_companion_matrix():
    t = global_root(ctx([-1.0], [1.0]))
    roots = real_positive_roots([1.0, -2.0, 1.0, -1.0])
    assert t == pytest.approx(roots[roots > 1][0], abs=1e-12)


def test_global_root_closed_form():
    t = global_root(ctx([0.0, 1.0], [1.0, 0.0], sigma=2.0))
    assert t == pytest.approx(0.25 ** (1 / 3), rel=1e-12)


def test_global_root_certified_and_interior(rng):
    for _ in range(200):
        c = random_ctx(rng)
        t = global_root(c)
        left = max(-c.alphas[0] / c.sigma, 0.0)
        assert t > left
        assert abs(eval_h(c, t)) <= TAU_ROOT * (1 + t)


def test_global_root_misuse_raises():
    # c = 0 with alpha_1 > 0: h(0) = 0, no root to the right
    with pytest.raises(NoRoot):
        global_root(ctx([1.0], [0.0]))


def test_h_strictly_decreasing_on_global_interval(rng):
    for _ in range(100):
        c = random_ctx(rng)
        left = max(-c.alphas[0] / c.sigma, 0.0)
        t1, t2 = np.sort(left + rng.uniform(1e-3, 5.0, 2))
        if t2 - t1 < 1e-9:
            continue
        assert eval_h(c, t1) > eval_h(c, t2)


# ---------------------------------------------------------------- local_roots

def test_local_roots_double_well():
    c = ctx([-3.0], [1.0])
    roots = local_roots(c)
    oracle = real_positive_roots([1.0, -6.0, 9.0, -1.0])
    oracle = oracle[oracle < 3.0]
    assert len(roots) == 2 and oracle.size == 2
    np.testing.assert_allclose([r.t for r in roots], oracle, rtol=1e-12)
    assert roots[0].h_prime < 0 < roots[1].h_prime


def test_local_roots_orthogonal_c_has_no_usable_root():
    roots = local_roots(ctx([-1.0, 1.0], [0.0, 1.0]))
    assert not [r for r in roots if r.h_prime > 0]


def test_local_roots_guards():
    assert local_roots(ctx([1.0, 2.0], [1.0, 1.0])) == []
    assert local_roots(ctx([-1.0, -1.0], [1.0, 1.0])) == []


def test_local_interval():
    assert local_interval(ctx([-1.0, 2.0], [1.0, 1.0])) == (0.0, 1.0)
    assert local_interval(ctx([-3.0, -1.0], [1.0, 1.0], sigma=2.0)) == (0.5, 1.5)


def test_local_roots_match_polynomial_oracle(rng):
    for _ in range(200):
        c = random_ctx(rng, p=4.0)
        if c.alphas[0] >= 0:
            continue
        roots = local_roots(c)
        assert len(roots) <= 2
        lo, hi = local_interval(c)
        P = np.polynomial.Polynomial
        lin = [P([a, c.sigma]) for a in c.alphas]
        full = P([1.0])
        for f in lin:
            full = full * f * f
        poly = P([0.0, 1.0]) * full
        for j in range(c.alphas.size):
            others = P([1.0])
            for i, f in enumerate(lin):
                if i != j:
                    others = others * f * f
            poly = poly - c.c_rot[j] ** 2 * others
        r = np.roots(poly.coef[::-1])
        r = r[(np.abs(r.imag) < 1e-7) & (r.real > lo + 1e-9) & (r.real < hi - 1e-9)].real
        assert len(roots) == r.size
        for a, b in zip(sorted(x.t for x in roots), np.sort(r)):
            assert a == pytest.approx(b, rel=1e-6)


def test_two_roots_have_opposite_slopes(rng):
    seen = 0
    for _ in range(300):
        c = random_ctx(rng)
        roots = local_roots(c)
        if len(roots) == 2:
            seen += 1
            assert roots[0].h_prime <= 0 <= roots[1].h_prime
        for r in roots:
            assert abs(eval_h(c, r.t)) <= TAU_ROOT * (1 + r.t)
    assert seen > 0


def test_sign_linkage_between_h_and_p(rng):
    checked = 0
    for _ in range(300):
        c = random_ctx(rng)
        for r in local_roots(c):
            hp = eval_h_prime(c, r.t)
            pp = eval_p_prime(c, r.t)
            if abs(hp) > 1e-8:
                assert math.copysign(1, hp) == math.copysign(1, pp)
                checked += 1
    assert checked > 20


def test_p_is_convex_on_local_interval(rng):
    done = 0
    while done < 100:
        c = random_ctx(rng, n=int(rng.integers(2, 6)))
        if c.alphas[0] >= 0:
            continue
        lo, hi = local_interval(c)
        if not hi - lo > 1e-6:
            continue
        done += 1
        for _ in range(10):
            t1, t3 = np.sort(rng.uniform(lo, hi, 2))
            pad = 1e-6 * (hi - lo)
            t1, t3 = max(t1, lo + pad), min(t3, hi - pad)
            if t3 - t1 < 1e-9 or t1 <= 0:
                continue
            t2 = 0.5 * (t1 + t3)
            p1, p2, p3 = eval_p(c, t1), eval_p(c, t2), eval_p(c, t3)
            assert p2 <= 0.5 * (p1 + p3) + 1e-10 * max(1.0, abs(p1), abs(p3))
