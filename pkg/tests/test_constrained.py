import itertools

import numpy as np
import pytest

from prs import PrsInstance, SlabConstraints, intersect_global_set, null_space_reduce, solve_constrained, \
    solve_global
from prs.constrained import LOWER, UPPER, facet_bound, max_norm_vertex, min_norm_in_slabs
from prs.errors import CapExceeded, DegenerateRow, Infeasible, InvalidInstance
from prs.oracles import GridSpec, grid_minimize_slabs

from _gen import generic_p4, level_set_radius, random_instance, random_slabs


def slabs(rows, lower, upper):
    return SlabConstraints(np.array(rows, float), np.array(lower, float), np.array(upper, float))


# ---------------------------------------------------------------- solve_constrained examples

def test_feasible_unconstrained_minimizer():
    inst = PrsInstance([[-2.0]], [0.0], 1.0, 4)
    sol = solve_constrained(inst, slabs([[1.0]], [0.5], [3.0]))
    assert sol.point[0] == pytest.approx(np.sqrt(2.0), abs=1e-12)
    assert sol.value == pytest.approx(-1.0, abs=1e-12)
    assert sol.facet_trace == []


def test_minimum_on_lower_facet():
    inst = PrsInstance([[-2.0]], [0.0], 1.0, 4)
    sol = solve_constrained(inst, slabs([[1.0]], [2.0], [3.0]))
    assert sol.point[0] == pytest.approx(2.0, abs=1e-12)
    assert sol.value == pytest.approx(0.0, abs=1e-12)
    assert sol.facet_trace == [(0, LOWER)]


def test_vacuous_slabs_match_unconstrained(rng):
    for _ in range(10):
        inst = random_instance(rng, n=3, p=4.0)
        m = 2
        cons = slabs(rng.standard_normal((m, 3)), [-1e9] * m, [1e9] * m)
        sol = solve_constrained(inst, cons)
        assert sol.value == pytest.approx(solve_global(inst).value, rel=1e-12, abs=1e-12)


def test_no_constraints():
    inst = PrsInstance(np.diag([-1.0, 2.0]), [0.5, 0.0], 1.0, 4)
    sol = solve_constrained(inst, SlabConstraints.empty(2))
    assert sol.value == pytest.approx(solve_global(inst).value)


def test_point_is_feasible(rng):
    for _ in range(30):
        inst = random_instance(rng, n=int(rng.integers(1, 4)), p=4.0)
        cons = random_slabs(rng, inst.n, int(rng.integers(1, 4)))
        sol = solve_constrained(inst, cons)
        tol = 1e-8 * (1 + np.linalg.norm(sol.point)) * cons.max_row_norm()
        A = cons.rows @ sol.point
        assert np.all(A >= cons.lower - tol) and np.all(A <= cons.upper + tol)
        assert inst.objective(sol.point) == pytest.approx(sol.value, rel=1e-12, abs=1e-12)


def test_parallel_equals_serial(rng):
    for _ in range(5):
        inst = random_instance(rng, n=3, p=4.0)
        cons = random_slabs(rng, 3, 3)
        a = solve_constrained(inst, cons)
        b = solve_constrained(inst, cons, max_workers=4)
        assert a.value == pytest.approx(b.value, rel=1e-12, abs=1e-12)


def test_errors():
    inst = PrsInstance([[1.0]], [0.0], 1.0, 4)
    with pytest.raises(Infeasible):
        solve_constrained(inst, slabs([[1.0], [1.0]], [0.0, 2.0], [1.0, 3.0]))
    with pytest.raises(CapExceeded):
        solve_constrained(inst, slabs(np.ones((13, 1)), np.zeros(13), np.ones(13)))
    with pytest.raises(InvalidInstance):
        solve_constrained(PrsInstance([[1.0]], [0.0], 1.0, 3), slabs([[1.0]], [0.0], [1.0]))
    with pytest.raises(DegenerateRow):
        slabs([[0.0]], [0.0], [1.0])
    with pytest.raises(InvalidInstance):
        slabs([[1.0]], [2.0], [1.0])


def test_against_grid_oracle(rng):
    for _ in range(8):
        inst = random_instance(rng, n=int(rng.integers(1, 4)), p=4.0)
        cons = random_slabs(rng, inst.n, int(rng.integers(1, 4)))
        sol = solve_constrained(inst, cons)
        R = level_set_radius(inst, cons)
        _, v = grid_minimize_slabs(inst, cons, GridSpec(np.zeros(inst.n), R, 121))
        assert abs(sol.value - v) <= 1e-4
        assert sol.value <= v + 1e-7


# ---------------------------------------------------------------- intersect_global_set

def unit_circle_solution():
    return solve_global(PrsInstance(np.diag([-1.0, -1.0]), [0.0, 0.0], 1.0, 4))


def test_intersect_vacuous_slab():
    sol = unit_circle_solution()
    x = intersect_global_set(sol, slabs([[1.0, 0.0]], [-2.0], [2.0]))
    assert x is not None and np.linalg.norm(x) == pytest.approx(1.0)


def test_intersect_empty():
    assert intersect_global_set(unit_circle_solution(), slabs([[1.0, 0.0]], [2.0], [3.0])) is None


def test_intersect_equality_unbounded_direction():
    x = intersect_global_set(unit_circle_solution(), slabs([[1.0, 0.0]], [0.5], [0.5]))
    assert x[0] == pytest.approx(0.5)
    assert abs(x[1]) == pytest.approx(np.sqrt(0.75))


def test_intersect_unique_point():
    sol = solve_global(PrsInstance([[-2.0]], [0.0], 1.0, 4))
    assert sol.is_sphere  # {+-sqrt 2}
    x = intersect_global_set(sol, slabs([[1.0]], [-3.0], [-0.5]))
    assert x[0] == pytest.approx(-np.sqrt(2))
    uniq = solve_global(PrsInstance([[1.0]], [2.0], 1.0, 4))
    assert intersect_global_set(uniq, slabs([[1.0]], [0.0], [1.0])) is None
    assert intersect_global_set(uniq, slabs([[1.0]], [-2.0], [0.0]))[0] == pytest.approx(-1.0)


def test_intersect_bounded_polytope_inside_sphere():
    # square [-0.3, 0.3]^2 lies strictly inside the unit circle: no intersection
    sol = unit_circle_solution()
    cons = slabs(np.eye(2), [-0.3, -0.3], [0.3, 0.3])
    assert intersect_global_set(sol, cons) is None
    # square [-0.8, 0.8]^2 has corners outside: the circle crosses it
    x = intersect_global_set(sol, slabs(np.eye(2), [-0.8, -0.8], [0.8, 0.8]))
    assert np.linalg.norm(x) == pytest.approx(1.0) and np.all(np.abs(x) <= 0.8 + 1e-12)


def test_min_norm_against_enumeration(rng):
    # the minimum-norm point is the projection of 0 onto some face; enumerate the faces
    for _ in range(50):
        m, k = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        G = rng.standard_normal((m, k))
        centre = rng.standard_normal(k) * 2
        lo = G @ centre - rng.uniform(0.1, 1.0, m)
        hi = G @ centre + rng.uniform(0.1, 1.0, m)
        y = min_norm_in_slabs(G, lo, hi)
        assert np.all(G @ y >= lo - 1e-8) and np.all(G @ y <= hi + 1e-8)
        best = np.inf
        for choice in itertools.product([None, "lo", "hi"], repeat=m):
            act = [i for i in range(m) if choice[i] is not None]
            if not act:
                z = np.zeros(k)
            else:
                rhs = np.array([lo[i] if choice[i] == "lo" else hi[i] for i in act])
                z, *_ = np.linalg.lstsq(G[act], rhs, rcond=None)
                if np.linalg.norm(G[act] @ z - rhs) > 1e-9:
                    continue
            if np.all(G @ z >= lo - 1e-9) and np.all(G @ z <= hi + 1e-9):
                best = min(best, np.linalg.norm(z))
        assert np.linalg.norm(y) == pytest.approx(best, rel=1e-7, abs=1e-9)


def test_max_norm_vertex_square():
    v = max_norm_vertex(np.eye(2), np.array([-1.0, -2.0]), np.array([1.0, 1.0]))
    assert np.linalg.norm(v) == pytest.approx(np.sqrt(5.0))


# ---------------------------------------------------------------- null_space_reduce

def test_reduce_hand_example():
    inst = PrsInstance(np.diag([2.0, 4.0]), [0.0, 0.0], 1.0, 4)
    red = null_space_reduce(inst, slabs([[1.0, 0.0]], [1.0], [1.0]), 0, LOWER)
    np.testing.assert_allclose(red.x_hat, [1.0, 0.0])
    assert abs(red.P[1, 0]) == pytest.approx(1.0) and red.P[0, 0] == pytest.approx(0.0)
    assert red.instance.H[0, 0] == pytest.approx(5.0)
    assert red.instance.c[0] == pytest.approx(0.0)
    assert red.offset == pytest.approx(1.25)
    for z in (-1.3, 0.0, 0.7):
        g = inst.objective(red.back_map([z]))
        assert g == pytest.approx(1 + 2 * z**2 + (1 + z**2) ** 2 / 4)


def test_reduce_homogeneous_facet(rng):
    inst = random_instance(rng, n=3, p=4.0)
    a = rng.standard_normal(3)
    red = null_space_reduce(inst, slabs([a], [0.0], [1.0]), 0, LOWER)
    np.testing.assert_array_equal(red.x_hat, 0.0)
    np.testing.assert_allclose(red.instance.H, red.P.T @ inst.H @ red.P, atol=1e-14)
    np.testing.assert_allclose(red.instance.c, red.P.T @ inst.c, atol=1e-14)


def test_reduction_exactness(rng):
    for _ in range(20):
        inst = random_instance(rng, n=int(rng.integers(2, 5)), p=4.0)
        cons = random_slabs(rng, inst.n, 3)
        j = int(rng.integers(0, 3))
        side = LOWER if rng.random() < 0.5 else UPPER
        red = null_space_reduce(inst, cons, j, side)
        b = cons.lower[j] if side == LOWER else cons.upper[j]
        for _ in range(100):
            z = rng.standard_normal(inst.n - 1) * 2
            x = red.back_map(z)
            assert cons.rows[j] @ x == pytest.approx(b, abs=1e-10 * (1 + abs(b)))
            g = inst.objective(x)
            assert red.reduced_objective(z) == pytest.approx(g, rel=1e-10, abs=1e-10)
            # remaining slabs are rewritten consistently
            for r, i in enumerate(red.kept):
                assert red.constraints.rows[r] @ z - red.constraints.lower[r] == pytest.approx(
                    cons.rows[i] @ x - cons.lower[i], abs=1e-9)


def test_reduce_one_dimension_is_a_point():
    inst = PrsInstance([[-2.0]], [0.0], 1.0, 4)
    red = null_space_reduce(inst, slabs([[2.0]], [1.0], [3.0]), 0, UPPER)
    assert red.instance is None
    assert red.back_map(np.zeros(0))[0] == pytest.approx(1.5)
    assert red.reduced_objective(np.zeros(0)) == pytest.approx(inst.objective([1.5]))


def test_reduce_parallel_row_excluding_facet():
    inst = PrsInstance(np.eye(2), [0.0, 0.0], 1.0, 4)
    cons = slabs([[1.0, 0.0], [2.0, 0.0]], [0.0, 5.0], [1.0, 6.0])
    with pytest.raises(Infeasible):
        null_space_reduce(inst, cons, 0, UPPER)


# ---------------------------------------------------------------- recursion bookkeeping

@pytest.mark.parametrize("m,n,expected", [(1, 1, 2), (2, 3, 8), (3, 3, 48), (3, 2, 24), (12, 1, 24)])
def test_facet_bound_values(m, n, expected):
    assert facet_bound(m, n) == expected


def test_subproblem_count_respects_bound(rng):
    for _ in range(20):
        n, m = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        inst = generic_p4(rng, n)
        cons = random_slabs(rng, n, m)
        sol = solve_constrained(inst, cons)
        assert sol.subproblems <= facet_bound(m, n)


def test_equality_slab_reduced_once():
    inst = PrsInstance(np.diag([-1.0, 0.5]), [0.2, 0.1], 1.0, 4)
    eq = solve_constrained(inst, slabs([[1.0, 1.0]], [0.3], [0.3]))
    assert eq.facet_trace == [(0, LOWER)]
    assert eq.subproblems == 1
    two = solve_constrained(inst, slabs([[1.0, 1.0]], [0.3], [0.4]))
    assert two.subproblems <= 2
