"""Exact solvers for the p-regularized subproblem min 1/2 x'Hx + c'x + (sigma/p)||x||^p."""

from .constrained import (ConstrainedSolution, SlabConstraints, intersect_global_set, null_space_reduce,
                          solve_constrained)
from .global_solver import (GlobalSolution, Variant, certify, check_sign_structure, solve_global,
                            solve_global_convex_oracle)
from .instance import PrsInstance
from .kdsp import KdspInstance, kdsp_brute, kdsp_reduce, vertex_gap_bound
from .local_solver import (LocalNonglobal, Reason, check_local_sign_structure, enumerate_critical_points_p4,
                           solve_local_nonglobal)
from .secular import SecularContext, eval_h, eval_h_prime, global_root, local_roots
from .spectra import Spectrum, decompose, to_original

__all__ = [
    "PrsInstance",
    "Spectrum",
    "decompose",
    "to_original",
    "SecularContext",
    "eval_h",
    "eval_h_prime",
    "global_root",
    "local_roots",
    "GlobalSolution",
    "Variant",
    "solve_global",
    "solve_global_convex_oracle",
    "check_sign_structure",
    "certify",
    "LocalNonglobal",
    "Reason",
    "solve_local_nonglobal",
    "check_local_sign_structure",
    "enumerate_critical_points_p4",
    "SlabConstraints",
    "ConstrainedSolution",
    "solve_constrained",
    "intersect_global_set",
    "null_space_reduce",
    "KdspInstance",
    "kdsp_reduce",
    "kdsp_brute",
    "vertex_gap_bound",
]
