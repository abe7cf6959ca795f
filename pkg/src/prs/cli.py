"""Command-line front end.

Every run prints one JSON record on stdout with at least the fields
``status, variant, point, t_star, value, certificates``; floats carry 17
significant digits so repeated runs diff cleanly.  A short human-readable
summary goes to stderr unless ``--quiet`` is given.

Exit codes: 0 success, 1 solver error or failed verification, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .constrained import SlabConstraints, solve_constrained
from .errors import GenericityViolated, PrsError
from .global_solver import TAU_KKT, TAU_PSD, certify, check_sign_structure, solve_global, \
    solve_global_convex_oracle
from .instance_file import InstanceFileError, read_instance_file
from .kdsp import MAX_BRUTE_N, kdsp_brute, kdsp_reduce
from .local_solver import check_local_sign_structure, enumerate_critical_points_p4, solve_local_nonglobal
from .secular import TAU_ROOT
from .spectra import decompose

EXIT_OK, EXIT_SOLVER, EXIT_INPUT = 0, 1, 2
VERIFY_PROBES = 10_000


def format_record(obj, indent: int = 2) -> str:
    """JSON text with floats at 17 significant digits; non-finite floats become null."""
    return _fmt(obj, 0, indent)


def _fmt(obj, level, indent):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return format(v, ".17g") if math.isfinite(v) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (list, tuple, dict, np.ndarray)) for v in obj):
            return "[" + ", ".join(_fmt(v, level + 1, indent) for v in obj) + "]"
        items = [pad + _fmt(v, level + 1, indent) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [pad + _fmt(str(k), 0, indent) + ": " + _fmt(v, level + 1, indent) for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    raise TypeError(f"cannot format {type(obj).__name__}")


def _record(status="ok", variant=None, point=None, t_star=None, value=None, certificates=None, **extra):
    rec = {"status": status, "variant": variant, "point": point, "t_star": t_star,
           "value": value, "certificates": certificates or {}}
    rec.update(extra)
    return rec


def _need_problem(inf, what):
    if inf.problem is None:
        raise InstanceFileError(f"'{what}' needs a 'problem' section", 1)
    return inf.problem.instance()


# ---------------------------------------------------------------- commands

def cmd_global(inf, args):
    inst = _need_problem(inf, "global")
    sol = solve_global(inst, tol_root=args.tol_root)
    x = sol.representative()
    cert = certify(inst, x, tol_psd=args.tol_psd)
    cert["sign_structure_ok"] = check_sign_structure(sol.spectrum, sol.spectrum.to_rotated(x))
    extra = {}
    if sol.is_sphere:
        extra["sphere"] = {"center": sol.sphere_center, "radius": sol.sphere_radius,
                           "basis": sol.sphere_basis}
    summary = f"global {sol.variant.value}: value {sol.value:.12g}, t* {sol.t_star:.12g}"
    return _record(variant=sol.variant.value, point=x, t_star=sol.t_star, value=sol.value,
                   certificates=cert, case=sol.case, **extra), summary


def cmd_local(inf, args):
    inst = _need_problem(inf, "local")
    loc = solve_local_nonglobal(inst, tol_psd=args.tol_psd)
    if not loc.exists:
        return (_record(variant="none", certificates={"reason": loc.reason.value,
                                                      "fast_path": loc.fast_path}, reason=loc.reason.value),
                f"no local-nonglobal minimizer ({loc.reason.value})")
    spec = decompose(inst)
    cert = {
        "hess_min_eig": loc.hess_min_eig,
        "h_prime": loc.h_prime,
        "kkt_residual": float(np.linalg.norm(inst.gradient(loc.point))),
        "sign_structure_ok": check_local_sign_structure(spec, spec.to_rotated(loc.point)),
    }
    return (_record(variant="LocalNonglobal", point=loc.point, t_star=loc.t_val, value=loc.value,
                    certificates=cert, reason=loc.reason.value),
            f"local-nonglobal minimizer: value {loc.value:.12g}, t {loc.t_val:.12g}")


def cmd_all_critical(inf, args):
    inst = _need_problem(inf, "all-critical")
    pts = enumerate_critical_points_p4(inst)
    listing = [{"t": cp.t, "x": cp.x, "kind": cp.kind, "hess_min_eig": cp.hess_min_eig,
                "value": inst.objective(cp.x)} for cp in pts]
    glob = [cp for cp in pts if cp.kind == "global_min"]
    best = glob[0] if glob else None
    rec = _record(variant="CriticalPoints", point=None if best is None else best.x,
                  t_star=None if best is None else best.t,
                  value=None if best is None else inst.objective(best.x),
                  certificates={"count": len(pts)}, critical_points=listing)
    kinds = ", ".join(cp.kind for cp in pts)
    return rec, f"{len(pts)} critical points: {kinds}"


def cmd_constrained(inf, args):
    inst = _need_problem(inf, "constrained")
    cons = inf.constraints if inf.constraints is not None else SlabConstraints.empty(inst.n)
    sol = solve_constrained(inst, cons)
    cert = {"feasible": cons.is_feasible(sol.point), "subproblems": sol.subproblems}
    trace = [[int(j), side] for j, side in sol.facet_trace]
    return (_record(variant="Constrained", point=sol.point, value=sol.value, certificates=cert,
                    facet_trace=trace),
            f"constrained minimum {sol.value:.12g} after {sol.subproblems} facet subproblems")


def cmd_kdsp(inf, args):
    if inf.kdsp is None:
        raise InstanceFileError("'kdsp' needs a 'kdsp' section", 1)
    kd = inf.kdsp
    red = kdsp_reduce(kd, theta=args.theta)
    sol = solve_constrained(red.instance, red.constraints)
    d_star = sol.value + red.constant
    rec = _record(variant="Kdsp", point=sol.point, value=sol.value,
                  certificates={"feasible": red.constraints.is_feasible(sol.point),
                                "max_distance_to_binary": float(np.max(np.minimum(
                                    np.abs(sol.point), np.abs(1.0 - sol.point))))},
                  d_star=d_star, theta=red.theta, constant=red.constant)
    return rec, f"kdsp: d* from reduction {d_star:.12g} (theta {red.theta:.6g})"


def cmd_verify(inf, args):
    checks: dict[str, bool] = {}
    info: dict = {}
    rng = np.random.default_rng(args.seed)
    if inf.kdsp is not None:
        kd = inf.kdsp
        red = kdsp_reduce(kd, theta=args.theta)
        sol = solve_constrained(red.instance, red.constraints)
        d_red = sol.value + red.constant
        checks["feasible"] = red.constraints.is_feasible(sol.point)
        if kd.n <= MAX_BRUTE_N:
            d_brute = kdsp_brute(kd)
            info["d_star_reduction"], info["d_star_enumerated"] = d_red, d_brute
            checks["reduction_matches_enumeration"] = abs(d_red - d_brute) <= 1e-5
        return _verdict(checks, info, variant="Kdsp", point=sol.point, value=sol.value)

    inst = inf.problem.instance()
    if inf.constraints is not None and inf.constraints.m > 0:
        return _verify_constrained(inst, inf.constraints, rng, checks, info)

    sol = solve_global(inst, tol_root=args.tol_root)
    spec = sol.spectrum
    pts = sol.sample(rng, 16) if sol.is_sphere else sol.point[None, :]
    certs = [certify(inst, x, tol_psd=args.tol_psd) for x in pts]
    checks["stationarity"] = all(c["kkt_ok"] for c in certs)
    checks["psd"] = all(c["psd_ok"] for c in certs)
    checks["sign_structure"] = all(check_sign_structure(spec, spec.to_rotated(x)) for x in pts)
    vals = inst.objective_batch(pts)
    checks["equal_values"] = bool(np.ptp(vals) <= 1e-9 * max(1.0, abs(sol.value)))
    oracle = solve_global_convex_oracle(inst)
    info["convex_oracle_value"] = oracle
    checks["convex_oracle_agreement"] = abs(oracle - sol.value) <= 1e-6 * max(1.0, abs(sol.value))
    radius = 3.0 * max(1.0, sol.norm)
    probes = _ball(rng, VERIFY_PROBES, inst.n, radius)
    info["probe_min"] = float(np.min(inst.objective_batch(probes)))
    checks["sampling_dominance"] = sol.value <= info["probe_min"] + 1e-7

    loc = solve_local_nonglobal(inst, spec=spec, tol_psd=args.tol_psd)
    info["local_nonglobal"] = loc.reason.value
    if loc.exists:
        checks["local_hessian_pd"] = loc.hess_min_eig > 0
        checks["local_stationarity"] = bool(
            np.linalg.norm(inst.gradient(loc.point)) <= TAU_KKT * (1.0 + np.linalg.norm(inst.c)))
        checks["local_above_global"] = loc.value > sol.value - 1e-10
        checks["local_sign_structure"] = check_local_sign_structure(spec, spec.to_rotated(loc.point))
    if inst.p == 4.0 and inst.n <= 8:
        try:
            cps = enumerate_critical_points_p4(inst)
        except GenericityViolated:
            info["enumeration"] = "skipped (not generic)"
        else:
            ln = [cp for cp in cps if cp.kind == "local_nonglobal"]
            same = len(ln) == int(loc.exists)
            if same and loc.exists:
                same = np.linalg.norm(ln[0].x - loc.point) <= 1e-7 * (1.0 + np.linalg.norm(loc.point))
            checks["enumeration_agreement"] = bool(same)
    return _verdict(checks, info, variant=sol.variant.value, point=sol.representative(),
                    t_star=sol.t_star, value=sol.value)


def _verify_constrained(inst, cons, rng, checks, info):
    from .oracles import constrained_multistart

    sol = solve_constrained(inst, cons)
    checks["feasible"] = cons.is_feasible(sol.point)
    best = constrained_multistart(inst, cons, rng, starts=20,
                                  radius=3.0 * max(1.0, float(np.linalg.norm(sol.point))))
    info["multistart_min"] = best
    checks["multistart_dominance"] = sol.value <= best + 1e-7
    return _verdict(checks, info, variant="Constrained", point=sol.point, value=sol.value)


def _ball(rng, size, n, radius):
    u = rng.standard_normal((size, n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    r = radius * rng.random(size) ** (1.0 / n)
    return u * r[:, None]


def _verdict(checks, info, **fields):
    ok = all(checks.values())
    rec = _record(status="ok" if ok else "failed", certificates={**checks, **info}, **fields)
    lines = [f"{'PASS' if v else 'FAIL'}  {k}" for k, v in checks.items()]
    return rec, "\n".join(lines)


COMMANDS = {
    "global": cmd_global,
    "local": cmd_local,
    "all-critical": cmd_all_critical,
    "constrained": cmd_constrained,
    "kdsp": cmd_kdsp,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prs", description="p-regularized subproblem solvers")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("file", help="JSON instance file")
    parser.add_argument("--theta", type=float, default=None, help="KDSP penalty weight")
    parser.add_argument("--tol-root", type=float, default=TAU_ROOT, help="secular root residual tolerance")
    parser.add_argument("--tol-psd", type=float, default=TAU_PSD, help="PSD tolerance relative to the spectrum scale")
    parser.add_argument("--seed", type=int, default=0, help="seed for the random probes of verify")
    parser.add_argument("--quiet", action="store_true", help="suppress the stderr summary")
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        inf = read_instance_file(args.file)
    except OSError as exc:
        print(f"{args.file}: {exc.strerror}", file=stderr)
        return EXIT_INPUT
    except InstanceFileError as exc:
        print(f"{args.file}:{exc.line}: {exc.detail}", file=stderr)
        return EXIT_INPUT
    try:
        rec, summary = COMMANDS[args.command](inf, args)
    except InstanceFileError as exc:
        print(f"{args.file}:{exc.line}: {exc.detail}", file=stderr)
        return EXIT_INPUT
    except PrsError as exc:
        print(format_record(_record(status="error", error=type(exc).__name__, message=str(exc))), file=stdout)
        print(f"{type(exc).__name__}: {exc}", file=stderr)
        return EXIT_SOLVER
    print(format_record(rec), file=stdout)
    if not args.quiet:
        print(summary, file=stderr)
    return EXIT_OK if rec["status"] == "ok" else EXIT_SOLVER


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
