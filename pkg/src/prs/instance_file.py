"""JSON instance files.

Layout::

    {
      "schema_version": "1",
      "problem": {"H": [[...], ...] | {"diag": [...]}, "c": [...], "sigma": s, "p": p},
      "constraints": {"rows": [[...], ...], "lower": [...], "upper": [...]},
      "kdsp": {"D": [[...], ...], "k": k}
    }

Exactly one of ``problem`` and ``kdsp`` is present; ``constraints`` only
accompanies ``problem``.  Every error carries the line of the offending key.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass

import numpy as np

from .constrained import SlabConstraints
from .errors import InvalidInstance, PrsError
from .instance import PrsInstance
from .kdsp import KdspInstance

SCHEMA_VERSION = "1"


class InstanceFileError(InvalidInstance):
    """Malformed instance file; ``line`` is 1-based."""

    def __init__(self, message: str, line: int = 1):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.detail = message


@dataclass(frozen=True, eq=False)
class ProblemData:
    H: np.ndarray
    c: np.ndarray
    sigma: float
    p: float
    diag: bool = False  # H was given as {"diag": [...]}

    def instance(self) -> PrsInstance:
        return PrsInstance(self.H, self.c, self.sigma, self.p)


@dataclass(frozen=True, eq=False)
class InstanceFile:
    schema_version: str
    problem: ProblemData | None = None
    constraints: SlabConstraints | None = None
    kdsp: KdspInstance | None = None

    def same_as(self, other: "InstanceFile") -> bool:
        """Field-by-field equality (arrays compared exactly)."""
        def eq(a, b):
            if a is None or b is None:
                return a is b
            return all(np.array_equal(getattr(a, f), getattr(b, f)) for f in _fields(a))
        return (self.schema_version == other.schema_version and eq(self.problem, other.problem)
                and eq(self.constraints, other.constraints) and eq(self.kdsp, other.kdsp))


def _fields(obj):
    return [f for f in obj.__dataclass_fields__]


def _line_of(text: str, key: str, after: int = 0) -> int:
    """Line of the first ``"key"`` at or after line ``after`` (1 when absent)."""
    pat = re.compile(r'"' + re.escape(key) + r'"\s*:')
    for i, line in enumerate(text.splitlines(), start=1):
        if i >= after and pat.search(line):
            return i
    return max(after, 1)


def _matrix(val, name, line, square=True):
    try:
        arr = np.array(val, dtype=float)
    except (TypeError, ValueError):
        raise InstanceFileError(f"{name} must be an array of numbers", line) from None
    if arr.ndim != 2 or (square and arr.shape[0] != arr.shape[1]):
        raise InstanceFileError(f"{name} must be a {'square ' if square else ''}matrix", line)
    if not np.all(np.isfinite(arr)):
        raise InstanceFileError(f"{name} has non-finite entries", line)
    return arr


def _vector(val, name, line):
    try:
        arr = np.array(val, dtype=float)
    except (TypeError, ValueError):
        raise InstanceFileError(f"{name} must be an array of numbers", line) from None
    if arr.ndim != 1:
        raise InstanceFileError(f"{name} must be a flat array", line)
    if not np.all(np.isfinite(arr)):
        raise InstanceFileError(f"{name} has non-finite entries", line)
    return arr


def _number(val, name, line):
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        raise InstanceFileError(f"{name} must be a finite number", line)
    return float(val)


def _require(obj: dict, key: str, section: str, line: int):
    if key not in obj:
        raise InstanceFileError(f"missing field '{key}' in '{section}'", line)
    return obj[key]


def parse_instance_text(text: str) -> InstanceFile:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFileError(exc.msg, exc.lineno) from None
    if not isinstance(data, dict):
        raise InstanceFileError("top level must be an object", 1)
    version = data.get("schema_version")
    if not isinstance(version, str):
        raise InstanceFileError("schema_version must be a string", _line_of(text, "schema_version"))
    if version != SCHEMA_VERSION:
        raise InstanceFileError(f"unsupported schema_version {version!r}", _line_of(text, "schema_version"))
    unknown = set(data) - {"schema_version", "problem", "constraints", "kdsp"}
    if unknown:
        key = sorted(unknown)[0]
        raise InstanceFileError(f"unknown field '{key}'", _line_of(text, key))
    has_p, has_k = "problem" in data, "kdsp" in data
    if has_p == has_k:
        line = _line_of(text, "kdsp") if has_k else 1
        raise InstanceFileError("exactly one of 'problem' and 'kdsp' is required", line)
    if has_k and "constraints" in data:
        raise InstanceFileError("'constraints' cannot accompany 'kdsp'", _line_of(text, "constraints"))

    problem = constraints = kd = None
    if has_p:
        problem = _parse_problem(data["problem"], text)
        if "constraints" in data:
            constraints = _parse_constraints(data["constraints"], text, problem.H.shape[0])
    else:
        kd = _parse_kdsp(data["kdsp"], text)
    return InstanceFile(version, problem, constraints, kd)


def _parse_problem(obj, text) -> ProblemData:
    at = _line_of(text, "problem")
    if not isinstance(obj, dict):
        raise InstanceFileError("'problem' must be an object", at)
    line = lambda key: _line_of(text, key, at)  # noqa: E731
    H_raw = _require(obj, "H", "problem", at)
    diag = isinstance(H_raw, dict)
    if diag:
        if set(H_raw) != {"diag"}:
            raise InstanceFileError("H shorthand must be {\"diag\": [...]}", line("H"))
        H = np.diag(_vector(H_raw["diag"], "H.diag", line("H")))
    else:
        H = _matrix(H_raw, "H", line("H"))
    c = _vector(_require(obj, "c", "problem", at), "c", line("c"))
    sigma = _number(_require(obj, "sigma", "problem", at), "sigma", line("sigma"))
    p = _number(_require(obj, "p", "problem", at), "p", line("p"))
    if c.shape[0] != H.shape[0]:
        raise InstanceFileError(f"c has length {c.shape[0]} but H is {H.shape[0]}x{H.shape[0]}", line("c"))
    data = ProblemData(H, c, sigma, p, diag)
    try:
        data.instance()
    except PrsError as exc:
        msg = str(exc)
        key = "sigma" if msg.startswith("sigma") else "p" if msg.startswith("p ") else "H"
        raise InstanceFileError(str(exc), line(key)) from None
    return data


def _parse_constraints(obj, text, n) -> SlabConstraints:
    at = _line_of(text, "constraints")
    if not isinstance(obj, dict):
        raise InstanceFileError("'constraints' must be an object", at)
    line = lambda key: _line_of(text, key, at)  # noqa: E731
    rows_raw = _require(obj, "rows", "constraints", at)
    if rows_raw == []:
        rows = np.zeros((0, n))
    else:
        rows = _matrix(rows_raw, "rows", line("rows"), square=False)
    if rows.shape[1] != n:
        raise InstanceFileError(f"rows have {rows.shape[1]} columns, expected {n}", line("rows"))
    lower = _vector(_require(obj, "lower", "constraints", at), "lower", line("lower"))
    upper = _vector(_require(obj, "upper", "constraints", at), "upper", line("upper"))
    try:
        return SlabConstraints(rows, lower, upper)
    except PrsError as exc:
        raise InstanceFileError(str(exc), at) from None


def _parse_kdsp(obj, text) -> KdspInstance:
    at = _line_of(text, "kdsp")
    if not isinstance(obj, dict):
        raise InstanceFileError("'kdsp' must be an object", at)
    D = _matrix(_require(obj, "D", "kdsp", at), "D", _line_of(text, "D", at))
    k = _require(obj, "k", "kdsp", at)
    if isinstance(k, bool) or not isinstance(k, int):
        raise InstanceFileError("k must be an integer", _line_of(text, "k", at))
    try:
        return KdspInstance(D, k)
    except PrsError as exc:
        raise InstanceFileError(str(exc), at) from None


def read_instance_file(path) -> InstanceFile:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except UnicodeDecodeError as exc:
        raise InstanceFileError(f"not UTF-8 text ({exc.reason})", 1) from None
    return parse_instance_text(text)


def instance_file_to_dict(inf: InstanceFile) -> dict:
    out: dict = {"schema_version": inf.schema_version}
    if inf.problem is not None:
        pr = inf.problem
        H = {"diag": np.diag(pr.H).tolist()} if pr.diag else pr.H.tolist()
        out["problem"] = {"H": H, "c": pr.c.tolist(), "sigma": pr.sigma, "p": pr.p}
    if inf.constraints is not None:
        cs = inf.constraints
        out["constraints"] = {"rows": cs.rows.tolist(), "lower": cs.lower.tolist(),
                              "upper": cs.upper.tolist()}
    if inf.kdsp is not None:
        out["kdsp"] = {"D": inf.kdsp.D.tolist(), "k": inf.kdsp.k}
    return out


def write_instance_file(path, inf: InstanceFile) -> None:
    # json writes floats with repr, which round-trips exactly
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_file_to_dict(inf), fh, indent=2)
        fh.write("\n")
