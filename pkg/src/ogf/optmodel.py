"""Solver-agnostic optimization model container and file exporters.

An `OptModel` holds bounded variables (continuous or binary), linear
constraints, quadratic epigraph rows (y >= x^2) and a linear minimization
objective.  Every variable and row carries a free-form tag so that model
rows stay traceable to the physical constraint family they encode.

Pure-MILP models export to free-format MPS, cone-bearing models to the
conic benchmark format (CBF), and any model round-trips losslessly through
the "ogf-model/1" JSON dump, which is also the only format able to carry
symbolic nonlinear rows.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

SENSES = ("<=", "==", ">=")
MODEL_SCHEMA = "ogf-model/1"


@dataclass
class Variable:
    name: str
    lower: float
    upper: float
    kind: str = "continuous"  # or "binary"
    tag: str = ""


@dataclass
class LinearConstraint:
    name: str
    coeffs: dict[int, float]
    sense: str
    rhs: float
    tag: str = ""


@dataclass
class ConeRow:
    """Epigraph row value(y) >= value(x)^2."""

    name: str
    y: int
    x: int
    tag: str = ""


@dataclass
class NonlinearRow:
    """Symbolic nonlinear constraint, carried only by the JSON dump."""

    name: str
    kind: str
    vars: dict[str, str]
    params: dict[str, float]
    tag: str = ""


@dataclass
class Solution:
    """Outcome of one solve.

    For minimization `bound` is the best proven lower bound; at status
    "optimal" it matches `objective` within the solver gap tolerances.
    """

    status: str  # optimal | infeasible | unbounded | time-limit | error
    objective: float | None = None
    values: dict[str, float] = field(default_factory=dict)
    bound: float | None = None
    stats: dict = field(default_factory=dict)


class FrozenModelError(RuntimeError):
    pass


class ExportError(ValueError):
    pass


@dataclass
class LPData:
    """Dense array view of a model used by the embedded solver."""

    c: np.ndarray
    A: np.ndarray
    sense: np.ndarray  # -1 for <=, 0 for ==, +1 for >=
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    binary: np.ndarray
    names: list[str]


class OptModel:
    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[LinearConstraint] = []
        self.cones: list[ConeRow] = []
        self.nonlinear: list[NonlinearRow] = []
        self.objective: dict[int, float] = {}
        self.meta: dict = {}
        self.frozen = False
        self._var_index: dict[str, int] = {}
        self._row_index: dict[str, int] = {}

    # -- construction -------------------------------------------------

    def _check_mutable(self):
        if self.frozen:
            raise FrozenModelError("model is frozen")

    def add_variable(self, name: str, lower: float, upper: float,
                     kind: str = "continuous", tag: str = "") -> int:
        self._check_mutable()
        if name in self._var_index:
            raise ValueError(f"duplicate variable name {name!r}")
        if kind not in ("continuous", "binary"):
            raise ValueError(f"unknown variable kind {kind!r}")
        if kind == "binary" and not (0 <= lower and upper <= 1 and lower <= upper):
            raise ValueError(f"binary {name!r} needs bounds within [0, 1]")
        if lower > upper:
            raise ValueError(f"variable {name!r} has lower > upper")
        self.variables.append(Variable(name, float(lower), float(upper), kind, tag))
        self._var_index[name] = len(self.variables) - 1
        return self._var_index[name]

    def var_index(self, name: str) -> int:
        try:
            return self._var_index[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r}") from None

    def _resolve(self, coeffs: dict) -> dict[int, float]:
        out: dict[int, float] = {}
        for key, val in coeffs.items():
            j = key if isinstance(key, int) else self.var_index(key)
            if not 0 <= j < len(self.variables):
                raise KeyError(f"variable index {j} out of range")
            out[j] = out.get(j, 0.0) + float(val)
        return out

    def add_constraint(self, coeffs: dict, sense: str, rhs: float,
                       name: str | None = None, tag: str = "") -> int:
        self._check_mutable()
        if sense not in SENSES:
            raise ValueError(f"sense must be one of {SENSES}")
        if name is None:
            name = f"c{len(self.constraints)}"
        if name in self._row_index:
            raise ValueError(f"duplicate constraint name {name!r}")
        row = LinearConstraint(name, self._resolve(coeffs), sense, float(rhs), tag)
        self.constraints.append(row)
        self._row_index[name] = len(self.constraints) - 1
        return self._row_index[name]

    def add_cone(self, y, x, name: str | None = None, tag: str = "") -> int:
        self._check_mutable()
        yj = y if isinstance(y, int) else self.var_index(y)
        xj = x if isinstance(x, int) else self.var_index(x)
        if name is None:
            name = f"q{len(self.cones)}"
        self.cones.append(ConeRow(name, yj, xj, tag))
        return len(self.cones) - 1

    def add_nonlinear(self, kind: str, vars: dict[str, str], params: dict[str, float],
                      name: str | None = None, tag: str = "") -> int:
        self._check_mutable()
        for v in vars.values():
            self.var_index(v)
        if name is None:
            name = f"nl{len(self.nonlinear)}"
        self.nonlinear.append(NonlinearRow(name, kind, dict(vars), dict(params), tag))
        return len(self.nonlinear) - 1

    def add_objective_term(self, var, coeff: float) -> None:
        self._check_mutable()
        j = var if isinstance(var, int) else self.var_index(var)
        self.objective[j] = self.objective.get(j, 0.0) + float(coeff)

    def freeze(self) -> "OptModel":
        self.frozen = True
        return self

    # -- queries -------------------------------------------------------

    def rows_by_tag(self, tag: str) -> list[LinearConstraint]:
        return [c for c in self.constraints if c.tag == tag]

    def vars_by_tag(self, tag: str) -> list[Variable]:
        return [v for v in self.variables if v.tag == tag]

    def binary_indices(self) -> list[int]:
        return [j for j, v in enumerate(self.variables) if v.kind == "binary"]

    def value_of(self, solution: Solution, name: str) -> float:
        return solution.values[name]

    # -- transforms ----------------------------------------------------

    def copy(self) -> "OptModel":
        other = OptModel(self.name)
        other.variables = [Variable(**asdict(v)) for v in self.variables]
        other.constraints = [
            LinearConstraint(c.name, dict(c.coeffs), c.sense, c.rhs, c.tag)
            for c in self.constraints]
        other.cones = [ConeRow(**asdict(q)) for q in self.cones]
        other.nonlinear = [NonlinearRow(q.name, q.kind, dict(q.vars),
                                        dict(q.params), q.tag)
                           for q in self.nonlinear]
        other.objective = dict(self.objective)
        other.meta = json.loads(json.dumps(self.meta))
        other._var_index = dict(self._var_index)
        other._row_index = dict(self._row_index)
        other.frozen = self.frozen
        return other

    def to_arrays(self) -> LPData:
        n, m = len(self.variables), len(self.constraints)
        c = np.zeros(n)
        for j, v in self.objective.items():
            c[j] = v
        A = np.zeros((m, n))
        sense = np.zeros(m, dtype=np.int8)
        b = np.zeros(m)
        code = {"<=": -1, "==": 0, ">=": 1}
        for i, row in enumerate(self.constraints):
            for j, v in row.coeffs.items():
                A[i, j] += v
            sense[i] = code[row.sense]
            b[i] = row.rhs
        lb = np.array([v.lower for v in self.variables])
        ub = np.array([v.upper for v in self.variables])
        binary = np.array([v.kind == "binary" for v in self.variables])
        return LPData(c, A, sense, b, lb, ub, binary,
                      [v.name for v in self.variables])


def relax_integrality(model: OptModel) -> OptModel:
    """Continuous relaxation: binaries become [max(0, lb), min(1, ub)]."""
    out = model.copy()
    for v in out.variables:
        if v.kind == "binary":
            v.kind = "continuous"
            v.lower = max(0.0, v.lower)
            v.upper = min(1.0, v.upper)
    return out


# -- exporters ----------------------------------------------------------


def _num(x: float) -> str:
    return f"{x:.17g}"


def export_mps(model: OptModel) -> str:
    """Free-format MPS text of a linear or mixed-binary model."""
    if not model.frozen:
        raise ExportError("freeze the model before exporting")
    if model.cones:
        raise ExportError("MPS cannot represent cone rows; use cbf or model-json")
    if model.nonlinear:
        raise ExportError("MPS cannot represent nonlinear rows; use model-json")
    lines = [f"NAME {model.name}", "OBJSENSE", "    MINIMIZE", "ROWS", " N  OBJ"]
    skey = {"<=": "L", ">=": "G", "==": "E"}
    for row in model.constraints:
        lines.append(f" {skey[row.sense]}  {row.name}")
    # column-major entries, binaries wrapped in integrality markers
    by_col: list[list[tuple[str, float]]] = [[] for _ in model.variables]
    for j, v in model.objective.items():
        if v != 0.0:
            by_col[j].append(("OBJ", v))
    for row in model.constraints:
        for j, v in sorted(row.coeffs.items()):
            if v != 0.0:
                by_col[j].append((row.name, v))
    lines.append("COLUMNS")
    in_int = False
    marker = 0
    for j, var in enumerate(model.variables):
        want_int = var.kind == "binary"
        if want_int != in_int:
            state = "INTORG" if want_int else "INTEND"
            lines.append(f"    MARKER{marker}  'MARKER'  '{state}'")
            marker += 1
            in_int = want_int
        for rname, v in by_col[j]:
            lines.append(f"    {var.name}  {rname}  {_num(v)}")
        if not by_col[j]:
            # keep empty columns visible with an explicit zero objective entry
            lines.append(f"    {var.name}  OBJ  0")
    if in_int:
        lines.append(f"    MARKER{marker}  'MARKER'  'INTEND'")
    lines.append("RHS")
    for row in model.constraints:
        if row.rhs != 0.0:
            lines.append(f"    RHS  {row.name}  {_num(row.rhs)}")
    lines.append("BOUNDS")
    for var in model.variables:
        lo_f, up_f = math.isfinite(var.lower), math.isfinite(var.upper)
        if lo_f and up_f and var.lower == var.upper:
            lines.append(f" FX BND  {var.name}  {_num(var.lower)}")
            continue
        if lo_f:
            lines.append(f" LO BND  {var.name}  {_num(var.lower)}")
        else:
            lines.append(f" MI BND  {var.name}")
        if up_f:
            lines.append(f" UP BND  {var.name}  {_num(var.upper)}")
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def export_cbf(model: OptModel) -> str:
    """Conic benchmark format text; cone rows map to rotated cones.

    Each epigraph row y >= x^2 becomes the triple (y, 1/2, x) in a rotated
    quadratic cone, variable bounds become explicit linear rows, and
    binaries are declared integer with [0, 1] bound rows.
    """
    if not model.frozen:
        raise ExportError("freeze the model before exporting")
    if model.nonlinear:
        raise ExportError("CBF cannot represent nonlinear rows; use model-json")
    n = len(model.variables)
    cone_blocks: list[tuple[str, int]] = []
    acoord: list[tuple[int, int, float]] = []
    bcoord: list[tuple[int, float]] = []
    row = 0
    for con in model.constraints:
        kind = {"<=": "L-", ">=": "L+", "==": "L="}[con.sense]
        cone_blocks.append((kind, 1))
        for j, v in sorted(con.coeffs.items()):
            acoord.append((row, j, v))
        bcoord.append((row, -con.rhs))
        row += 1
    for var in model.variables:
        if math.isfinite(var.lower):
            cone_blocks.append(("L+", 1))
            acoord.append((row, model.var_index(var.name), 1.0))
            bcoord.append((row, -var.lower))
            row += 1
        if math.isfinite(var.upper):
            cone_blocks.append(("L-", 1))
            acoord.append((row, model.var_index(var.name), 1.0))
            bcoord.append((row, -var.upper))
            row += 1
    for cone in model.cones:
        cone_blocks.append(("QR", 3))
        acoord.append((row, cone.y, 1.0))
        bcoord.append((row + 1, 0.5))
        acoord.append((row + 2, cone.x, 1.0))
        row += 3

    out = ["VER", "1", "", "OBJSENSE", "MIN", "", "VAR", f"{n} 1", f"F {n}", ""]
    ints = model.binary_indices()
    if ints:
        out += ["INT", str(len(ints))] + [str(j) for j in ints] + [""]
    out += ["CON", f"{row} {len(cone_blocks)}"]
    out += [f"{kind} {dim}" for kind, dim in cone_blocks]
    out.append("")
    obj = [(j, v) for j, v in sorted(model.objective.items()) if v != 0.0]
    out += ["OBJACOORD", str(len(obj))]
    out += [f"{j} {_num(v)}" for j, v in obj]
    out.append("")
    out += ["ACOORD", str(len(acoord))]
    out += [f"{i} {j} {_num(v)}" for i, j, v in acoord]
    out.append("")
    bnz = [(i, v) for i, v in bcoord if v != 0.0]
    out += ["BCOORD", str(len(bnz))]
    out += [f"{i} {_num(v)}" for i, v in bnz]
    out.append("")
    return "\n".join(out)


def _json_bound(x: float):
    return None if math.isinf(x) else x


def _bound_from_json(x, default: float) -> float:
    return default if x is None else float(x)


def export_model_json(model: OptModel) -> str:
    """Loss-free JSON dump of a frozen model (schema ogf-model/1)."""
    if not model.frozen:
        raise ExportError("freeze the model before exporting")
    names = [v.name for v in model.variables]
    doc = {
        "schema": MODEL_SCHEMA,
        "name": model.name,
        "variables": [
            {"name": v.name, "lower": _json_bound(v.lower),
             "upper": _json_bound(v.upper), "kind": v.kind, "tag": v.tag}
            for v in model.variables],
        "constraints": [
            {"name": c.name, "coeffs": {names[j]: v for j, v in sorted(c.coeffs.items())},
             "sense": c.sense, "rhs": c.rhs, "tag": c.tag}
            for c in model.constraints],
        "cones": [
            {"name": q.name, "y": names[q.y], "x": names[q.x], "tag": q.tag}
            for q in model.cones],
        "nonlinear": [
            {"name": q.name, "kind": q.kind, "vars": q.vars,
             "params": q.params, "tag": q.tag}
            for q in model.nonlinear],
        "objective": {names[j]: v for j, v in sorted(model.objective.items())},
        "meta": model.meta,
    }
    return json.dumps(doc, indent=1)


def load_model_json(text: str) -> OptModel:
    doc = json.loads(text)
    if doc.get("schema") != MODEL_SCHEMA:
        raise ExportError(f"expected schema {MODEL_SCHEMA!r}, got {doc.get('schema')!r}")
    model = OptModel(doc.get("name", "model"))
    for v in doc["variables"]:
        model.add_variable(v["name"], _bound_from_json(v["lower"], -math.inf),
                           _bound_from_json(v["upper"], math.inf),
                           v.get("kind", "continuous"), v.get("tag", ""))
    for c in doc["constraints"]:
        model.add_constraint(c["coeffs"], c["sense"], c["rhs"], c["name"], c.get("tag", ""))
    for q in doc.get("cones", []):
        model.add_cone(q["y"], q["x"], q["name"], q.get("tag", ""))
    for q in doc.get("nonlinear", []):
        model.add_nonlinear(q["kind"], q["vars"], q["params"], q["name"], q.get("tag", ""))
    for name, v in doc.get("objective", {}).items():
        model.add_objective_term(name, v)
    model.meta = doc.get("meta", {})
    return model.freeze()


def export(model: OptModel, fmt: str) -> str:
    """Dispatch to the MPS / CBF / JSON writer."""
    if fmt == "mps":
        return export_mps(model)
    if fmt == "cbf":
        return export_cbf(model)
    if fmt in ("model-json", "json"):
        return export_model_json(model)
    raise ExportError(f"unknown export format {fmt!r}")


def models_equal(a: OptModel, b: OptModel) -> bool:
    """Structural equality via the canonical JSON dump."""
    fa = a if a.frozen else a.copy().freeze()
    fb = b if b.frozen else b.copy().freeze()
    return export_model_json(fa) == export_model_json(fb)


__all__ = [
    "OptModel", "Variable", "LinearConstraint", "ConeRow", "NonlinearRow",
    "Solution", "LPData", "relax_integrality", "export", "export_mps",
    "export_cbf", "export_model_json", "load_model_json", "models_equal",
    "FrozenModelError", "ExportError", "MODEL_SCHEMA",
]
