"""Solver-independent linear model container with MPS and LP exchange formats."""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CONTINUOUS",
    "BINARY",
    "Variable",
    "Constraint",
    "MilpModel",
    "MpsFormatError",
    "lp_relaxation",
    "write_mps",
    "read_mps",
    "write_lp",
]

CONTINUOUS = "continuous"
BINARY = "binary"
SENSES = ("<=", "=", ">=")
_OBJ_ROW = "obj"


@dataclass
class Variable:
    name: str
    lb: float = 0.0
    ub: float = math.inf
    kind: str = CONTINUOUS
    tag: str = ""


@dataclass
class Constraint:
    name: str
    coefs: dict
    sense: str
    rhs: float

    def activity(self, values) -> float:
        return sum(c * values[v] for v, c in self.coefs.items())

    def violation(self, values) -> float:
        """Positive amount by which ``values`` breaks the row, else 0."""
        lhs = self.activity(values)
        if self.sense == "<=":
            return max(0.0, lhs - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass
class MilpModel:
    """Variables, linear rows and a linear objective, all in insertion order.

    Zero coefficients are never stored; repeated variables in one row are
    summed.
    """

    name: str = "model"
    variables: dict = field(default_factory=dict)
    constraints: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    sense: str = "min"
    _rows: dict = field(default_factory=dict, repr=False, compare=False)

    # -- construction --------------------------------------------------------
    def add_var(self, name, lb=0.0, ub=math.inf, kind=CONTINUOUS, tag="") -> str:
        if name in self.variables:
            raise ValueError(f"duplicate variable {name!r}")
        if any(ch.isspace() for ch in name) or name == _OBJ_ROW:
            raise ValueError(f"invalid variable name {name!r}")
        if kind == BINARY:
            lb, ub = 0.0, 1.0
        elif kind != CONTINUOUS:
            raise ValueError(f"unknown variable kind {kind!r}")
        if lb > ub:
            raise ValueError(f"variable {name!r}: lb > ub")
        self.variables[name] = Variable(name, float(lb), float(ub), kind, tag)
        return name

    def _clean(self, coefs) -> dict:
        out = {}
        items = coefs.items() if isinstance(coefs, dict) else coefs
        for v, c in items:
            if v not in self.variables:
                raise KeyError(f"unknown variable {v!r}")
            out[v] = out.get(v, 0.0) + float(c)
        return {v: c for v, c in out.items() if c != 0.0}

    def add_constraint(self, name, coefs, sense, rhs, skip_duplicate=False) -> bool:
        """Append a row.  Returns False if ``skip_duplicate`` suppressed it."""
        if sense not in SENSES:
            raise ValueError(f"unknown sense {sense!r}")
        if name in self._rows:
            if skip_duplicate:
                return False
            raise ValueError(f"duplicate constraint {name!r}")
        if any(ch.isspace() for ch in name) or name == _OBJ_ROW:
            raise ValueError(f"invalid constraint name {name!r}")
        row = Constraint(name, self._clean(coefs), sense, float(rhs))
        self._rows[name] = len(self.constraints)
        self.constraints.append(row)
        return True

    def set_objective(self, coefs, sense="max") -> None:
        if sense not in ("max", "min"):
            raise ValueError(f"unknown objective sense {sense!r}")
        self.objective = self._clean(coefs)
        self.sense = sense

    # -- queries -------------------------------------------------------------
    def constraint(self, name) -> Constraint:
        return self.constraints[self._rows[name]]

    def has_constraint(self, name) -> bool:
        return name in self._rows

    @property
    def binaries(self) -> list:
        return [v.name for v in self.variables.values() if v.kind == BINARY]

    def by_tag(self, tag) -> list:
        return [v.name for v in self.variables.values() if v.tag == tag]

    def objective_value(self, values) -> float:
        return sum(c * values[v] for v, c in self.objective.items())

    def max_violation(self, values, relative=False) -> float:
        """Largest row or bound violation; ``relative`` scales rows by ``1 + ||row||_inf``."""
        worst = 0.0
        for row in self.constraints:
            viol = row.violation(values)
            if relative:
                viol /= 1.0 + max((abs(c) for c in row.coefs.values()), default=0.0)
            worst = max(worst, viol)
        for v in self.variables.values():
            x = values[v.name]
            worst = max(worst, v.lb - x, x - v.ub)
        return worst

    def check(self) -> None:
        """Raise ValueError if the container invariants are broken."""
        names = set()
        for row in self.constraints:
            if row.name in names:
                raise ValueError(f"duplicate constraint {row.name!r}")
            names.add(row.name)
            for v in row.coefs:
                if v not in self.variables:
                    raise ValueError(f"row {row.name!r} references unknown variable {v!r}")
        for v in self.objective:
            if v not in self.variables:
                raise ValueError(f"objective references unknown variable {v!r}")
        for v in self.variables.values():
            if v.kind == BINARY and (v.lb, v.ub) != (0.0, 1.0):
                raise ValueError(f"binary {v.name!r} must have bounds [0, 1]")

    def dense(self):
        """``(names, c, A, senses, b, lb, ub)`` with rows in insertion order."""
        names = list(self.variables)
        col = {v: k for k, v in enumerate(names)}
        A = np.zeros((len(self.constraints), len(names)))
        for r, row in enumerate(self.constraints):
            for v, c in row.coefs.items():
                A[r, col[v]] = c
        c = np.zeros(len(names))
        for v, coef in self.objective.items():
            c[col[v]] = coef
        senses = [row.sense for row in self.constraints]
        b = np.array([row.rhs for row in self.constraints], dtype=float)
        lb = np.array([self.variables[v].lb for v in names])
        ub = np.array([self.variables[v].ub for v in names])
        return names, c, A, senses, b, lb, ub

    def copy(self) -> "MilpModel":
        return copy.deepcopy(self)

    def __eq__(self, other):
        if not isinstance(other, MilpModel):
            return NotImplemented
        return (
            self.name == other.name
            and self.sense == other.sense
            and list(self.variables.items()) == list(other.variables.items())
            and self.constraints == other.constraints
            and self.objective == other.objective
        )

    def __repr__(self):
        return (
            f"MilpModel(name={self.name!r}, vars={len(self.variables)}, "
            f"binaries={len(self.binaries)}, rows={len(self.constraints)}, sense={self.sense!r})"
        )


def lp_relaxation(m: MilpModel) -> MilpModel:
    out = m.copy()
    for v in out.variables.values():
        if v.kind == BINARY:
            v.kind = CONTINUOUS
            v.lb, v.ub = 0.0, 1.0
    return out


# --- number formatting ------------------------------------------------------

def _fmt(x: float) -> str:
    if x == math.inf:
        return "1e+30"
    if x == -math.inf:
        return "-1e+30"
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def _columns(m: MilpModel) -> dict:
    cols = {v: [] for v in m.variables}
    for v, c in m.objective.items():
        cols[v].append((_OBJ_ROW, c))
    for row in m.constraints:
        for v, c in row.coefs.items():
            cols[v].append((row.name, c))
    return cols


_SENSE_CODE = {"<=": "L", ">=": "G", "=": "E"}


def write_mps(m: MilpModel) -> str:
    """Free-format MPS.  Maximization is written with ``OBJSENSE MAX``."""
    out = [f"* model {m.name}"]
    for v in m.variables.values():
        if v.tag:
            out.append(f"* @tag {v.name} {v.tag}")
    out.append(f"NAME {m.name}")
    if m.sense == "max":
        out += ["OBJSENSE", "    MAX"]
    out.append("ROWS")
    out.append(f" N  {_OBJ_ROW}")
    for row in m.constraints:
        out.append(f" {_SENSE_CODE[row.sense]}  {row.name}")
    out.append("COLUMNS")
    cols = _columns(m)
    in_int = False
    marker = 0
    for v in m.variables.values():
        is_bin = v.kind == BINARY
        if is_bin != in_int:
            tag = "'INTORG'" if is_bin else "'INTEND'"
            out.append(f"    MARKER{marker:04d}  'MARKER'  {tag}")
            marker += 1
            in_int = is_bin
        entries = cols[v.name] or [(_OBJ_ROW, 0.0)]
        for row, c in entries:
            out.append(f"    {v.name}  {row}  {_fmt(c)}")
    if in_int:
        out.append(f"    MARKER{marker:04d}  'MARKER'  'INTEND'")
    out.append("RHS")
    for row in m.constraints:
        if row.rhs != 0.0:
            out.append(f"    RHS  {row.name}  {_fmt(row.rhs)}")
    out.append("BOUNDS")
    for v in m.variables.values():
        if v.kind == BINARY:
            out.append(f" LO BND  {v.name}  0")
            out.append(f" UP BND  {v.name}  1")
            continue
        if v.lb == v.ub:
            out.append(f" FX BND  {v.name}  {_fmt(v.lb)}")
            continue
        if v.lb == -math.inf and v.ub == math.inf:
            out.append(f" FR BND  {v.name}")
            continue
        if v.lb == -math.inf:
            out.append(f" MI BND  {v.name}")
        elif v.lb != 0.0:
            out.append(f" LO BND  {v.name}  {_fmt(v.lb)}")
        if v.ub != math.inf:
            out.append(f" UP BND  {v.name}  {_fmt(v.ub)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


class MpsFormatError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


_SECTIONS = {"NAME", "OBJSENSE", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA", "RANGES"}


def _num(tok: str, lineno: int) -> float:
    try:
        x = float(tok)
    except ValueError:
        raise MpsFormatError(lineno, f"expected a number, got {tok!r}") from None
    if x >= 1e30:
        return math.inf
    if x <= -1e30:
        return -math.inf
    return x


def read_mps(text: str) -> MilpModel:
    """Parse free-format MPS as written by :func:`write_mps` (and most tools).

    Integer columns must end up with bounds [0, 1]; general integers are
    rejected.
    """
    m = MilpModel()
    tags = {}
    section = None
    obj_row = None
    row_sense = {}
    row_coefs = {}
    row_order = []
    rhs = {}
    cols = {}
    col_int = {}
    bounds = {}
    in_int = False
    sense = "min"
    ended = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip()
        if not line.strip():
            continue
        if line.startswith("*"):
            toks = line[1:].split()
            if len(toks) == 3 and toks[0] == "@tag":
                tags[toks[1]] = toks[2]
            continue
        toks = line.split()
        if not line[0].isspace():
            key = toks[0].upper()
            if key not in _SECTIONS:
                raise MpsFormatError(lineno, f"unknown section {toks[0]!r}")
            if key == "RANGES":
                raise MpsFormatError(lineno, "RANGES section is not supported")
            section = key
            if key == "NAME":
                m.name = toks[1] if len(toks) > 1 else ""
            elif key == "OBJSENSE" and len(toks) > 1:
                sense = _objsense(toks[1], lineno)
            elif key == "ENDATA":
                ended = True
                break
            continue
        if section == "OBJSENSE":
            sense = _objsense(toks[0], lineno)
        elif section == "ROWS":
            if len(toks) != 2:
                raise MpsFormatError(lineno, "ROWS entries need a type and a name")
            kind, name = toks[0].upper(), toks[1]
            if kind == "N":
                if obj_row is None:
                    obj_row = name
                continue
            if kind not in ("L", "G", "E"):
                raise MpsFormatError(lineno, f"unknown row type {toks[0]!r}")
            if name in row_sense:
                raise MpsFormatError(lineno, f"duplicate row {name!r}")
            row_sense[name] = {"L": "<=", "G": ">=", "E": "="}[kind]
            row_coefs[name] = []
            row_order.append(name)
        elif section == "COLUMNS":
            if len(toks) >= 3 and toks[1].strip("'\"").upper() == "MARKER":
                flag = toks[2].strip("'\"").upper()
                if flag == "INTORG":
                    in_int = True
                elif flag == "INTEND":
                    in_int = False
                else:
                    raise MpsFormatError(lineno, f"unknown marker {toks[2]!r}")
                continue
            if len(toks) not in (3, 5):
                raise MpsFormatError(lineno, "COLUMNS entries need name row value [row value]")
            name = toks[0]
            if name not in cols:
                cols[name] = []
                col_int[name] = in_int
            for r, val in zip(toks[1::2], toks[2::2]):
                x = _num(val, lineno)
                if r == obj_row:
                    cols[name].append((None, x))
                elif r in row_sense:
                    cols[name].append((r, x))
                else:
                    raise MpsFormatError(lineno, f"unknown row {r!r}")
        elif section == "RHS":
            if len(toks) not in (3, 5, 2, 4):
                raise MpsFormatError(lineno, "bad RHS entry")
            pairs = toks[1:] if len(toks) % 2 == 1 else toks
            for r, val in zip(pairs[0::2], pairs[1::2]):
                x = _num(val, lineno)
                if r == obj_row:
                    continue
                if r not in row_sense:
                    raise MpsFormatError(lineno, f"unknown row {r!r}")
                rhs[r] = x
        elif section == "BOUNDS":
            if len(toks) < 3:
                raise MpsFormatError(lineno, "bad BOUNDS entry")
            btype, name = toks[0].upper(), toks[2]
            if name not in cols:
                raise MpsFormatError(lineno, f"bound on unknown column {name!r}")
            lb, ub = bounds.get(name, (None, None))
            val = _num(toks[3], lineno) if len(toks) > 3 else None
            if btype in ("LO", "UP", "FX", "LI", "UI") and val is None:
                raise MpsFormatError(lineno, f"{btype} bound needs a value")
            if btype in ("LO", "LI"):
                lb = val
            elif btype in ("UP", "UI"):
                ub = val
            elif btype == "FX":
                lb = ub = val
            elif btype == "FR":
                lb, ub = -math.inf, math.inf
            elif btype == "MI":
                lb = -math.inf
            elif btype == "PL":
                ub = math.inf
            elif btype == "BV":
                lb, ub = 0.0, 1.0
                col_int[name] = True
            else:
                raise MpsFormatError(lineno, f"unknown bound type {toks[0]!r}")
            bounds[name] = (lb, ub)
        else:
            raise MpsFormatError(lineno, "data line outside of a section")
    if not ended:
        raise MpsFormatError(len(text.splitlines()), "missing ENDATA")
    objective = []
    for name, entries in cols.items():
        lb, ub = bounds.get(name, (None, None))
        if col_int[name]:
            lb = 0.0 if lb is None else lb
            ub = 1.0 if ub is None else ub
            if (lb, ub) != (0.0, 1.0):
                raise MpsFormatError(0, f"general integer column {name!r} is not supported")
            m.add_var(name, kind=BINARY, tag=tags.get(name, ""))
        else:
            m.add_var(name, 0.0 if lb is None else lb, math.inf if ub is None else ub, tag=tags.get(name, ""))
        for r, x in entries:
            if r is None:
                objective.append((name, x))
            else:
                row_coefs[r].append((name, x))
    for r in row_order:
        m.add_constraint(r, row_coefs[r], row_sense[r], rhs.get(r, 0.0))
    m.set_objective(objective, sense)
    return m


def _objsense(tok: str, lineno: int) -> str:
    t = tok.upper()
    if t in ("MAX", "MAXIMIZE"):
        return "max"
    if t in ("MIN", "MINIMIZE"):
        return "min"
    raise MpsFormatError(lineno, f"unknown objective sense {tok!r}")


def _lp_terms(coefs: dict) -> list:
    terms = []
    for v, c in coefs.items():
        sign = "-" if c < 0 else "+"
        terms.append(f"{sign} {_fmt(abs(c))} {v}")
    return terms or ["0"]


def _lp_wrap(head: str, terms: list, tail: str = "") -> list:
    lines, cur = [], head
    for t in terms:
        if len(cur) + len(t) + 1 > 200:
            lines.append(cur)
            cur = "   "
        cur += " " + t
    if tail:
        cur += " " + tail
    lines.append(cur)
    return lines


def write_lp(m: MilpModel) -> str:
    """CPLEX-style LP text.  Variable tags go into ``\\`` comment lines."""
    out = [f"\\ model {m.name}"]
    for v in m.variables.values():
        if v.tag:
            out.append(f"\\ @tag {v.name} {v.tag}")
    out.append("Maximize" if m.sense == "max" else "Minimize")
    out += _lp_wrap(f" {_OBJ_ROW}:", _lp_terms(m.objective))
    out.append("Subject To")
    for row in m.constraints:
        out += _lp_wrap(f" {row.name}:", _lp_terms(row.coefs), f"{row.sense} {_fmt(row.rhs)}")
    out.append("Bounds")
    for v in m.variables.values():
        if v.kind == BINARY:
            continue
        if v.lb == -math.inf and v.ub == math.inf:
            out.append(f" {v.name} free")
        elif v.lb == v.ub:
            out.append(f" {v.name} = {_fmt(v.lb)}")
        else:
            lo = "-inf" if v.lb == -math.inf else _fmt(v.lb)
            hi = "+inf" if v.ub == math.inf else _fmt(v.ub)
            out.append(f" {lo} <= {v.name} <= {hi}")
    bins = m.binaries
    if bins:
        out.append("Binaries")
        out += [f" {v}" for v in bins]
    out.append("End")
    return "\n".join(out) + "\n"
