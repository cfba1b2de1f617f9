"""Free-format MPS export/import and ``name value`` solution files."""

from __future__ import annotations

import math
import re

import numpy as np

from ..errors import ParseError, SolverError
from ..model.ir import INF, ModelIR
from .types import MIPSolution, SolverConfig

__all__ = ["export_mps", "import_mps", "export_solution", "import_solution"]

OBJ_ROW = "OBJ"
AUX_PREFIX = "SOSZ#"  # segment binaries written in place of SOS2 sets
_SENSE_CODE = {"<=": "L", ">=": "G", "==": "E"}
_CODE_SENSE = {v: k for k, v in _SENSE_CODE.items()}


def _num(v):
    return f"{float(v):.17g}"


def _check_names(model):
    seen = {OBJ_ROW: "objective"}
    for r in model.rows:
        if r.name in seen or re.search(r"\s", r.name):
            raise SolverError("NAME_COLLISION", f"row {r.name!r} (tag {r.tag})")
        seen[r.name] = r.tag
    seen = set()
    for v in model.variables:
        if v.name in seen or re.search(r"\s", v.name):
            raise SolverError("NAME_COLLISION", f"variable {v.name!r} (family {v.family})")
        seen.add(v.name)
        if v.name.startswith(AUX_PREFIX):
            raise SolverError("NAME_COLLISION", f"variable {v.name!r} uses a reserved prefix")


def _segment_rows(model):
    """Rows and binaries replacing each SOS2 set: one binary per segment,
    ``sum z = 1`` and ``lambda_n <= z_(n-1) + z_n``."""
    rows, cols = [], []
    names = [v.name for v in model.variables]
    for s in model.sos2:
        z = [f"{AUX_PREFIX}{s.name}#{n}" for n in range(len(s.members) - 1)]
        cols += z
        rows.append((f"{AUX_PREFIX}{s.name}#one", "E", {zn: 1.0 for zn in z}, 1.0))
        for pos, vid in enumerate(s.members):
            coeffs = {names[vid]: 1.0}
            if pos > 0:
                coeffs[z[pos - 1]] = -1.0
            if pos < len(z):
                coeffs[z[pos]] = -1.0
            rows.append((f"{AUX_PREFIX}{s.name}#link{pos}", "L", coeffs, 0.0))
    return rows, cols


def export_mps(model, sos="native"):
    """Free-format MPS text.

    ``sos="native"`` writes an ``SOS`` section with ``S2`` sets;
    ``sos="binary"`` writes segment binaries instead, for readers without SOS
    support.  Their columns start with ``SOSZ#`` and are skipped by
    :func:`import_solution`.
    """
    if sos not in ("native", "binary"):
        raise SolverError("BAD_OPTION", f"sos={sos!r}")
    _check_names(model)
    aux_rows, aux_cols = _segment_rows(model) if sos == "binary" else ([], [])
    out = [f"NAME {model.name or 'model'}", "OBJSENSE", f"    {model.sense.upper()}", "ROWS",
           f" N  {OBJ_ROW}"]
    out += [f" {_SENSE_CODE[r.sense]}  {r.name}" for r in model.rows]
    out += [f" {code}  {name}" for name, code, _, _ in aux_rows]
    out.append("COLUMNS")
    by_col = [[] for _ in model.variables]
    for vid, a in model.objective.items():
        by_col[vid].append((OBJ_ROW, a))
    for r in model.rows:
        for vid, a in r.coeffs.items():
            by_col[vid].append((r.name, a))
    index = {v.name: i for i, v in enumerate(model.variables)}
    aux_entries = {c: [] for c in aux_cols}
    for name, _, coeffs, _ in aux_rows:
        for col, a in coeffs.items():
            if col in index:
                by_col[index[col]].append((name, a))
            else:
                aux_entries[col].append((name, a))
    in_int = False
    marker = 0
    columns = [(v.name, v.kind == "B", by_col[vid]) for vid, v in enumerate(model.variables)]
    columns += [(c, True, aux_entries[c]) for c in aux_cols]
    for cname, want_int, entries in columns:
        if want_int != in_int:
            tag = "INTORG" if want_int else "INTEND"
            out.append(f"    MARKER{marker} 'MARKER' '{tag}'")
            marker += want_int
            in_int = want_int
        for row, a in entries or [(OBJ_ROW, 0.0)]:
            out.append(f"    {cname} {row} {_num(a)}")
    if in_int:
        out.append(f"    MARKER{marker} 'MARKER' 'INTEND'")
    out.append("RHS")
    if model.constant:
        out.append(f"    RHS {OBJ_ROW} {_num(-model.constant)}")
    for r in model.rows:
        if r.rhs != 0.0:
            out.append(f"    RHS {r.name} {_num(r.rhs)}")
    for name, _, _, rhs in aux_rows:
        if rhs != 0.0:
            out.append(f"    RHS {name} {_num(rhs)}")
    out.append("BOUNDS")
    for c in aux_cols:
        out.append(f" LO BND {c} 0")
        out.append(f" UP BND {c} 1")
    for v in model.variables:
        lb, ub = v.lb, v.ub
        if lb == ub:
            out.append(f" FX BND {v.name} {_num(lb)}")
            continue
        if lb == -INF and ub == INF:
            out.append(f" FR BND {v.name}")
            continue
        if lb == -INF:
            out.append(f" MI BND {v.name}")
        elif lb != 0.0 or v.kind == "B":
            out.append(f" LO BND {v.name} {_num(lb)}")
        if ub != INF:
            out.append(f" UP BND {v.name} {_num(ub)}")
        elif v.kind == "B":
            out.append(f" PL BND {v.name}")
    names = [v.name for v in model.variables]
    if model.sos2 and sos == "native":
        out.append("SOS")
    for s in model.sos2 if sos == "native" else ():
        out.append(f" S2 {s.name}")
        for vid, w in zip(s.members, s.weights):
            out.append(f"    {names[vid]} {_num(w)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def _split_name(name):
    m = re.fullmatch(r"([^()]+)\((.*)\)", name)
    if m:
        return m.group(1), tuple(m.group(2).split(","))
    return name, ()


def _tag_of(name):
    return re.split(r"[(#]", name, maxsplit=1)[0]


def import_mps(text):
    """Parse free-format MPS written by :func:`export_mps` (or compatible)."""
    section = None
    name = "model"
    sense = "min"
    row_sense = {}
    row_order = []
    obj_row = None
    cols = {}
    col_order = []
    integer = set()
    rhs = {}
    bounds = {}
    sos = []
    in_int = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("*"):
            continue
        head = raw[:1] not in (" ", "\t")
        tok = line.split()
        if head:
            section = tok[0].upper()
            if section == "NAME":
                name = tok[1] if len(tok) > 1 else "model"
            elif section == "OBJSENSE" and len(tok) > 1:
                sense = tok[1].lower()
            elif section == "ENDATA":
                break
            elif section not in ("ROWS", "COLUMNS", "RHS", "BOUNDS", "SOS", "RANGES",
                                 "OBJSENSE"):
                raise ParseError(f"line {lineno}", f"unknown section {tok[0]}")
            continue
        where = f"line {lineno}"
        if section == "OBJSENSE":
            sense = tok[0].lower()
        elif section == "ROWS":
            code, rname = tok[0].upper(), tok[1]
            if code == "N":
                if obj_row is None:
                    obj_row = rname
                continue
            if code not in _CODE_SENSE:
                raise ParseError(where, f"row type {code}")
            if rname in row_sense:
                raise SolverError("NAME_COLLISION", f"row {rname}")
            row_sense[rname] = _CODE_SENSE[code]
            row_order.append(rname)
        elif section == "COLUMNS":
            if len(tok) >= 3 and tok[1] == "'MARKER'":
                in_int = tok[2] == "'INTORG'"
                continue
            cname = tok[0]
            if cname not in cols:
                cols[cname] = {}
                col_order.append(cname)
            if in_int:
                integer.add(cname)
            for k in range(1, len(tok) - 1, 2):
                cols[cname][tok[k]] = float(tok[k + 1])
        elif section == "RHS":
            for k in range(1, len(tok) - 1, 2):
                rhs[tok[k]] = float(tok[k + 1])
        elif section == "BOUNDS":
            code, cname = tok[0].upper(), tok[2]
            val = float(tok[3]) if len(tok) > 3 else None
            bounds.setdefault(cname, []).append((code, val))
        elif section == "SOS":
            if tok[0].upper() in ("S1", "S2"):
                if tok[0].upper() != "S2":
                    raise ParseError(where, "only S2 sets are supported")
                sos.append((tok[1], []))
            else:
                sos[-1][1].append((tok[0], float(tok[1])))
        elif section == "RANGES":
            raise ParseError(where, "RANGES are not supported")
    if sense not in ("max", "min", "maximize", "minimize"):
        raise ParseError("OBJSENSE", sense)
    sense = sense[:3]
    m = ModelIR(name=name)
    ids = {}
    for cname in col_order:
        lb, ub = 0.0, INF
        kind = "B" if cname in integer else "C"
        for code, val in bounds.get(cname, []):
            if code == "FX":
                lb = ub = val
            elif code == "FR":
                lb, ub = -INF, INF
            elif code == "MI":
                lb = -INF
            elif code == "PL":
                ub = INF
            elif code == "LO":
                lb = val
            elif code == "UP":
                ub = val
            elif code == "BV":
                lb, ub, kind = 0.0, 1.0, "B"
            else:
                raise ParseError(f"BOUNDS {cname}", f"bound type {code}")
        if kind == "B" and (lb < 0 or ub > 1):
            raise ParseError(f"BOUNDS {cname}", "integer columns must be binary")
        family, index = _split_name(cname)
        if m.has_var(family, *index):
            raise SolverError("NAME_COLLISION", f"variable {cname}")
        ids[cname] = m.add_var(family, index, kind, lb, ub)
    by_row = {r: {} for r in row_order}
    obj = {}
    for cname, entries in cols.items():
        for rname, a in entries.items():
            if rname == obj_row:
                obj[ids[cname]] = a
            elif rname in by_row:
                by_row[rname][ids[cname]] = a
            else:
                raise ParseError(f"COLUMNS {cname}", f"unknown row {rname}")
    for rname in row_order:
        m.add_row(_tag_of(rname), by_row[rname], row_sense[rname], rhs.get(rname, 0.0),
                  name=rname)
    for sname, members in sos:
        firm = _split_name(sname)[1]
        m.add_sos2([ids[c] for c, _ in members], [w for _, w in members],
                   firm=firm[0] if firm else "", name=sname)
    m.set_objective(sense, obj, -rhs.get(obj_row, 0.0) if obj_row else 0.0)
    return m.freeze()


def export_solution(model, x):
    return "".join(f"{v.name} {_num(val)}\n" for v, val in zip(model.variables, x))


def import_solution(text, model, cfg=None):
    """Bind a ``name value`` file to ``model`` and re-verify feasibility.

    Returns a :class:`MIPSolution` with status ``"accepted"`` or
    ``"rejected"``; rejected points list their violations.  Segment-binary
    columns from ``export_mps(sos="binary")`` are ignored.
    """
    cfg = cfg or SolverConfig()
    index = {v.name: i for i, v in enumerate(model.variables)}
    x = np.full(model.n_vars, math.nan)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        if len(tok) != 2:
            raise ParseError(f"line {lineno}", "expected 'name value'")
        if tok[0].startswith(AUX_PREFIX):
            continue
        if tok[0] not in index:
            raise SolverError("UNKNOWN_VARIABLE", tok[0])
        try:
            x[index[tok[0]]] = float(tok[1])
        except ValueError as exc:
            raise ParseError(f"line {lineno}", str(exc)) from None
    missing = [model.variables[i].name for i in np.flatnonzero(np.isnan(x))]
    if missing:
        raise SolverError("MISSING_VARIABLE", ", ".join(missing[:5])
                          + (f" (+{len(missing) - 5} more)" if len(missing) > 5 else ""))
    viol = model.violations(x, cfg.feas_tol, cfg.int_tol)
    obj = model.objective_value(x)
    status = "rejected" if viol else "accepted"
    return MIPSolution(status, obj, x, math.nan, math.nan, 0, violations=viol)
