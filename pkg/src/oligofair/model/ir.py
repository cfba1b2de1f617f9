"""Solver-agnostic model representation: variables, linear rows, SOS2 sets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ModelError

__all__ = ["Variable", "Row", "SOS2Set", "ModelIR", "var_name"]

INF = float("inf")


def var_name(family, index):
    if not index:
        return family
    return f"{family}({','.join(str(i) for i in index)})"


@dataclass(frozen=True)
class Variable:
    name: str
    family: str
    index: tuple
    kind: str  # "C" continuous or "B" binary
    lb: float
    ub: float


@dataclass(frozen=True)
class Row:
    name: str
    tag: str
    coeffs: dict  # var id -> coefficient
    sense: str  # "<=", ">=", "=="
    rhs: float


@dataclass(frozen=True)
class SOS2Set:
    name: str
    members: tuple  # ordered var ids
    weights: tuple  # reference weights, strictly increasing
    firm: str = ""


@dataclass
class ModelIR:
    """Mutable while building; call :meth:`freeze` before handing to solvers."""

    name: str = "model"
    variables: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    sos2: list = field(default_factory=list)
    sense: str = "max"
    objective: dict = field(default_factory=dict)
    constant: float = 0.0
    _ids: dict = field(default_factory=dict, repr=False)
    _frozen: bool = field(default=False, repr=False)

    # -- building --------------------------------------------------------------
    def _check_open(self):
        if self._frozen:
            raise ModelError("FROZEN", f"model {self.name} is frozen")

    def add_var(self, family, index=(), kind="C", lb=0.0, ub=INF):
        self._check_open()
        key = (family, tuple(index))
        if key in self._ids:
            raise ModelError("DUPLICATE_VARIABLE", var_name(*key))
        if kind == "B":
            lb, ub = max(0.0, lb), min(1.0, ub)
        vid = len(self.variables)
        self.variables.append(Variable(var_name(*key), family, tuple(index), kind,
                                       float(lb), float(ub)))
        self._ids[key] = vid
        return vid

    def var(self, family, *index):
        return self._ids[(family, tuple(index))]

    def has_var(self, family, *index):
        return (family, tuple(index)) in self._ids

    def add_row(self, tag, coeffs, sense, rhs, index=(), name=None):
        self._check_open()
        if sense not in ("<=", ">=", "=="):
            raise ModelError("BAD_SENSE", sense)
        merged = {}
        for vid, a in coeffs.items() if isinstance(coeffs, dict) else coeffs:
            if not 0 <= vid < len(self.variables):
                raise ModelError("UNKNOWN_VARIABLE", f"row {tag}: variable id {vid}")
            merged[vid] = merged.get(vid, 0.0) + float(a)
        merged = {v: a for v, a in merged.items() if a != 0.0}
        rid = len(self.rows)
        if name is None:
            name = var_name(tag, index) if index else f"{tag}#{rid}"
        self.rows.append(Row(name, tag, merged, sense, float(rhs)))
        return rid

    def add_sos2(self, members, weights, firm="", name=None):
        self._check_open()
        members = tuple(members)
        weights = tuple(float(w) for w in weights)
        if len(members) < 2:
            raise ModelError("SOS2_TOO_SMALL", "an SOS2 set needs at least two members")
        if len(weights) != len(members) or any(b <= a for a, b in zip(weights, weights[1:])):
            raise ModelError("SOS2_WEIGHTS", "weights must be strictly increasing")
        self.sos2.append(SOS2Set(name or f"sos2_{len(self.sos2)}", members, weights, firm))
        return len(self.sos2) - 1

    def set_objective(self, sense, coeffs, constant=0.0):
        self._check_open()
        if sense not in ("max", "min"):
            raise ModelError("BAD_SENSE", sense)
        self.sense = sense
        self.objective = {int(v): float(a) for v, a in coeffs.items() if a != 0.0}
        self.constant = float(constant)

    def set_bounds(self, vid, lb=None, ub=None):
        self._check_open()
        v = self.variables[vid]
        self.variables[vid] = Variable(v.name, v.family, v.index, v.kind,
                                       v.lb if lb is None else float(lb),
                                       v.ub if ub is None else float(ub))

    def freeze(self):
        self._frozen = True
        return self

    # -- queries ---------------------------------------------------------------
    @property
    def n_vars(self):
        return len(self.variables)

    @property
    def n_rows(self):
        return len(self.rows)

    def integer_ids(self):
        return [i for i, v in enumerate(self.variables) if v.kind == "B"]

    def rows_with_tag(self, tag):
        return [r for r in self.rows if r.tag == tag]

    def tag_counts(self):
        counts = {}
        for r in self.rows:
            counts[r.tag] = counts.get(r.tag, 0) + 1
        return counts

    def arrays(self):
        """Dense arrays ``(c, A, senses, b, lb, ub)`` with ``c`` in the model's sense."""
        n, m = self.n_vars, self.n_rows
        A = np.zeros((m, n))
        b = np.empty(m)
        senses = []
        for i, r in enumerate(self.rows):
            for vid, a in r.coeffs.items():
                A[i, vid] = a
            b[i] = r.rhs
            senses.append(r.sense)
        c = np.zeros(n)
        for vid, a in self.objective.items():
            c[vid] = a
        lb = np.array([v.lb for v in self.variables], dtype=float)
        ub = np.array([v.ub for v in self.variables], dtype=float)
        return c, A, senses, b, lb, ub

    def objective_value(self, x):
        return self.constant + sum(a * x[v] for v, a in self.objective.items())

    def row_activity(self, row, x):
        return sum(a * x[v] for v, a in row.coeffs.items())

    def violations(self, x, tol=1e-7, int_tol=1e-6):
        """List of ``(name, amount)`` for rows, bounds, integrality and SOS2 sets
        violated by ``x`` by more than the tolerance (scaled by row magnitude)."""
        out = []
        for v, val in zip(self.variables, x):
            scale = max(1.0, abs(val))
            if val < v.lb - tol * scale or val > v.ub + tol * scale:
                out.append((v.name, max(v.lb - val, val - v.ub)))
            if v.kind == "B" and abs(val - round(val)) > int_tol:
                out.append((v.name, abs(val - round(val))))
        for r in self.rows:
            act = self.row_activity(r, x)
            scale = max(1.0, abs(r.rhs), *(abs(a * x[v]) for v, a in r.coeffs.items()))
            if r.sense == "<=":
                amt = act - r.rhs
            elif r.sense == ">=":
                amt = r.rhs - act
            else:
                amt = abs(act - r.rhs)
            if amt > tol * scale:
                out.append((r.name, amt))
        for s in self.sos2:
            nz = [n for n, vid in enumerate(s.members) if abs(x[vid]) > int_tol]
            if nz and nz[-1] - nz[0] > 1:
                out.append((s.name, float(len(nz))))
        return out

    def listing(self):
        """Human-readable constraint listing with provenance tags."""
        names = [v.name for v in self.variables]
        lines = [f"\\ model {self.name}", f"{self.sense}imize"]

        def expr(coeffs):
            parts = [f"{a:+.17g} {names[v]}" for v, a in sorted(coeffs.items())]
            return " ".join(parts) if parts else "0"

        obj = expr(self.objective)
        if self.constant:
            obj += f" {self.constant:+.17g}"
        lines.append(f"  obj: {obj}")
        lines.append("subject to")
        for r in self.rows:
            lines.append(f"  [{r.tag}] {r.name}: {expr(r.coeffs)} {r.sense} {r.rhs:.17g}")
        lines.append("bounds")
        for v in self.variables:
            lines.append(f"  {v.lb:.17g} <= {v.name} <= {v.ub:.17g}"
                         + (" binary" if v.kind == "B" else ""))
        for s in self.sos2:
            members = ", ".join(f"{names[m]}:{w:.17g}" for m, w in zip(s.members, s.weights))
            lines.append(f"  sos2 {s.name} [{s.firm}]: {members}")
        return "\n".join(lines) + "\n"
