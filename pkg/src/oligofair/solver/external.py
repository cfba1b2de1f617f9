"""Cross-check route through HiGHS (``scipy.optimize.milp``).

SOS2 sets are rewritten with one binary per segment: ``sum z = 1`` and
``lambda_n <= z_{n-1} + z_n``.  The embedded solver never calls this module;
it serves large instances and independent verification.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import lil_matrix

from ..errors import SolverError
from .types import MIPSolution, SolverConfig

__all__ = ["solve_external", "solve_mps_file"]


def solve_external(model, cfg=None):
    cfg = cfg or SolverConfig()
    n = model.n_vars
    n_seg = sum(len(s.members) - 1 for s in model.sos2)
    n_extra_rows = sum(len(s.members) + 1 for s in model.sos2)
    N = n + n_seg
    M = model.n_rows + n_extra_rows
    A = lil_matrix((M, N))
    lo = np.empty(M)
    hi = np.empty(M)
    for i, r in enumerate(model.rows):
        for v, a in r.coeffs.items():
            A[i, v] = a
        lo[i] = r.rhs if r.sense in (">=", "==") else -np.inf
        hi[i] = r.rhs if r.sense in ("<=", "==") else np.inf
    row, col = model.n_rows, n
    for s in model.sos2:
        k = len(s.members)
        segs = list(range(col, col + k - 1))
        col += k - 1
        for z in segs:
            A[row, z] = 1.0
        lo[row], hi[row] = 1.0, 1.0
        row += 1
        for pos, vid in enumerate(s.members):
            A[row, vid] = 1.0
            if pos > 0:
                A[row, segs[pos - 1]] = -1.0
            if pos < k - 1:
                A[row, segs[pos]] = -1.0
            lo[row], hi[row] = -np.inf, 0.0
            row += 1
    c = np.zeros(N)
    for v, a in model.objective.items():
        c[v] = a
    sign = -1.0 if model.sense == "max" else 1.0
    lb = np.array([v.lb for v in model.variables] + [0.0] * n_seg)
    ub = np.array([v.ub for v in model.variables] + [1.0] * n_seg)
    integrality = np.array([1 if v.kind == "B" else 0 for v in model.variables] + [1] * n_seg)
    opts = {"mip_rel_gap": cfg.mip_gap, "presolve": True}
    if np.isfinite(cfg.time_limit):
        opts["time_limit"] = cfg.time_limit
    res = milp(sign * c, constraints=LinearConstraint(A.tocsr(), lo, hi),
               integrality=integrality, bounds=Bounds(lb, ub), options=opts)
    if res.status == 2:
        return MIPSolution("infeasible")
    if res.status == 3:
        return MIPSolution("unbounded")
    if res.x is None:
        raise SolverError("EXTERNAL_FAILED", res.message)
    x = res.x[:n].copy()
    ints = model.integer_ids()
    x[ints] = np.round(x[ints])
    obj = model.objective_value(x)
    bound = getattr(res, "mip_dual_bound", None)
    bound = sign * bound + model.constant if bound is not None and np.isfinite(bound) else obj
    gap = float(getattr(res, "mip_gap", 0.0) or 0.0)
    status = "optimal" if res.status == 0 else "time-limit"
    return MIPSolution(status, obj, x, bound, gap, int(getattr(res, "mip_node_count", 0) or 0))


def solve_mps_file(path, time_limit=None, mip_gap=1e-6):
    """Solve an MPS file with ``highspy`` and return ``name value`` text.

    The file must not contain an SOS section (export with ``sos="binary"``).
    """
    try:
        import highspy
    except ImportError as exc:  # optional test dependency
        raise SolverError("EXTERNAL_UNAVAILABLE", "highspy is not installed") from exc
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", float(mip_gap))
    if time_limit is not None:
        h.setOptionValue("time_limit", float(time_limit))
    if h.readModel(str(path)) != highspy.HighsStatus.kOk:
        raise SolverError("EXTERNAL_FAILED", f"highspy could not read {path}")
    h.run()
    status = h.getModelStatus()
    if status == highspy.HighsModelStatus.kInfeasible:
        raise SolverError("EXTERNAL_INFEASIBLE", str(path))
    values = h.getSolution().col_value
    lp = h.getLp()
    names = [lp.col_names_[j] for j in range(lp.num_col_)]
    integer = list(lp.integrality_) if len(lp.integrality_) else []
    lines = []
    for j, (name, val) in enumerate(zip(names, values)):
        if integer and integer[j] != highspy.HighsVarType.kContinuous:
            val = round(val)
        lines.append(f"{name} {float(val)!r}\n")
    return "".join(lines)
