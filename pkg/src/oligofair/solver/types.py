"""Solver configuration and result containers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import SolverError

__all__ = ["SolverConfig", "Basis", "LPSolution", "MIPSolution", "NodeRecord"]


@dataclass(frozen=True)
class SolverConfig:
    feas_tol: float = 1e-7
    opt_tol: float = 1e-9
    int_tol: float = 1e-6
    mip_gap: float = 1e-6
    node_limit: int = 200_000
    time_limit: float = float("inf")
    workers: int = 1
    heuristic_every: int = 50
    max_lp_iter: int = 0  # 0: scale with problem size

    def __post_init__(self):
        for name in ("feas_tol", "opt_tol", "int_tol"):
            if not getattr(self, name) > 0:
                raise SolverError("BAD_CONFIG", f"{name} must be positive")
        if self.mip_gap < 0:
            raise SolverError("BAD_CONFIG", "mip_gap must be nonnegative")
        if self.workers < 1:
            raise SolverError("BAD_CONFIG", "workers must be >= 1")


@dataclass(frozen=True)
class Basis:
    """Column indices of the basis plus a status code per column
    (0 at lower, 1 at upper, 2 free at zero, 3 basic)."""

    basic: tuple
    status: tuple
    art_sign: tuple = ()


@dataclass
class LPSolution:
    status: str  # optimal | infeasible | unbounded | iteration_limit | numerical
    objective: float = float("nan")
    x: np.ndarray = None
    duals: np.ndarray = None
    reduced_costs: np.ndarray = None
    basis: Basis = None
    iterations: int = 0

    @property
    def ok(self):
        return self.status == "optimal"


@dataclass(frozen=True)
class NodeRecord:
    node_id: int
    parent: int
    depth: int
    lp_bound: float  # objective of the node LP (model sense); nan if infeasible
    incumbent: float  # incumbent objective when the node was evaluated
    global_bound: float  # best open bound at that moment
    status: str
    branch: str


@dataclass
class MIPSolution:
    status: str  # optimal | infeasible | gap-limit | node-limit | time-limit | unbounded
    objective: float = float("nan")
    x: np.ndarray = None
    best_bound: float = float("nan")
    gap: float = float("inf")
    nodes: int = 0
    lp_iterations: int = 0
    node_log: list = field(default_factory=list)
    violations: list = field(default_factory=list)

    @property
    def has_solution(self):
        return self.x is not None
