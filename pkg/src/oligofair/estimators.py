"""scikit-learn style wrappers around the three allocation schemes.

``fit`` takes an :class:`Instance` in place of a feature matrix; there is no
``predict`` because an allocation is not a function of new samples.  The
wrappers exist so the solves compose with ``get_params``/``set_params`` and
``sklearn.base.clone`` in parameter sweeps.
"""

from __future__ import annotations

import math

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .game import compute_status_quo, solve_nash, solve_social_welfare
from .solver.types import SolverConfig

__all__ = ["StatusQuoAllocator", "SocialWelfareAllocator", "NashBargainingAllocator"]


class _Allocator(BaseEstimator):
    def _cfg(self):
        return SolverConfig(time_limit=self.time_limit if self.time_limit is not None
                            else math.inf, workers=self.workers)

    def _check_fitted(self):
        if not hasattr(self, "outcome_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted")

    @property
    def total_profit_(self):
        self._check_fitted()
        return self.outcome_.total_profit


class StatusQuoAllocator(_Allocator):
    def __init__(self, solver="embedded", time_limit=None, workers=1):
        self.solver = solver
        self.time_limit = time_limit
        self.workers = workers

    def fit(self, instance, y=None):
        sq = compute_status_quo(instance, self._cfg(), self.solver)
        self.status_quo_ = sq
        self.outcome_ = sq.outcome
        self.profits_ = dict(sq.profits)
        return self


class SocialWelfareAllocator(_Allocator):
    def __init__(self, solver="embedded", time_limit=None, workers=1):
        self.solver = solver
        self.time_limit = time_limit
        self.workers = workers

    def fit(self, instance, y=None):
        cfg = self._cfg()
        sq = compute_status_quo(instance, cfg, self.solver)
        self.outcome_ = solve_social_welfare(instance, cfg, self.solver, status_quo=sq)
        self.profits_ = dict(self.outcome_.profits)
        return self


class NashBargainingAllocator(_Allocator):
    """Linearized Nash bargaining; ``grid_size``/``refine_rounds`` default to
    the instance's game configuration when ``None``."""

    def __init__(self, grid_size=None, refine_rounds=None, solver="embedded", time_limit=None,
                 workers=1):
        self.grid_size = grid_size
        self.refine_rounds = refine_rounds
        self.solver = solver
        self.time_limit = time_limit
        self.workers = workers

    def fit(self, instance, y=None):
        cfg = self._cfg()
        sq = compute_status_quo(instance, cfg, self.solver)
        self.outcome_ = solve_nash(instance, sq, None, cfg, grid_size=self.grid_size,
                                   refine_rounds=self.refine_rounds, solver=self.solver)
        self.profits_ = dict(self.outcome_.profits)
        self.psi_ = self.outcome_.diagnostics["psi"]
        return self
