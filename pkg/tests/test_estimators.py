import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from oligofair.estimators import (NashBargainingAllocator, SocialWelfareAllocator,
                                  StatusQuoAllocator)
from oligofair.game import compute_status_quo, solve_social_welfare

from _builders import instance, symmetric_duopoly_doc


def test_params_and_clone():
    est = NashBargainingAllocator(grid_size=12, refine_rounds=0)
    assert est.get_params()["grid_size"] == 12
    twin = clone(est.set_params(grid_size=16))
    assert twin.get_params() == est.get_params() and twin is not est


def test_unfitted_raises():
    with pytest.raises(NotFittedError):
        SocialWelfareAllocator().total_profit_


def test_fit_matches_functions():
    inst = instance(symmetric_duopoly_doc())
    sq = StatusQuoAllocator().fit(inst)
    assert sq.profits_ == compute_status_quo(inst).profits
    fsw = SocialWelfareAllocator().fit(inst)
    assert fsw.total_profit_ == pytest.approx(solve_social_welfare(inst).total_profit)
    nb = NashBargainingAllocator(grid_size=10, refine_rounds=0).fit(inst)
    assert all(nb.profits_[f] >= sq.profits_[f] - 1e-9 for f in sq.profits_)
    assert nb.total_profit_ <= fsw.total_profit_ * (1 + 1e-6)
    assert nb.psi_ > 0
