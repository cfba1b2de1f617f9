"""Formula-contract prices and swap / spot-market premium coefficients."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import OligofairError
from .instance import unit_service_cost

__all__ = [
    "contract_price", "swap_premium", "outsourcing_premium",
    "PriceTable", "PremiumTable", "price_table", "premium_table",
]


def contract_price(beta, terms, escalations=None, period=1):
    """Unit price of a formula contract in ``period`` (1-based).

    The first period pays ``beta * sum(terms)``; later periods escalate each
    term by its own factor: ``beta * sum(T_s * (1 + eps_s))``.
    """
    if beta < 0:
        raise OligofairError("NEGATIVE_BASE", f"beta={beta}")
    if period <= 1:
        return beta * sum(terms)
    if escalations is None:
        escalations = [0.0] * len(terms)
    if len(escalations) != len(terms):
        raise OligofairError("TERMS_ALIGNMENT",
                             f"{len(terms)} terms vs {len(escalations)} escalation factors")
    total = 0.0
    for t, eps in zip(terms, escalations):
        if 1.0 + eps < 0:
            raise OligofairError("NEGATIVE_ESCALATED_TERM", f"1 + {eps} < 0")
        total += t * (1.0 + eps)
    return beta * total


def swap_premium(usc, eta):
    """Unit cost of receiving swapped product: ``eta * usc``."""
    if usc < 0 or eta < 0:
        raise OligofairError("NEGATIVE_VALUE", f"usc={usc}, eta={eta}")
    return eta * usc


def outsourcing_premium(usc, upc, zeta):
    """Unit cost of spot-market product in a tier: ``zeta * (usc + upc)``."""
    if usc < 0 or upc < 0 or zeta < 0:
        raise OligofairError("NEGATIVE_VALUE", f"usc={usc}, upc={upc}, zeta={zeta}")
    return zeta * (usc + upc)


def _write_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


@dataclass(frozen=True)
class PriceTable:
    """``values[tank, firm, contract, period]`` in money/m3."""

    values: np.ndarray
    inst: object

    def to_csv(self):
        inst = self.inst
        rows = []
        for n, ref in enumerate(inst.tank_refs):
            cust = inst.customers[ref.customer]
            tank = cust.tanks[ref.tank]
            for fi, fid in enumerate(inst.firm_ids):
                for ki, kid in enumerate(inst.contract_ids):
                    for p in range(inst.n_periods):
                        rows.append((tank.product, cust.id, tank.id, fid, kid, p + 1,
                                     float(self.values[n, fi, ki, p])))
        return _write_csv(["product", "customer", "tank", "firm", "contract", "period",
                           "price"], rows)


@dataclass(frozen=True)
class PremiumTable:
    """Unit cost coefficients used by the service cost.

    ``usc[tank, firm, period]``: in-house delivery.
    ``swap[tank, producer, receiver, period]``: swapped delivery, priced on the
    producing firm's delivery cost.
    ``spot[tank, firm, tier, period]``: spot-market purchase.
    """

    usc: np.ndarray
    swap: np.ndarray
    spot: np.ndarray
    inst: object

    def to_csv(self):
        inst = self.inst
        rows = []
        for n, ref in enumerate(inst.tank_refs):
            cust = inst.customers[ref.customer]
            tank = cust.tanks[ref.tank]
            for p in range(inst.n_periods):
                for fi, fid in enumerate(inst.firm_ids):
                    rows.append(("service", tank.product, cust.id, tank.id, fid, "", p + 1,
                                 float(self.usc[n, fi, p])))
                    for gi, gid in enumerate(inst.firm_ids):
                        if gi != fi:
                            rows.append(("swap", tank.product, cust.id, tank.id, gid, fid,
                                         p + 1, float(self.swap[n, gi, fi, p])))
                    for bi, tier in enumerate(inst.tiers):
                        rows.append(("spot", tank.product, cust.id, tank.id, fid, tier.id,
                                     p + 1, float(self.spot[n, fi, bi, p])))
        return _write_csv(["kind", "product", "customer", "tank", "firm", "other",
                           "period", "unit_cost"], rows)


def price_table(inst):
    refs = inst.tank_refs
    F, K, P = len(inst.firms), len(inst.contracts), inst.n_periods
    out = np.zeros((len(refs), F, K, P))
    for n, ref in enumerate(refs):
        cust = inst.customers[ref.customer]
        tank = cust.tanks[ref.tank]
        for fi, fid in enumerate(inst.firm_ids):
            for ki, k in enumerate(inst.contracts):
                esc = k.escalation.get(fid)
                beta = tank.base_price[fid][k.id]
                for p in range(P):
                    eps = esc[p] if esc is not None else None
                    out[n, fi, ki, p] = contract_price(beta, cust.terms, eps, p + 1)
    return PriceTable(out, inst)


def premium_table(inst, usc=None):
    if usc is None:
        usc = unit_service_cost(inst)
    n_t, F, P = usc.shape
    swap = np.zeros((n_t, F, F, P))
    for gi, gid in enumerate(inst.firm_ids):
        for fi, fid in enumerate(inst.firm_ids):
            if gi != fi:
                eta = inst.swap_policy.eta(gid, fid)
                swap[:, gi, fi, :] = eta * usc[:, gi, :]
    spot = np.zeros((n_t, F, len(inst.tiers), P))
    for n, ref in enumerate(inst.tank_refs):
        prod = inst.products[ref.product]
        for fi, firm in enumerate(inst.firms):
            upc = firm.unit_production_cost[prod]
            for bi, tier in enumerate(inst.tiers):
                spot[n, fi, bi, :] = tier.premium * (usc[n, fi, :] + upc)
    return PremiumTable(usc, swap, spot, inst)
