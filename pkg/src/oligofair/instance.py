"""Market instances: types, document parsing, validation and synthesis.

An instance is described by one JSON document with the top-level sections
``horizon``, ``products``, ``firms``, ``customers``, ``contracts``, ``tiers``,
``swap_policy``, ``energy`` and ``game``.  Periods are numbered from 1 in
documents and from 0 in arrays.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Mapping

import numpy as np

from .errors import OligofairError, ParseError

__all__ = [
    "Horizon", "PlantSurrogate", "InventorySpec", "FirmSpec", "TankSpec",
    "CustomerSpec", "ContractType", "SwapPolicy", "TierSpec",
    "EnergyContract", "GameConfig", "Instance", "TankRef", "Violation",
    "SyntheticDims", "parse_instance", "load_instance", "serialize_instance",
    "dumps_instance", "validate_instance", "check_instance",
    "unit_service_cost", "generate_synthetic", "restrict_to_incumbents",
]

FAIRNESS_MODES = ("status-quo", "social-welfare", "nash")


@dataclass(frozen=True)
class Horizon:
    periods: int
    operating_hours: float


@dataclass(frozen=True)
class PlantSurrogate:
    """Linear plant surrogate.

    Power is ``air_power_coeff * V_air + sum_j power_coeff[j] * V_j`` with
    ``V_air = sum_j air_ratio[j] * V_j`` and ``0 <= V_j <= max_flow[j]``.
    Flows are in m3/h, power in the energy contract's power unit.
    """

    max_flow: Mapping[str, float]
    power_coeff: Mapping[str, float]
    air_power_coeff: float = 0.0
    air_ratio: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class InventorySpec:
    unit_cost: float = 0.0
    initial: float = 0.0
    lower_factor: tuple = ()
    upper_factor: tuple = ()


@dataclass(frozen=True)
class FirmSpec:
    id: str
    plant: PlantSurrogate
    unit_production_cost: Mapping[str, float]
    inventory: Mapping[str, InventorySpec]


@dataclass(frozen=True)
class TankSpec:
    id: str
    product: str
    demand: tuple
    delivery_cost: Mapping[str, tuple]
    base_price: Mapping[str, Mapping[str, float]]
    acquire_variable: Mapping[str, float] = field(default_factory=dict)
    forfeit_variable: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class CustomerSpec:
    id: str
    tanks: tuple
    terms: tuple
    incumbent: tuple = ()
    acquire_fixed: Mapping[str, float] = field(default_factory=dict)
    forfeit_fixed: Mapping[str, float] = field(default_factory=dict)

    @property
    def is_free(self):
        return len(self.incumbent) == 0

    @property
    def incumbent_firm(self):
        return self.incumbent[0][0] if self.incumbent else None


@dataclass(frozen=True)
class ContractType:
    id: str
    duration: int
    # escalation[firm][period][term]
    escalation: Mapping[str, tuple] = field(default_factory=dict)


@dataclass(frozen=True)
class SwapPolicy:
    capacity_fraction: float = 0.0
    # premium[producer][receiver]
    premium: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    intervals: tuple = ()

    def eta(self, producer, receiver):
        return self.premium.get(producer, {}).get(receiver, 1.0)


@dataclass(frozen=True)
class TierSpec:
    id: str
    lower: float
    upper: float
    premium: float


@dataclass(frozen=True)
class EnergyContract:
    contracted: float
    tolerance: float
    price: tuple
    penalty: float = 1.2
    unit: str = "MW"  # power unit of contracted and PW; labels report axes


@dataclass(frozen=True)
class GameConfig:
    negotiation_power: Mapping[str, float]
    mode: str = "nash"
    grid_size: int = 40
    refine_rounds: int = 3


@dataclass(frozen=True)
class TankRef:
    customer: int
    tank: int
    product: int


@dataclass(frozen=True)
class Instance:
    products: tuple
    horizon: Horizon
    firms: tuple
    customers: tuple
    contracts: tuple
    tiers: tuple
    swap_policy: SwapPolicy
    energy: Mapping[str, EnergyContract]
    game: GameConfig

    @property
    def n_periods(self):
        return self.horizon.periods

    @cached_property
    def firm_ids(self):
        return [f.id for f in self.firms]

    @cached_property
    def customer_ids(self):
        return [c.id for c in self.customers]

    @cached_property
    def contract_ids(self):
        return [k.id for k in self.contracts]

    @cached_property
    def tank_refs(self):
        """Flat, ordered list of every (customer, tank, product) triple."""
        refs = []
        for ci, cust in enumerate(self.customers):
            for ti, tank in enumerate(cust.tanks):
                refs.append(TankRef(ci, ti, self.products.index(tank.product)))
        return refs

    def tank(self, ref):
        return self.customers[ref.customer].tanks[ref.tank]

    @cached_property
    def demand(self):
        """Demand array indexed ``[tank, period]`` (m3)."""
        return np.array([self.tank(r).demand for r in self.tank_refs],
                        dtype=float).reshape(len(self.tank_refs), self.n_periods)

    def firm_index(self, firm_id):
        return self.firm_ids.index(firm_id)

    def contract_index(self, contract_id):
        return self.contract_ids.index(contract_id)


@dataclass(frozen=True)
class Violation:
    code: str
    location: str
    message: str = ""


# -- parsing -------------------------------------------------------------------

def _num(value, path, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(path, f"expected a number, got {type(value).__name__}")
    return float(value)


def _int(value, path):
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise ParseError(path, "expected an integer")
    return int(value)


def _obj(value, path):
    if not isinstance(value, dict):
        raise ParseError(path, "expected an object")
    return value


def _list(value, path):
    if not isinstance(value, list):
        raise ParseError(path, "expected a list")
    return value


def _str(value, path):
    if not isinstance(value, str) or not value:
        raise ParseError(path, "expected a non-empty string")
    return value


def _require(doc, key, path):
    if key not in doc:
        raise ParseError(f"{path}.{key}" if path else key, "missing field")
    return doc[key]


def _series(value, periods, path):
    """A scalar broadcast over the horizon, or a list of length ``periods``."""
    if isinstance(value, list):
        if len(value) != periods:
            raise ParseError(path, f"expected {periods} values, got {len(value)}")
        return tuple(_num(v, f"{path}[{i}]") for i, v in enumerate(value))
    return (_num(value, path),) * periods


def _num_map(value, path, keys=None):
    out = {}
    for k, v in _obj(value, path).items():
        if keys is not None and k not in keys:
            raise ParseError(f"{path}.{k}", "unknown id")
        out[k] = _num(v, f"{path}.{k}")
    return out


def _unique(ids, path):
    seen = set()
    for i in ids:
        if i in seen:
            raise ParseError(path, f"duplicate id {i!r}")
        seen.add(i)


def _parse_plant(doc, products, path):
    doc = _obj(doc, path)
    return PlantSurrogate(
        max_flow=_num_map(_require(doc, "max_flow", path), f"{path}.max_flow", products),
        power_coeff=_num_map(doc.get("power_coeff", {}), f"{path}.power_coeff", products),
        air_power_coeff=_num(doc.get("air_power_coeff", 0.0), f"{path}.air_power_coeff"),
        air_ratio=_num_map(doc.get("air_ratio", {}), f"{path}.air_ratio", products),
    )


def _parse_firm(doc, products, periods, path):
    doc = _obj(doc, path)
    fid = _str(_require(doc, "id", path), f"{path}.id")
    inv_doc = _obj(doc.get("inventory", {}), f"{path}.inventory")
    inventory = {}
    for prod in products:
        ipath = f"{path}.inventory.{prod}"
        spec = _obj(inv_doc.get(prod, {}), ipath)
        inventory[prod] = InventorySpec(
            unit_cost=_num(spec.get("unit_cost", 0.0), f"{ipath}.unit_cost"),
            initial=_num(spec.get("initial", 0.0), f"{ipath}.initial"),
            lower_factor=_series(spec.get("lower_factor", 0.0), periods, f"{ipath}.lower_factor"),
            upper_factor=_series(spec.get("upper_factor", 0.0), periods, f"{ipath}.upper_factor"),
        )
    for prod in inv_doc:
        if prod not in products:
            raise ParseError(f"{path}.inventory.{prod}", "unknown product")
    upc = _num_map(doc.get("unit_production_cost", {}), f"{path}.unit_production_cost", products)
    return FirmSpec(
        id=fid,
        plant=_parse_plant(_require(doc, "plant", path), products, f"{path}.plant"),
        unit_production_cost={p: upc.get(p, 0.0) for p in products},
        inventory=inventory,
    )


def _parse_tank(doc, products, firm_ids, contract_ids, periods, path):
    doc = _obj(doc, path)
    tid = _str(_require(doc, "id", path), f"{path}.id")
    product = _str(_require(doc, "product", path), f"{path}.product")
    if product not in products:
        raise ParseError(f"{path}.product", f"unknown product {product!r}")
    demand = _series(_require(doc, "demand", path), periods, f"{path}.demand")
    dc_doc = _obj(doc.get("delivery_cost", {}), f"{path}.delivery_cost")
    delivery = {}
    for f in firm_ids:
        delivery[f] = _series(dc_doc.get(f, 0.0), periods, f"{path}.delivery_cost.{f}")
    for f in dc_doc:
        if f not in firm_ids:
            raise ParseError(f"{path}.delivery_cost.{f}", "unknown firm")
    bp_doc = _obj(_require(doc, "base_price", path), f"{path}.base_price")
    base_price = {}
    for f in firm_ids:
        bpath = f"{path}.base_price.{f}"
        entry = _require(bp_doc, f, f"{path}.base_price")
        if isinstance(entry, dict):
            prices = _num_map(entry, bpath, contract_ids)
            missing = [k for k in contract_ids if k not in prices]
            if missing:
                raise ParseError(f"{bpath}.{missing[0]}", "missing field")
        else:
            prices = {k: _num(entry, bpath) for k in contract_ids}
        base_price[f] = prices
    av = _num_map(doc.get("acquire_variable", {}), f"{path}.acquire_variable", firm_ids)
    fv = _num_map(doc.get("forfeit_variable", {}), f"{path}.forfeit_variable", firm_ids)
    return TankSpec(
        id=tid, product=product, demand=demand, delivery_cost=delivery,
        base_price=base_price,
        acquire_variable={f: av.get(f, 0.0) for f in firm_ids},
        forfeit_variable={f: fv.get(f, 0.0) for f in firm_ids},
    )


def _parse_incumbent(value, firm_ids, contract_ids, path):
    if value is None:
        return ()
    if isinstance(value, dict):
        value = [value]
    entries = []
    for n, e in enumerate(_list(value, path)):
        epath = f"{path}[{n}]"
        e = _obj(e, epath)
        firm = _str(_require(e, "firm", epath), f"{epath}.firm")
        contract = _str(_require(e, "contract", epath), f"{epath}.contract")
        if firm not in firm_ids:
            raise ParseError(f"{epath}.firm", f"unknown firm {firm!r}")
        if contract not in contract_ids:
            raise ParseError(f"{epath}.contract", f"unknown contract {contract!r}")
        entries.append((firm, contract))
    return tuple(entries)


def _parse_customer(doc, products, firm_ids, contract_ids, periods, path):
    doc = _obj(doc, path)
    cid = _str(_require(doc, "id", path), f"{path}.id")
    tanks_doc = _list(_require(doc, "tanks", path), f"{path}.tanks")
    tanks = tuple(
        _parse_tank(t, products, firm_ids, contract_ids, periods, f"{path}.tanks[{n}]")
        for n, t in enumerate(tanks_doc))
    _unique([t.id for t in tanks], f"{path}.tanks")
    terms = tuple(_num(v, f"{path}.terms[{n}]")
                  for n, v in enumerate(_list(doc.get("terms", [1.0]), f"{path}.terms")))
    af = _num_map(doc.get("acquire_fixed", {}), f"{path}.acquire_fixed", firm_ids)
    ff = _num_map(doc.get("forfeit_fixed", {}), f"{path}.forfeit_fixed", firm_ids)
    return CustomerSpec(
        id=cid, tanks=tanks, terms=terms,
        incumbent=_parse_incumbent(doc.get("incumbent"), firm_ids, contract_ids,
                                   f"{path}.incumbent"),
        acquire_fixed={f: af.get(f, 0.0) for f in firm_ids},
        forfeit_fixed={f: ff.get(f, 0.0) for f in firm_ids},
    )


def _parse_contract(doc, firm_ids, periods, path):
    doc = _obj(doc, path)
    kid = _str(_require(doc, "id", path), f"{path}.id")
    duration = _int(_require(doc, "duration", path), f"{path}.duration")
    if duration < 1:
        raise ParseError(f"{path}.duration", "duration must be ≥ 1")
    esc_doc = _obj(doc.get("escalation", {}), f"{path}.escalation")
    escalation = {}
    for f, rows in esc_doc.items():
        fpath = f"{path}.escalation.{f}"
        if f not in firm_ids:
            raise ParseError(fpath, "unknown firm")
        rows = _list(rows, fpath)
        if len(rows) != periods:
            raise ParseError(fpath, f"expected {periods} rows, got {len(rows)}")
        escalation[f] = tuple(
            tuple(_num(v, f"{fpath}[{p}][{s}]") for s, v in enumerate(_list(r, f"{fpath}[{p}]")))
            for p, r in enumerate(rows))
    return ContractType(id=kid, duration=duration, escalation=escalation)


def parse_instance(document):
    """Parse an instance document (JSON text, bytes or an already-decoded dict).

    Raises :class:`ParseError` naming the offending path on schema violations
    and duplicate ids.  Semantic invariants are checked by
    :func:`validate_instance`.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ParseError("$", f"invalid JSON: {exc}") from None
    doc = _obj(document, "$")

    hz = _obj(_require(doc, "horizon", ""), "horizon")
    periods = _int(_require(hz, "periods", "horizon"), "horizon.periods")
    if periods < 1:
        raise ParseError("horizon.periods", "must be ≥ 1")
    horizon = Horizon(periods, _num(_require(hz, "operating_hours", "horizon"),
                                    "horizon.operating_hours"))

    products = tuple(_str(p, f"products[{n}]")
                     for n, p in enumerate(_list(_require(doc, "products", ""), "products")))
    _unique(products, "products")

    firms_doc = _list(_require(doc, "firms", ""), "firms")
    firm_ids = [_str(_obj(f, f"firms[{n}]").get("id"), f"firms[{n}].id")
                for n, f in enumerate(firms_doc)]
    _unique(firm_ids, "firms")
    firms = tuple(_parse_firm(f, products, periods, f"firms[{n}]")
                  for n, f in enumerate(firms_doc))

    contracts_doc = _list(_require(doc, "contracts", ""), "contracts")
    contracts = tuple(_parse_contract(k, firm_ids, periods, f"contracts[{n}]")
                      for n, k in enumerate(contracts_doc))
    contract_ids = [k.id for k in contracts]
    _unique(contract_ids, "contracts")

    customers_doc = _list(_require(doc, "customers", ""), "customers")
    customers = tuple(
        _parse_customer(c, products, firm_ids, contract_ids, periods, f"customers[{n}]")
        for n, c in enumerate(customers_doc))
    _unique([c.id for c in customers], "customers")

    tiers = []
    for n, t in enumerate(_list(doc.get("tiers", []), "tiers")):
        tpath = f"tiers[{n}]"
        t = _obj(t, tpath)
        tiers.append(TierSpec(
            id=_str(_require(t, "id", tpath), f"{tpath}.id"),
            lower=_num(t.get("lower", 0.0), f"{tpath}.lower"),
            upper=_num(_require(t, "upper", tpath), f"{tpath}.upper"),
            premium=_num(t.get("premium", 1.0), f"{tpath}.premium"),
        ))
    _unique([t.id for t in tiers], "tiers")

    sp = _obj(doc.get("swap_policy", {}), "swap_policy")
    premium = {}
    for prod_firm, row in _obj(sp.get("premium", {}), "swap_policy.premium").items():
        if prod_firm not in firm_ids:
            raise ParseError(f"swap_policy.premium.{prod_firm}", "unknown firm")
        premium[prod_firm] = _num_map(row, f"swap_policy.premium.{prod_firm}", firm_ids)
    if "intervals" in sp:
        intervals = tuple(
            tuple(_int(v, f"swap_policy.intervals[{n}][{m}]")
                  for m, v in enumerate(_list(iv, f"swap_policy.intervals[{n}]")))
            for n, iv in enumerate(_list(sp["intervals"], "swap_policy.intervals")))
    else:
        intervals = (tuple(range(1, periods + 1)),)
    swap_policy = SwapPolicy(
        capacity_fraction=_num(sp.get("capacity_fraction", 0.0), "swap_policy.capacity_fraction"),
        premium=premium, intervals=intervals)

    en_doc = _obj(doc.get("energy", {}), "energy")
    energy = {}
    for f in firm_ids:
        epath = f"energy.{f}"
        e = _obj(en_doc.get(f, {}), epath)
        energy[f] = EnergyContract(
            contracted=_num(e.get("contracted", 0.0), f"{epath}.contracted"),
            tolerance=_num(e.get("tolerance", 0.0), f"{epath}.tolerance"),
            price=_series(e.get("price", 0.0), periods, f"{epath}.price"),
            penalty=_num(e.get("penalty", 1.2), f"{epath}.penalty"),
            unit=_str(e.get("unit", "MW"), f"{epath}.unit"),
        )
    for f in en_doc:
        if f not in firm_ids:
            raise ParseError(f"energy.{f}", "unknown firm")

    gm = _obj(doc.get("game", {}), "game")
    if "negotiation_power" in gm:
        powers = _num_map(gm["negotiation_power"], "game.negotiation_power", firm_ids)
        powers = {f: powers.get(f, 0.0) for f in firm_ids}
    else:
        powers = {f: 1.0 / len(firm_ids) for f in firm_ids} if firm_ids else {}
    mode = gm.get("mode", "nash")
    if mode not in FAIRNESS_MODES:
        raise ParseError("game.mode", f"expected one of {FAIRNESS_MODES}")
    game = GameConfig(
        negotiation_power=powers, mode=mode,
        grid_size=_int(gm.get("grid_size", 40), "game.grid_size"),
        refine_rounds=_int(gm.get("refine_rounds", 3), "game.refine_rounds"),
    )

    return Instance(products=products, horizon=horizon, firms=firms,
                    customers=customers, contracts=contracts, tiers=tuple(tiers),
                    swap_policy=swap_policy, energy=energy, game=game)


def load_instance(path):
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


def serialize_instance(inst):
    """Inverse of :func:`parse_instance`: returns a JSON-compatible dict."""
    firms = []
    for f in inst.firms:
        firms.append({
            "id": f.id,
            "plant": {
                "max_flow": dict(f.plant.max_flow),
                "power_coeff": dict(f.plant.power_coeff),
                "air_power_coeff": f.plant.air_power_coeff,
                "air_ratio": dict(f.plant.air_ratio),
            },
            "unit_production_cost": dict(f.unit_production_cost),
            "inventory": {
                prod: {"unit_cost": s.unit_cost, "initial": s.initial,
                       "lower_factor": list(s.lower_factor),
                       "upper_factor": list(s.upper_factor)}
                for prod, s in f.inventory.items()},
        })
    customers = []
    for c in inst.customers:
        customers.append({
            "id": c.id,
            "incumbent": [{"firm": f, "contract": k} for f, k in c.incumbent],
            "terms": list(c.terms),
            "acquire_fixed": dict(c.acquire_fixed),
            "forfeit_fixed": dict(c.forfeit_fixed),
            "tanks": [{
                "id": t.id, "product": t.product, "demand": list(t.demand),
                "delivery_cost": {f: list(v) for f, v in t.delivery_cost.items()},
                "base_price": {f: dict(v) for f, v in t.base_price.items()},
                "acquire_variable": dict(t.acquire_variable),
                "forfeit_variable": dict(t.forfeit_variable),
            } for t in c.tanks],
        })
    return {
        "horizon": {"periods": inst.horizon.periods,
                    "operating_hours": inst.horizon.operating_hours},
        "products": list(inst.products),
        "firms": firms,
        "customers": customers,
        "contracts": [{"id": k.id, "duration": k.duration,
                       "escalation": {f: [list(r) for r in rows]
                                      for f, rows in k.escalation.items()}}
                      for k in inst.contracts],
        "tiers": [{"id": t.id, "lower": t.lower, "upper": t.upper, "premium": t.premium}
                  for t in inst.tiers],
        "swap_policy": {
            "capacity_fraction": inst.swap_policy.capacity_fraction,
            "premium": {f: dict(r) for f, r in inst.swap_policy.premium.items()},
            "intervals": [list(iv) for iv in inst.swap_policy.intervals],
        },
        "energy": {f: {"contracted": e.contracted, "tolerance": e.tolerance,
                       "price": list(e.price), "penalty": e.penalty,
                       "unit": e.unit}
                   for f, e in inst.energy.items()},
        "game": {"negotiation_power": dict(inst.game.negotiation_power),
                 "mode": inst.game.mode, "grid_size": inst.game.grid_size,
                 "refine_rounds": inst.game.refine_rounds},
    }


def dumps_instance(inst, indent=None):
    return json.dumps(serialize_instance(inst), indent=indent)


# -- validation ----------------------------------------------------------------

def validate_instance(inst):
    """Return the list of invariant violations; empty iff the instance is valid."""
    out = []

    def bad(code, loc, msg=""):
        out.append(Violation(code, loc, msg))

    P = inst.n_periods
    firm_ids = set(inst.firm_ids)
    contract_ids = set(inst.contract_ids)
    if inst.horizon.operating_hours <= 0:
        bad("NONPOSITIVE_HOURS", "horizon.operating_hours")

    for f in inst.firms:
        loc = f"firms.{f.id}"
        for prod in inst.products:
            mf = f.plant.max_flow.get(prod)
            if mf is None or not mf > 0:
                bad("PLANT_COEFFICIENT", f"{loc}.plant.max_flow.{prod}",
                    "max flow must be positive for every produced product")
            if prod not in f.plant.power_coeff:
                bad("PLANT_COEFFICIENT", f"{loc}.plant.power_coeff.{prod}", "missing")
            inv = f.inventory.get(prod)
            if inv is None:
                bad("INVENTORY_MISSING", f"{loc}.inventory.{prod}")
                continue
            if len(inv.lower_factor) != P or len(inv.upper_factor) != P:
                bad("SERIES_LENGTH", f"{loc}.inventory.{prod}")
            elif any(not 0 <= lo <= up for lo, up in zip(inv.lower_factor, inv.upper_factor)):
                bad("INVENTORY_FACTORS", f"{loc}.inventory.{prod}", "need 0 <= aL <= aU")
            if inv.initial < 0 or inv.unit_cost < 0:
                bad("NEGATIVE_VALUE", f"{loc}.inventory.{prod}")
            if f.unit_production_cost.get(prod, 0.0) < 0:
                bad("NEGATIVE_VALUE", f"{loc}.unit_production_cost.{prod}")
        coeffs = [*f.plant.max_flow.values(), *f.plant.power_coeff.values(),
                  *f.plant.air_ratio.values(), f.plant.air_power_coeff]
        if any(v < 0 for v in coeffs):
            bad("NEGATIVE_VALUE", f"{loc}.plant")

    for k in inst.contracts:
        loc = f"contracts.{k.id}"
        if k.duration < 1:
            bad("DURATION", f"{loc}.duration", "duration must be ≥ 1")
        for fid, rows in k.escalation.items():
            if fid not in firm_ids:
                bad("UNKNOWN_REFERENCE", f"{loc}.escalation.{fid}")
            if len(rows) != P:
                bad("SERIES_LENGTH", f"{loc}.escalation.{fid}")
            if any(not math.isfinite(e) for row in rows for e in row):
                bad("ESCALATION_NONFINITE", f"{loc}.escalation.{fid}")

    for c in inst.customers:
        loc = f"customers.{c.id}"
        if len(c.incumbent) > 1:
            bad("INCUMBENT_NOT_UNIQUE", f"{loc}.incumbent",
                "an existing customer holds exactly one (firm, contract)")
        for fid, kid in c.incumbent:
            if fid not in firm_ids or kid not in contract_ids:
                bad("UNKNOWN_REFERENCE", f"{loc}.incumbent")
        if any(v < 0 for v in [*c.acquire_fixed.values(), *c.forfeit_fixed.values()]):
            bad("NEGATIVE_VALUE", f"{loc}.costs")
        for k in inst.contracts:
            for fid, rows in k.escalation.items():
                if any(len(row) != len(c.terms) for row in rows):
                    bad("TERMS_ALIGNMENT", f"{loc}.terms",
                        f"contract {k.id} escalation does not match {len(c.terms)} terms")
                    break
        if not c.tanks:
            bad("NO_TANKS", loc)
        for t in c.tanks:
            tloc = f"{loc}.tanks.{t.id}"
            if t.product not in inst.products:
                bad("UNKNOWN_REFERENCE", f"{tloc}.product")
            if len(t.demand) != P:
                bad("SERIES_LENGTH", f"{tloc}.demand")
            if any(d < 0 for d in t.demand):
                bad("NEGATIVE_VALUE", f"{tloc}.demand")
            for fid in inst.firm_ids:
                dc = t.delivery_cost.get(fid)
                if dc is None or len(dc) != P:
                    bad("MISSING_DELIVERY_COST", f"{tloc}.delivery_cost.{fid}")
                elif any(v < 0 for v in dc):
                    bad("NEGATIVE_VALUE", f"{tloc}.delivery_cost.{fid}")
                bp = t.base_price.get(fid, {})
                if any(kid not in bp for kid in contract_ids):
                    bad("MISSING_PRICE", f"{tloc}.base_price.{fid}")
                elif any(v < 0 for v in bp.values()):
                    bad("NEGATIVE_VALUE", f"{tloc}.base_price.{fid}")
            if any(v < 0 for v in [*t.acquire_variable.values(), *t.forfeit_variable.values()]):
                bad("NEGATIVE_VALUE", f"{tloc}.costs")

    for t in inst.tiers:
        if not 0 <= t.lower <= t.upper:
            bad("TIER_BOUNDS", f"tiers.{t.id}", "need 0 <= lower <= upper")
        if t.premium < 1:
            bad("TIER_PREMIUM", f"tiers.{t.id}", "premium must be ≥ 1")

    sp = inst.swap_policy
    if sp.capacity_fraction < 0:
        bad("NEGATIVE_VALUE", "swap_policy.capacity_fraction")
    if any(v < 0 for row in sp.premium.values() for v in row.values()):
        bad("NEGATIVE_VALUE", "swap_policy.premium")
    covered = sorted(p for iv in sp.intervals for p in iv)
    if covered != list(range(1, P + 1)):
        bad("SWAP_INTERVALS", "swap_policy.intervals",
            "intervals must be disjoint and cover every period")

    for fid in inst.firm_ids:
        e = inst.energy.get(fid)
        if e is None:
            bad("ENERGY_MISSING", f"energy.{fid}")
            continue
        if not 0 <= e.tolerance < 1:
            bad("ENERGY_TOLERANCE", f"energy.{fid}.tolerance")
        if e.contracted < 0 or any(v < 0 for v in e.price) or e.penalty < 0:
            bad("NEGATIVE_VALUE", f"energy.{fid}")
        if len(e.price) != P:
            bad("SERIES_LENGTH", f"energy.{fid}.price")

    alphas = [inst.game.negotiation_power.get(f, 0.0) for f in inst.firm_ids]
    if any(a <= 0 for a in alphas) or abs(sum(alphas) - 1.0) > 1e-9:
        bad("NEGOTIATION_POWER", "game.negotiation_power",
            "powers must be positive and sum to 1")
    if inst.game.grid_size < 2:
        bad("GRID_SIZE", "game.grid_size")
    if inst.game.refine_rounds < 0:
        bad("REFINE_ROUNDS", "game.refine_rounds")
    return out


def check_instance(inst):
    """Raise :class:`OligofairError` with the first violation, else return ``inst``."""
    violations = validate_instance(inst)
    if violations:
        v = violations[0]
        more = f" (+{len(violations) - 1} more)" if len(violations) > 1 else ""
        raise OligofairError(v.code, f"{v.location} {v.message}{more}".strip())
    return inst


def unit_service_cost(inst):
    """Unit delivery cost ``DC / D`` as an array indexed ``[tank, firm, period]``.

    Entries with zero demand and zero delivery cost are 0; zero demand with a
    positive delivery cost raises ``DIV_BY_ZERO_DEMAND``.
    """
    refs = inst.tank_refs
    P = inst.n_periods
    out = np.zeros((len(refs), len(inst.firms), P))
    for n, r in enumerate(refs):
        tank = inst.tank(r)
        for fi, fid in enumerate(inst.firm_ids):
            dc = tank.delivery_cost[fid]
            for p in range(P):
                d = tank.demand[p]
                if d > 0:
                    out[n, fi, p] = dc[p] / d
                elif dc[p] != 0:
                    raise OligofairError(
                        "DIV_BY_ZERO_DEMAND",
                        f"customer {inst.customers[r.customer].id} tank {tank.id} "
                        f"firm {fid} period {p + 1}")
    return out


def restrict_to_incumbents(inst):
    """Drop free customers; the remaining customers keep their incumbent firm."""
    return replace(inst, customers=tuple(c for c in inst.customers if not c.is_free))


# -- synthetic generator ---------------------------------------------------------

@dataclass(frozen=True)
class SyntheticDims:
    firms: int = 2
    customers: int = 4
    periods: int = 4
    products: int = 1
    contracts: int = 2
    tiers: int = 1
    terms: int = 2
    max_tanks: int = 1
    free_fraction: float = 0.25
    durations: tuple = ()
    term_range: tuple = (0.5, 1.5)
    swap_intervals: int = 1


def _as_dims(dims):
    if isinstance(dims, SyntheticDims):
        return dims
    if isinstance(dims, Mapping):
        return SyntheticDims(**dims)
    f, c, p = dims[:3]
    return SyntheticDims(firms=f, customers=c, periods=p)


def generate_synthetic(seed, dims=SyntheticDims()):
    """Deterministic random instance.

    ``dims`` is a :class:`SyntheticDims`, a mapping of its fields, or a
    ``(firms, customers, periods)`` tuple.  Demand repeats a yearly pattern
    where the third quarter is 20% above the first quarter of the same year.
    """
    d = _as_dims(dims)
    if min(d.firms, d.customers, d.periods, d.products, d.contracts, d.terms) < 1:
        raise OligofairError("BAD_DIMS", "all cardinalities must be positive")
    rng = np.random.default_rng(seed)
    P = d.periods
    OT = 100.0
    products = tuple(["LOX", "LIN", "LAR", "GOX", "GAN"][:d.products]
                     if d.products <= 5 else [f"P{i + 1}" for i in range(d.products)])
    firm_ids = [chr(ord("A") + i) if d.firms <= 26 else f"F{i + 1}" for i in range(d.firms)]
    if d.durations:
        durations = [int(x) for x in d.durations]
    else:
        durations = sorted({max(1, min(P, int(x))) for x in (1, 2, 4, 8, 12)[:d.contracts]})
        while len(durations) < d.contracts:
            durations.append(durations[-1])
    contract_ids = [f"k{i + 1}" for i in range(len(durations))]
    lo_t, hi_t = d.term_range

    def r(lo, hi):
        return float(round(rng.uniform(lo, hi), 4))

    customers = []
    n_free = int(round(d.free_fraction * d.customers))
    total_demand = np.zeros((len(products), P))
    incumbent_demand = np.zeros((d.firms, len(products), P))
    for ci in range(d.customers):
        terms = tuple(r(lo_t, hi_t) / d.terms for _ in range(d.terms))
        n_tanks = int(rng.integers(1, d.max_tanks + 1))
        is_free = ci >= d.customers - n_free
        inc_firm = int(rng.integers(0, d.firms))
        tanks = []
        for ti in range(n_tanks):
            pi = int(rng.integers(0, len(products)))
            demand = []
            base = r(40.0, 120.0)
            for p in range(P):
                quarter = p % 4
                if quarter == 0 and p > 0:
                    base = round(base * (1.0 + rng.uniform(-0.05, 0.05)), 4)
                demand.append(round(base * 1.2, 10) if quarter == 2 else base)
            total_demand[pi] += demand
            if not is_free:
                incumbent_demand[inc_firm, pi] += demand
            usc = {f: r(0.5, 2.5) for f in firm_ids}
            tanks.append(TankSpec(
                id=f"t{ti + 1}", product=products[pi], demand=tuple(demand),
                delivery_cost={f: tuple(round(usc[f] * x, 10) for x in demand) for f in firm_ids},
                base_price={f: {k: round(r(9.0, 11.0) * (1.0 + 0.02 * n), 4)
                                for n, k in enumerate(contract_ids)} for f in firm_ids},
                acquire_variable={f: r(0.0, 0.5) for f in firm_ids},
                forfeit_variable={f: r(0.0, 0.5) for f in firm_ids},
            ))
        customers.append(CustomerSpec(
            id=f"c{ci + 1}", tanks=tuple(tanks), terms=terms,
            incumbent=() if is_free else ((firm_ids[inc_firm],
                                           contract_ids[int(rng.integers(0, len(contract_ids)))]),),
            acquire_fixed={f: r(10.0, 60.0) for f in firm_ids},
            forfeit_fixed={f: r(10.0, 60.0) for f in firm_ids},
        ))

    firms = []
    energy = {}
    share = total_demand.max(axis=1) / max(1, d.firms)
    for fi, fid in enumerate(firm_ids):
        max_flow = {prod: round(float(max(share[pi] * rng.uniform(1.1, 1.6), 1.0)) / OT, 6)
                    for pi, prod in enumerate(products)}
        power = {prod: r(0.02, 0.04) for prod in products}
        air_ratio = {prod: r(3.0, 5.0) for prod in products}
        air_coeff = r(0.002, 0.004)
        firms.append(FirmSpec(
            id=fid,
            plant=PlantSurrogate(max_flow=max_flow, power_coeff=power,
                                 air_power_coeff=air_coeff, air_ratio=air_ratio),
            unit_production_cost={prod: r(2.0, 4.0) for prod in products},
            inventory={prod: InventorySpec(unit_cost=r(0.05, 0.2), initial=0.0,
                                           lower_factor=(0.0,) * P,
                                           upper_factor=(round(0.25 * OT, 6),) * P)
                       for prod in products},
        ))
        # contracted power sized on the firm's incumbent demand
        flows = incumbent_demand[fi].mean(axis=1) / OT
        pw = sum(power[prod] * flows[pi] + air_coeff * air_ratio[prod] * flows[pi]
                 for pi, prod in enumerate(products))
        energy[fid] = EnergyContract(
            contracted=round(float(pw) * rng.uniform(0.9, 1.1), 6),
            tolerance=0.1,
            price=tuple(r(40.0, 60.0) for _ in range(P)),
            penalty=1.2,
        )

    contracts = tuple(
        ContractType(id=k, duration=L, escalation={
            f: tuple(tuple(r(0.0, 0.04) / (1 + n) for _ in range(d.terms)) for _ in range(P))
            for f in firm_ids})
        for n, (k, L) in enumerate(zip(contract_ids, durations)))

    big = float(total_demand.sum() + 1.0)
    tiers = []
    if d.tiers >= 1:
        split = round(float(total_demand.max()) * 0.25, 4)
        tiers.append(TierSpec("b1", 0.0, split if d.tiers > 1 else big, 1.2))
        for b in range(1, d.tiers):
            tiers.append(TierSpec(f"b{b + 1}", split * b, big, round(1.2 + 0.2 * b, 4)))

    n_iv = max(1, min(d.swap_intervals, P))
    bounds = np.linspace(0, P, n_iv + 1).round().astype(int)
    intervals = tuple(tuple(range(int(a) + 1, int(b) + 1))
                      for a, b in zip(bounds[:-1], bounds[1:]) if b > a)
    swap = SwapPolicy(
        capacity_fraction=0.2,
        premium={f: {g: r(1.05, 1.3) for g in firm_ids if g != f} for f in firm_ids},
        intervals=intervals)
    game = GameConfig(negotiation_power={f: 1.0 / d.firms for f in firm_ids})
    return Instance(products=products, horizon=Horizon(P, OT), firms=tuple(firms),
                    customers=tuple(customers), contracts=contracts, tiers=tuple(tiers),
                    swap_policy=swap, energy=energy, game=game)
