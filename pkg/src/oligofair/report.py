"""Market-share, cost, contract-timeline, demand-source and energy reports.

Every report is a pure function of a :class:`GameOutcome`; nothing is
re-solved.  Text tables round percentages half-even to integers, CSV keeps
full precision, and SVG elements carry the exact plotted value in a
``data-value`` attribute so both formats can be cross-checked.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

__all__ = [
    "COST_COMPONENTS", "MarketShares", "CostBreakdown", "TimelineRow", "ContractGantt",
    "DemandBreakdown", "EnergyProfile", "MarketReport", "market_share_report",
    "cost_breakdown", "contract_gantt", "demand_breakdown", "energy_profile",
    "market_report", "format_percent",
]

# component name -> outcome array key
COST_COMPONENTS = {"service": "SC", "electricity": "EC", "inventory": "IC",
                   "acquisition": "NC", "forfeit": "RC"}

_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
            "#7f7f7f", "#bcbd22", "#17becf")


def format_percent(value):
    """Integer percentage, rounded half to even; ``None`` renders as ``n/a``."""
    if value is None:
        return "n/a"
    return f"{round(value):d}%"


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["n/a" if v is None else repr(float(v)) if isinstance(v, (float, np.floating))
                    else v for v in row])
    return buf.getvalue()


def _table(header, rows):
    cells = [list(map(str, header))] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(r, widths)))
             for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _num(v):
    return repr(float(v))


# -- market shares -----------------------------------------------------------------

@dataclass
class MarketShares:
    firms: list
    profits: dict
    status_quo: dict
    shares: dict   # firm -> percent or None
    changes: dict  # firm -> percent or None

    @property
    def total(self):
        return float(sum(self.profits.values()))

    def rows(self):
        return [(f, self.profits[f], self.shares[f],
                 None if self.status_quo is None else self.status_quo.get(f), self.changes[f])
                for f in self.firms]

    def to_text(self):
        rows = [(f, f"{p:.2f}", format_percent(s), "n/a" if q is None else f"{q:.2f}",
                 "n/a" if c is None else f"{round(c):+d}%")
                for f, p, s, q, c in self.rows()]
        return _table(["firm", "profit", "share", "status quo", "change"], rows)

    def to_csv(self):
        return _csv(["firm", "profit", "share_percent", "status_quo_profit", "change_percent"],
                    self.rows())


def market_share_report(outcome, sq=None):
    """Share of total profit and change against the status quo, per firm.

    ``sq`` may be a mapping of status-quo profits, a ``StatusQuo`` or ``None``
    (falls back to the profits stored on the outcome).  Changes are relative
    to ``|pi_sq|`` so that a gain always reads as positive.
    """
    if sq is None:
        sq = outcome.status_quo
    sqp = None if sq is None else dict(getattr(sq, "profits", sq))
    profits = {f: float(outcome.profits[f]) for f in outcome.firm_ids}
    total = sum(profits.values())
    shares = {f: (100.0 * p / total if total > 0 else None) for f, p in profits.items()}
    changes = {}
    for f, p in profits.items():
        base = None if sqp is None else sqp.get(f)
        changes[f] = None if base is None or base == 0 else 100.0 * (p - base) / abs(base)
    return MarketShares(list(outcome.firm_ids), profits, sqp, shares, changes)


# -- cost breakdown ------------------------------------------------------------------

@dataclass
class CostBreakdown:
    firms: list
    totals: dict   # firm -> component -> money
    percent: dict  # firm -> component -> percent or None

    def rows(self):
        return [(f, c, self.totals[f][c], self.percent[f][c])
                for f in self.firms for c in COST_COMPONENTS]

    def to_text(self):
        header = ["firm"] + list(COST_COMPONENTS) + ["total"]
        rows = [[f] + [format_percent(self.percent[f][c]) for c in COST_COMPONENTS]
                + [f"{sum(self.totals[f].values()):.2f}"] for f in self.firms]
        return _table(header, rows)

    def to_csv(self):
        return _csv(["firm", "component", "cost", "percent"], self.rows())

    def to_svg(self, width=480, bar_h=26):
        """Horizontal 100% stacked bar per firm."""
        pad, label_w = 10, 60
        body = []
        inner = width - label_w - 2 * pad
        for n, f in enumerate(self.firms):
            y = pad + n * (bar_h + 8)
            body.append(f'<text x="{pad}" y="{y + bar_h * 0.7:.1f}">{escape(f)}</text>')
            x = label_w + pad
            for j, c in enumerate(COST_COMPONENTS):
                pct = self.percent[f][c]
                w = 0.0 if pct is None else inner * pct / 100.0
                body.append(f'<rect x="{x:.3f}" y="{y}" width="{w:.3f}" height="{bar_h}" '
                            f'fill="{_PALETTE[j]}" data-firm="{escape(f)}" data-component="{c}" '
                            f'data-value="{"n/a" if pct is None else _num(pct)}"/>')
                x += w
        height = pad * 2 + len(self.firms) * (bar_h + 8) + 20
        legend = " ".join(f"{c}={_PALETTE[j]}" for j, c in enumerate(COST_COMPONENTS))
        body.append(f'<text x="{pad}" y="{height - 6}" font-size="9">{legend}</text>')
        return _svg(width, height, body)


def cost_breakdown(outcome):
    totals, percent = {}, {}
    for f, fid in enumerate(outcome.firm_ids):
        comp = {c: float(np.sum(np.asarray(outcome.arrays[k])[f])) for c, k in COST_COMPONENTS.items()}
        total = sum(comp.values())
        totals[fid] = comp
        percent[fid] = {c: (100.0 * v / total if total != 0 else None) for c, v in comp.items()}
    return CostBreakdown(list(outcome.firm_ids), totals, percent)


# -- contract timeline -----------------------------------------------------------------

@dataclass(frozen=True)
class TimelineRow:
    customer: str
    firm: str
    contract: str
    start: int  # 1-based, inclusive
    end: int


@dataclass
class ContractGantt:
    customers: list
    rows: list
    n_periods: int
    firms: list = field(default_factory=list)

    def to_text(self):
        return _table(["customer", "firm", "contract", "start", "end"],
                      [(r.customer, r.firm, r.contract, r.start, r.end) for r in self.rows])

    def to_csv(self):
        return _csv(["customer", "firm", "contract", "start", "end"],
                    [(r.customer, r.firm, r.contract, r.start, r.end) for r in self.rows])

    def to_svg(self, cell=18, row_h=20):
        pad, label_w = 10, 70
        colors = {f: _PALETTE[n % len(_PALETTE)] for n, f in enumerate(self.firms)}
        body = []
        for n, cid in enumerate(self.customers):
            y = pad + n * row_h
            body.append(f'<text x="{pad}" y="{y + row_h * 0.7:.1f}">{escape(cid)}</text>')
        for r in self.rows:
            y = pad + self.customers.index(r.customer) * row_h
            x = label_w + pad + (r.start - 1) * cell
            w = (r.end - r.start + 1) * cell
            body.append(f'<rect x="{x}" y="{y}" width="{w}" height="{row_h - 4}" '
                        f'fill="{colors[r.firm]}" stroke="#000" data-customer="{escape(r.customer)}" '
                        f'data-firm="{escape(r.firm)}" data-contract="{escape(r.contract)}" '
                        f'data-start="{r.start}" data-end="{r.end}"/>')
            body.append(f'<text x="{x + 3}" y="{y + row_h * 0.6:.1f}" font-size="9">'
                        f'{escape(r.contract)}</text>')
        width = label_w + 2 * pad + self.n_periods * cell
        height = 2 * pad + len(self.customers) * row_h + 16
        legend = " ".join(f"{f}={c}" for f, c in colors.items())
        body.append(f'<text x="{pad}" y="{height - 4}" font-size="9">{legend}</text>')
        return _svg(width, height, body)


def _customer_demand(outcome):
    """Total demand per customer, read from the delivered volumes."""
    a = outcome.arrays
    per_tank = (np.sum(a["S"], axis=(1, 2)) + np.sum(a["SW"], axis=(1, 2, 3))
                + np.sum(a["O"], axis=(1, 2)))
    totals = {c: 0.0 for c in outcome.customer_ids}
    for (cid, _tank, _prod), d in zip(outcome.tanks, per_tank):
        totals[cid] += float(d)
    return totals


def contract_gantt(outcome, top=None):
    """Contract runs of the ``top`` customers with the largest total demand.

    Ties in demand are broken by customer id.  A run ends wherever the
    (firm, contract) pair changes or a new contract is signed.
    """
    W = np.asarray(outcome.arrays["W"])
    WS = np.asarray(outcome.arrays["WS"])
    demand = _customer_demand(outcome)
    order = sorted(outcome.customer_ids, key=lambda c: (-demand[c], c))
    chosen = order if top is None else order[:top]
    rows = []
    for cid in chosen:
        c = outcome.customer_ids.index(cid)
        current, start = None, None
        for p in range(outcome.n_periods):
            active = np.argwhere(W[c, :, :, p] > 0.5)
            pair = tuple(active[0]) if len(active) else None
            signed = pair is not None and WS[c, pair[0], pair[1], p] > 0.5
            if pair != current or signed:
                if current is not None:
                    rows.append(TimelineRow(cid, outcome.firm_ids[current[0]],
                                            outcome.contract_ids[current[1]], start + 1, p))
                current, start = pair, p
        if current is not None:
            rows.append(TimelineRow(cid, outcome.firm_ids[current[0]],
                                    outcome.contract_ids[current[1]], start + 1,
                                    outcome.n_periods))
    return ContractGantt(chosen, rows, outcome.n_periods, list(outcome.firm_ids))


# -- demand sources ----------------------------------------------------------------

@dataclass
class DemandBreakdown:
    firm: str
    assigned: list    # per period
    fractions: list   # per period: (in-house, swap, spot) or None

    def rows(self):
        out = []
        for p, (d, fr) in enumerate(zip(self.assigned, self.fractions)):
            out.append((p + 1, d) + (fr if fr is not None else (None, None, None)))
        return out

    def to_text(self):
        return _table(["period", "assigned", "in-house", "swap", "spot"],
                      [(p, f"{d:.2f}", *(format_percent(None if v is None else 100 * v)
                                         for v in fr)) for p, d, *fr in self.rows()])

    def to_csv(self):
        return _csv(["period", "assigned", "in_house", "swap", "spot"], self.rows())

    def to_svg(self, col_w=22, height=160):
        pad = 10
        body = []
        for p, fr in enumerate(self.fractions):
            x = pad + p * (col_w + 4)
            y = pad + height
            for j, v in enumerate(fr if fr is not None else ()):
                h = height * v
                y -= h
                body.append(f'<rect x="{x}" y="{y:.3f}" width="{col_w}" height="{h:.3f}" '
                            f'fill="{_PALETTE[j]}" data-period="{p + 1}" '
                            f'data-source="{("in-house", "swap", "spot")[j]}" '
                            f'data-value="{_num(v)}"/>')
        width = 2 * pad + len(self.fractions) * (col_w + 4)
        return _svg(width, height + 2 * pad + 14, body + [
            f'<text x="{pad}" y="{height + 2 * pad + 10}" font-size="9">'
            f'{escape(self.firm)}: in-house={_PALETTE[0]} swap={_PALETTE[1]} spot={_PALETTE[2]}'
            f'</text>'])


def demand_breakdown(outcome, firm):
    """Per period, the shares of ``firm``'s assigned demand met in-house, by
    incoming swaps and by spot purchases."""
    f = outcome.firm_ids.index(firm)
    a = outcome.arrays
    s = np.sum(np.asarray(a["S"])[:, f, :], axis=0)
    sw = np.sum(np.asarray(a["SW"])[:, :, f, :], axis=(0, 1))
    o = np.sum(np.asarray(a["O"])[:, f, :], axis=0)
    assigned, fractions = [], []
    for p in range(outcome.n_periods):
        total = float(s[p] + sw[p] + o[p])
        assigned.append(total)
        fractions.append((float(s[p]) / total, float(sw[p]) / total, float(o[p]) / total)
                         if total > 0 else None)
    return DemandBreakdown(firm, assigned, fractions)


# -- energy ------------------------------------------------------------------------

@dataclass
class EnergyProfile:
    firms: list
    units: dict
    power: np.ndarray    # [firm, period]
    theta: np.ndarray
    dplus: np.ndarray
    dminus: np.ndarray

    def rows(self):
        return [(fid, p + 1, self.power[f, p], self.theta[f, p], self.dplus[f, p],
                 self.dminus[f, p], self.units.get(fid, ""))
                for f, fid in enumerate(self.firms) for p in range(self.power.shape[1])]

    def to_text(self):
        return _table(["firm", "period", "power", "contracted part", "above band",
                       "below band", "unit"],
                      [(f, p, f"{a:.3f}", f"{b:.3f}", f"{c:.3f}", f"{d:.3f}", u)
                       for f, p, a, b, c, d, u in self.rows()])

    def to_csv(self):
        return _csv(["firm", "period", "power", "theta", "delta_plus", "delta_minus", "unit"],
                    self.rows())

    def to_svg(self, col_w=16, height=160):
        """Stacked bars of theta and delta_plus per period (delta_minus drawn
        as an outline above the stack, since it is not consumed)."""
        pad = 10
        top = float(np.max(self.theta + self.dplus + self.dminus)) if self.theta.size else 0.0
        scale = height / top if top > 0 else 0.0
        body = []
        P = self.theta.shape[1]
        for f, fid in enumerate(self.firms):
            x0 = pad + f * (P * (col_w + 2) + 20)
            for p in range(P):
                x = x0 + p * (col_w + 2)
                y = pad + height
                for name, arr, color, fill in (("theta", self.theta, _PALETTE[0], True),
                                               ("delta_plus", self.dplus, _PALETTE[3], True),
                                               ("delta_minus", self.dminus, _PALETTE[2], False)):
                    v = float(arr[f, p])
                    h = v * scale
                    y -= h
                    style = f'fill="{color}"' if fill else f'fill="none" stroke="{color}"'
                    body.append(f'<rect x="{x}" y="{y:.3f}" width="{col_w}" height="{h:.3f}" '
                                f'{style} data-firm="{escape(fid)}" data-period="{p + 1}" '
                                f'data-series="{name}" data-value="{_num(v)}"/>')
            unit = escape(self.units.get(fid, ""))
            body.append(f'<text x="{x0}" y="{height + 2 * pad + 10}" font-size="9">'
                        f'{escape(fid)} [{unit}]</text>')
        width = 2 * pad + len(self.firms) * (P * (col_w + 2) + 20)
        return _svg(width, height + 2 * pad + 14, body)


def energy_profile(outcome):
    a = outcome.arrays
    units = dict(outcome.diagnostics.get("energy_unit", {}))
    return EnergyProfile(list(outcome.firm_ids), units, np.asarray(a["PW"], dtype=float),
                         np.asarray(a["THETA"], dtype=float), np.asarray(a["DPLUS"], dtype=float),
                         np.asarray(a["DMINUS"], dtype=float))


# -- composite ---------------------------------------------------------------------

@dataclass
class MarketReport:
    shares: MarketShares
    costs: CostBreakdown
    gantt: ContractGantt
    demand: dict  # firm -> DemandBreakdown
    energy: EnergyProfile

    def to_text(self):
        parts = ["Market share and profit change\n", self.shares.to_text(),
                 "\nCost breakdown (% of firm total)\n", self.costs.to_text(),
                 "\nContract timeline\n", self.gantt.to_text()]
        for fid, d in self.demand.items():
            parts += [f"\nDemand sources for firm {fid}\n", d.to_text()]
        parts += ["\nElectricity\n", self.energy.to_text()]
        return "".join(parts)

    def csv_files(self):
        files = {"market_share.csv": self.shares.to_csv(), "costs.csv": self.costs.to_csv(),
                 "timeline.csv": self.gantt.to_csv(), "energy.csv": self.energy.to_csv()}
        for fid, d in self.demand.items():
            files[f"demand_{fid}.csv"] = d.to_csv()
        return files

    def svg_files(self):
        files = {"costs.svg": self.costs.to_svg(), "timeline.svg": self.gantt.to_svg(),
                 "energy.svg": self.energy.to_svg()}
        for fid, d in self.demand.items():
            files[f"demand_{fid}.svg"] = d.to_svg()
        return files


def market_report(outcome, sq=None, top=10):
    return MarketReport(
        shares=market_share_report(outcome, sq), costs=cost_breakdown(outcome),
        gantt=contract_gantt(outcome, top), energy=energy_profile(outcome),
        demand={fid: demand_breakdown(outcome, fid) for fid in outcome.firm_ids})


def _svg(width, height, body):
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'font-family="sans-serif" font-size="11">\n' + "\n".join(body) + "\n</svg>\n")
