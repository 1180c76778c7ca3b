"""Tables produced by the command line: building, CSV/JSON serialization, parsing.

Every numeric cell carries a provenance (computed, bound, exact, simulated)
and a source detail. Numbers are written with 12 significant digits.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

from . import bounds as B
from .exact import exact_anchors
from .renewal import QueueConfig, entries_mean, sojourn_means
from .sim import Estimate, SimReport

CSV_COLUMNS = ("k", "quantity", "value", "source", "direction", "applicable", "stderr")
COMPARE_COLUMNS = ("quantity", "k", "kind", "source", "direction", "value", "stderr", "status")
SIG_DIGITS = 12


def fmt(x: float | None) -> str:
    if x is None:
        return ""
    return f"{x:.{SIG_DIGITS}g}"


def rnd(x: float | None) -> float | None:
    """Round to 12 significant digits; non-finite values become None."""
    if x is None or not math.isfinite(x):
        return None
    return float(fmt(x))


@dataclass(frozen=True)
class Cell:
    quantity: str
    k: int | None
    value: float | None
    provenance: str  # computed | bound | exact | simulated | input
    source: str = ""
    direction: str = ""
    applicable: bool = True
    stderr: float | None = None

    @property
    def tag(self) -> str:
        return f"{self.provenance}:{self.source}" if self.source else self.provenance


@dataclass
class AnalysisTable:
    lam: float
    dist: str
    rho: float
    scv: float
    regime: str
    rows: dict[int, list[Cell]] = field(default_factory=dict)
    cycle: list[Cell] = field(default_factory=list)
    errors: list[Cell] | None = None

    def cells(self) -> list[Cell]:
        out = [
            Cell("lambda", None, self.lam, "input"),
            Cell("dist", None, None, "input", self.dist),
            Cell("rho", None, self.rho, "computed"),
            Cell("scv", None, self.scv, "computed"),
            Cell("regime", None, None, "computed", self.regime),
        ]
        for k in sorted(self.rows):
            out.extend(self.rows[k])
        out.extend(self.cycle)
        if self.errors is not None:
            out.extend(self.errors)
        return out

    def find(self, quantity: str, k: int | None = None, provenance: str | None = None) -> list[Cell]:
        pool = self.rows.get(k, []) if k is not None else self.cycle + (self.errors or [])
        return [c for c in pool if c.quantity == quantity and (provenance is None or c.provenance == provenance)]


def _bound_cell(quantity: str, k: int | None, b: B.BoundValue) -> Cell:
    return Cell(quantity, k, rnd(b.value), "bound", b.source.value, b.direction.value, b.applicable)


def build_analysis(cfg: QueueConfig, k_max: int, *, warn=None) -> AnalysisTable:
    """Numeric approximation, bounds and exact anchors for k = 0..k_max."""
    if k_max < 0:
        raise ValueError("kmax must be >= 0")
    warn = warn or (lambda msg: None)
    rows_m = sojourn_means(cfg, k_max)
    cm = entries_mean(cfg, max(k_max, 1))
    anchors = exact_anchors(cfg, k_max)
    table = AnalysisTable(
        lam=cfg.lam, dist=cfg.dist.spec, rho=rnd(cfg.rho), scv=rnd(cfg.dist.scv), regime=B.regime_case(cfg)
    )
    for k in range(k_max + 1):
        row = rows_m[k]
        cells = [Cell("m", k, rnd(row.m), "computed", row.method.value)]
        if k == 0:
            e0 = B.basic_bounds(cfg, 0)[0]
            cells.append(_bound_cell("m", k, e0))
            cells.append(Cell("m", k, rnd(anchors.m0), "exact", "state0"))
        else:
            cells.extend(_bound_cell("m", k, b) for b in B.basic_bounds(cfg, k))
            reg = B.regime_bound(cfg, k)
            cells.append(
                Cell("m_regime", k, rnd(reg.value), "bound", reg.source.value, reg.direction.value, reg.applicable)
            )
            cells.extend(_bound_cell("m", k, b) for b in B.class_bounds(cfg, k))
            if anchors.mk_exponential is not None:
                cells.append(Cell("m", k, rnd(anchors.mk_exponential[k]), "exact", "exponential"))
        cells.append(Cell("v", k, rnd(cm.v[k]), "computed", "corrected" if k else "cycle_convention"))
        cells.append(Cell("mv", k, rnd(cm.time_in_state[k]), "computed", "series_term"))
        if k >= 1:
            vb = B.visit_bounds(cfg, k)
            for i, b in enumerate(vb.candidates):
                cells.append(_bound_cell("v" if i % 2 == 0 else "mv", k, b))
        cells.append(Cell("mv", k, rnd(anchors.mkvk[k]), "exact", "insensitive"))
        cells.append(Cell("p", k, rnd(anchors.p[k]), "exact", "poisson"))
        table.rows[k] = cells

    cb = B.cycle_bounds(cfg)
    table.cycle = [
        Cell("mu0", None, rnd(cm.mu0), "computed", "series"),
        Cell("truncation_k", None, float(cm.truncation_k), "computed", "series"),
        Cell("truncation_error", None, rnd(cm.truncation_error_estimate), "computed", "series"),
        Cell("mu0", None, rnd(anchors.mu0), "exact", "insensitive"),
        Cell("busy_period_mean", None, rnd(cm.busy_period_mean), "computed", "series"),
        Cell("busy_period_mean", None, rnd(anchors.eb), "exact", "insensitive"),
    ]
    for i, b in enumerate(cb.candidates):
        table.cycle.append(_bound_cell("mu0" if i % 2 == 0 else "busy_period_mean", None, b))

    rep = B.error_report(cfg)
    if rep.applicable:
        table.errors = [
            Cell(name, None, rnd(getattr(rep, name)), "computed", "relative_error")
            for name in ("epsilon", "epsilon_cap", "delta", "delta_cap", "universal_cap")
        ]
    else:
        warn(f"error criteria not applicable: {rep.inapplicability_reason}")
    n_off = sum(1 for c in table.cells() if c.provenance == "bound" and not c.applicable)
    if n_off:
        warn(f"{n_off} bounds flagged inapplicable (hypothesis not met)")
    warn(f"series truncated at j={cm.truncation_k}, tail estimate {cm.truncation_error_estimate:.3g}")
    return table


# serialization --------------------------------------------------------------


def _cell_json(c: Cell) -> dict:
    d = asdict(c)
    d.pop("k")
    d.pop("quantity")
    return {"quantity": c.quantity, **d}


def analysis_to_json(t: AnalysisTable) -> str:
    doc = {
        "config": {"lambda": rnd(t.lam), "dist": t.dist, "rho": t.rho, "scv": t.scv, "regime": t.regime},
        "rows": [{"k": k, "cells": [_cell_json(c) for c in t.rows[k]]} for k in sorted(t.rows)],
        "cycle": [_cell_json(c) for c in t.cycle],
        "errors": None if t.errors is None else [_cell_json(c) for c in t.errors],
    }
    return json.dumps(doc, indent=2) + "\n"


def _cell_from_json(d: dict, k: int | None) -> Cell:
    return Cell(
        d["quantity"], k, d["value"], d["provenance"], d["source"], d["direction"], d["applicable"], d["stderr"]
    )


def analysis_from_json(text: str) -> AnalysisTable:
    doc = json.loads(text)
    cfg = doc["config"]
    t = AnalysisTable(cfg["lambda"], cfg["dist"], cfg["rho"], cfg["scv"], cfg["regime"])
    for row in doc["rows"]:
        t.rows[row["k"]] = [_cell_from_json(c, row["k"]) for c in row["cells"]]
    t.cycle = [_cell_from_json(c, None) for c in doc["cycle"]]
    t.errors = None if doc["errors"] is None else [_cell_from_json(c, None) for c in doc["errors"]]
    return t


def cells_to_csv(cells: list[Cell]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for c in cells:
        w.writerow(
            [
                "" if c.k is None else c.k,
                c.quantity,
                fmt(c.value),
                c.tag,
                c.direction,
                "true" if c.applicable else "false",
                fmt(c.stderr),
            ]
        )
    return buf.getvalue()


def analysis_to_csv(t: AnalysisTable) -> str:
    return cells_to_csv(t.cells())


def _parse_tag(tag: str) -> tuple[str, str]:
    prov, _, src = tag.partition(":")
    return prov, src


def cells_from_csv(text: str) -> list[Cell]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    out = []
    for r in reader:
        prov, src = _parse_tag(r["source"])
        out.append(
            Cell(
                quantity=r["quantity"],
                k=int(r["k"]) if r["k"] else None,
                value=float(r["value"]) if r["value"] else None,
                provenance=prov,
                source=src,
                direction=r["direction"],
                applicable=r["applicable"] == "true",
                stderr=float(r["stderr"]) if r["stderr"] else None,
            )
        )
    return out


def analysis_from_csv(text: str) -> AnalysisTable:
    cells = cells_from_csv(text)
    head = {c.quantity: c for c in cells[:5]}
    t = AnalysisTable(
        lam=head["lambda"].value,
        dist=head["dist"].source,
        rho=head["rho"].value,
        scv=head["scv"].value,
        regime=head["regime"].source,
    )
    errors: list[Cell] = []
    for c in cells[5:]:
        if c.k is not None:
            t.rows.setdefault(c.k, []).append(c)
        elif c.quantity in ("epsilon", "epsilon_cap", "delta", "delta_cap", "universal_cap"):
            errors.append(c)
        else:
            t.cycle.append(c)
    t.errors = errors or None
    return t


# simulation reports ------------------------------------------------------------

_SIM_SEQ = (
    "sojourn_mean",
    "entries_per_cycle",
    "upward_entries_per_cycle",
    "time_in_state_per_cycle",
    "occupancy",
)


def _est_json(e: Estimate) -> dict:
    return {"estimate": rnd(e.estimate), "standard_error": rnd(e.standard_error), "count": e.count}


def sim_to_json(r: SimReport) -> str:
    doc = {
        "config": {"lambda": rnd(r.lam), "dist": r.dist_spec, "kmax": r.k_max},
        "metadata": {
            "seed": r.seed,
            "streams": [list(s) for s in r.streams],
            "cycles": r.cycles,
            "total_time": rnd(r.total_time),
        },
        "busy_cycle_mean": _est_json(r.busy_cycle_mean),
        "busy_period_mean": _est_json(r.busy_period_mean),
        **{name: [_est_json(e) for e in getattr(r, name)] for name in _SIM_SEQ},
        "occupancy_tail": _est_json(r.occupancy_tail),
    }
    return json.dumps(doc, indent=2) + "\n"


def sim_cells(r: SimReport) -> list[Cell]:
    def cell(q, k, e: Estimate) -> Cell:
        return Cell(q, k, rnd(e.estimate), "simulated", "", "", True, rnd(e.standard_error))

    out = [
        Cell("lambda", None, rnd(r.lam), "input"),
        Cell("dist", None, None, "input", r.dist_spec),
        Cell("seed", None, float(r.seed), "input"),
        Cell("cycles", None, float(r.cycles), "simulated"),
        Cell("total_time", None, rnd(r.total_time), "simulated"),
        cell("busy_cycle_mean", None, r.busy_cycle_mean),
        cell("busy_period_mean", None, r.busy_period_mean),
        cell("occupancy_tail", None, r.occupancy_tail),
    ]
    for name in _SIM_SEQ:
        out.extend(cell(name, k, e) for k, e in enumerate(getattr(r, name)))
    return out


def sim_to_csv(r: SimReport) -> str:
    return cells_to_csv(sim_cells(r))


# comparison --------------------------------------------------------------------


@dataclass(frozen=True)
class CompareRow:
    quantity: str
    k: int | None
    kind: str  # mrp | exact | sim | bound | deviation
    source: str
    value: float | None
    direction: str = ""
    stderr: float | None = None
    status: str = ""


def bound_status(b_value: float, direction: str, applicable: bool, sim: Estimate, n_se: float = 3.0) -> str:
    if not applicable:
        return "N/A"
    if direction == "upper":
        return "VIOLATED" if sim.estimate - n_se * sim.standard_error > b_value else "HELD"
    return "VIOLATED" if sim.estimate + n_se * sim.standard_error < b_value else "HELD"


def build_compare(t: AnalysisTable, r: SimReport, n_se: float = 3.0) -> list[CompareRow]:
    """Join an analysis table with a simulation report, quantity by quantity."""
    out: list[CompareRow] = []

    def block(quantity: str, k: int | None, cells: list[Cell], sim: Estimate | None, sim_name: str) -> None:
        mrp = [c for c in cells if c.provenance == "computed"]
        for c in mrp:
            out.append(CompareRow(quantity, k, "mrp", c.source, c.value))
        for c in cells:
            if c.provenance == "exact":
                out.append(CompareRow(quantity, k, "exact", c.source, c.value))
        if sim is not None:
            out.append(CompareRow(quantity, k, "sim", sim_name, rnd(sim.estimate), "", rnd(sim.standard_error)))
            for c in mrp:
                if c.value is not None and sim.estimate:
                    dev = (c.value - sim.estimate) / sim.estimate
                    z = abs(c.value - sim.estimate) / sim.standard_error if sim.standard_error else math.inf
                    status = "WITHIN_3SE" if z <= n_se else "DEVIATES"
                    out.append(CompareRow(quantity, k, "deviation", "(mrp-sim)/sim", rnd(dev), "", None, status))
        for c in cells:
            if c.provenance == "bound":
                status = bound_status(c.value, c.direction, c.applicable, sim, n_se) if sim is not None else ""
                out.append(CompareRow(quantity, k, "bound", c.source, c.value, c.direction, None, status))

    cyc = t.cycle
    block("mu0", None, [c for c in cyc if c.quantity == "mu0"], r.busy_cycle_mean, "busy_cycle_mean")
    block(
        "busy_period_mean", None, [c for c in cyc if c.quantity == "busy_period_mean"],
        r.busy_period_mean, "busy_period_mean",
    )
    mu0 = next(c.value for c in cyc if c.quantity == "mu0" and c.provenance == "computed")
    for k in sorted(t.rows):
        if k > r.k_max:
            break
        cells = t.rows[k]
        block("m", k, [c for c in cells if c.quantity in ("m", "m_regime")], r.sojourn_mean[k], "sojourn_mean")
        block("v", k, [c for c in cells if c.quantity == "v"], r.entries_per_cycle[k], "entries_per_cycle")
        out.append(
            CompareRow(
                "v", k, "sim", "upward_entries_per_cycle",
                rnd(r.upward_entries_per_cycle[k].estimate), "", rnd(r.upward_entries_per_cycle[k].standard_error),
            )
        )
        block("mv", k, [c for c in cells if c.quantity == "mv"], r.time_in_state_per_cycle[k], "time_in_state_per_cycle")
        # stationary occupancy of the approximating process is m_k v_k / mu0
        mv = next(c.value for c in cells if c.quantity == "mv" and c.provenance == "computed")
        p_cells = [Cell("p", k, rnd(mv / mu0), "computed", "mv/mu0")] + [c for c in cells if c.quantity == "p"]
        block("p", k, p_cells, r.occupancy[k], "occupancy")
    return out


def compare_to_csv(rows: list[CompareRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COMPARE_COLUMNS)
    for c in rows:
        w.writerow(
            [c.quantity, "" if c.k is None else c.k, c.kind, c.source, c.direction, fmt(c.value), fmt(c.stderr), c.status]
        )
    return buf.getvalue()


def compare_to_json(rows: list[CompareRow], t: AnalysisTable, r: SimReport) -> str:
    doc = {
        "config": {"lambda": rnd(t.lam), "dist": t.dist, "rho": t.rho, "scv": t.scv, "kmax": r.k_max},
        "metadata": {"seed": r.seed, "cycles": r.cycles},
        "rows": [asdict(c) for c in rows],
    }
    return json.dumps(doc, indent=2) + "\n"
