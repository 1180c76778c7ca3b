"""Command line: ``analyze``, ``simulate``, ``compare`` and ``errors``.

Exit codes: 0 success, 1 usage error, 2 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import bounds as B
from .dist import parse_spec
from .errors import NumericalFailure
from .renewal import QueueConfig
from .report import (
    analysis_to_csv,
    analysis_to_json,
    build_analysis,
    build_compare,
    cells_to_csv,
    compare_to_csv,
    compare_to_json,
    rnd,
    Cell,
    sim_to_csv,
    sim_to_json,
)
from .sim import SimConfig, SimulationBudgetError, run

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

log = logging.getLogger("mginf_mrp")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# defaults applied after the config file has been merged
_DEFAULTS = {"format": "csv", "kmax": 10, "replications": 1, "workers": 1, "out": None}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file with the same keys as the flags")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--out", type=Path, default=None)


def _queue_flags(p: argparse.ArgumentParser, required_note: str = "") -> None:
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="arrival rate")
    p.add_argument("--dist", default=None, help="service law, e.g. erlang:n=2,alpha=1.0")
    p.add_argument("--kmax", type=int, default=None)


def _sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cycles", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--replications", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mginf-mrp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="approximation, bounds and exact anchors per state")
    _queue_flags(p)
    _common(p)

    p = sub.add_parser("simulate", help="regenerative simulation of the true queue")
    _queue_flags(p)
    _sim_flags(p)
    _common(p)

    p = sub.add_parser("compare", help="analysis joined with simulation")
    _queue_flags(p)
    _sim_flags(p)
    _common(p)

    p = sub.add_parser("errors", help="relative-error criteria and goodness threshold")
    _queue_flags(p)
    p.add_argument("--target-r", dest="target_r", type=float, default=None)
    p.add_argument("--rho", type=float, default=None)
    _common(p)
    return parser


def _merge_config(args: argparse.Namespace) -> dict:
    opts: dict = {}
    if args.config is not None:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(raw, dict):
            raise UsageError("config file must hold a JSON object")
        for key, val in raw.items():
            key = key.replace("-", "_")
            opts["lam" if key == "lambda" else key] = val
    for key, val in vars(args).items():
        if val is not None and key not in ("config", "command", "verbose"):
            opts[key] = val
    for key, val in _DEFAULTS.items():
        opts.setdefault(key, val)
    return opts


def _need(opts: dict, *keys: str) -> None:
    missing = [k for k in keys if opts.get(k) is None]
    if missing:
        names = ["--lambda" if k == "lam" else "--" + k.replace("_", "-") for k in missing]
        raise UsageError(f"missing required option(s): {', '.join(names)}")


def _queue(opts: dict) -> QueueConfig:
    _need(opts, "lam", "dist")
    try:
        return QueueConfig(float(opts["lam"]), parse_spec(str(opts["dist"])))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _sim_config(opts: dict, cfg: QueueConfig) -> SimConfig:
    _need(opts, "cycles", "seed")
    try:
        return SimConfig(
            cfg,
            cycles=int(opts["cycles"]),
            k_max=int(opts["kmax"]),
            seed=int(opts["seed"]),
            replications=int(opts["replications"]),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _emit(text: str, opts: dict) -> None:
    if opts.get("out"):
        Path(opts["out"]).write_text(text)
    else:
        sys.stdout.write(text)


def _warn(msg: str) -> None:
    log.warning(msg)


def cmd_analyze(opts: dict) -> int:
    cfg = _queue(opts)
    kmax = int(opts["kmax"])
    if kmax < 0:
        raise UsageError("--kmax must be >= 0")
    table = build_analysis(cfg, kmax, warn=_warn)
    _emit(analysis_to_json(table) if opts["format"] == "json" else analysis_to_csv(table), opts)
    return EXIT_OK


def cmd_simulate(opts: dict) -> int:
    cfg = _queue(opts)
    sc = _sim_config(opts, cfg)
    report = run(sc, workers=int(opts["workers"]))
    _emit(sim_to_json(report) if opts["format"] == "json" else sim_to_csv(report), opts)
    return EXIT_OK


def cmd_compare(opts: dict) -> int:
    cfg = _queue(opts)
    sc = _sim_config(opts, cfg)
    table = build_analysis(cfg, sc.k_max, warn=_warn)
    report = run(sc, workers=int(opts["workers"]))
    rows = build_compare(table, report)
    _emit(compare_to_json(rows, table, report) if opts["format"] == "json" else compare_to_csv(rows), opts)
    return EXIT_OK


def cmd_errors(opts: dict) -> int:
    cells: list[Cell] = []
    if opts.get("target_r") is not None:
        r = float(opts["target_r"])
        rho = opts.get("rho")
        if not r > 0:
            raise UsageError("--target-r must be positive")
        if rho is not None and not float(rho) > 0:
            raise UsageError("--rho must be positive")
        form = "delta" if rho is not None else "epsilon"
        cells.append(Cell("target_r", None, rnd(r), "input"))
        if rho is not None:
            cells.append(Cell("rho", None, rnd(float(rho)), "input"))
        try:
            scv_max = B.goodness_threshold(r, None if rho is None else float(rho))
            cells.append(Cell("scv_max", None, rnd(scv_max), "computed", form))
        except ValueError as exc:
            _warn(f"goodness threshold not applicable: {exc}")
            cells.append(Cell("scv_max", None, None, "computed", form, "", False))
    else:
        cfg = _queue(opts)
        rep = B.error_report(cfg)
        if not rep.applicable:
            _warn(f"error criteria not applicable: {rep.inapplicability_reason}")
        cells.append(Cell("rho", None, rnd(cfg.rho), "computed"))
        cells.append(Cell("scv", None, rnd(cfg.dist.scv), "computed"))
        for name in ("epsilon", "epsilon_cap", "delta", "delta_cap", "universal_cap"):
            cells.append(Cell(name, None, rnd(getattr(rep, name)), "computed", "relative_error", "", rep.applicable))
    if opts["format"] == "json":
        doc = {
            c.quantity: {"value": c.value, "source": c.tag, "applicable": c.applicable} for c in cells
        }
        _emit(json.dumps(doc, indent=2) + "\n", opts)
    else:
        _emit(cells_to_csv(cells), opts)
    return EXIT_OK


_COMMANDS = {"analyze": cmd_analyze, "simulate": cmd_simulate, "compare": cmd_compare, "errors": cmd_errors}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    # own handler rather than basicConfig, which is a no-op when the host already configured logging
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    saved = (log.level, log.propagate)
    log.addHandler(handler)
    log.setLevel(logging.INFO if args.verbose else logging.WARNING)
    log.propagate = False
    try:
        opts = _merge_config(args)
        return _COMMANDS[args.command](opts)
    except UsageError as exc:
        print(f"mginf-mrp {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, SimulationBudgetError, OverflowError) as exc:
        print(f"mginf-mrp {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    finally:
        log.removeHandler(handler)
        log.setLevel(saved[0])
        log.propagate = saved[1]


if __name__ == "__main__":
    sys.exit(main())
