import functools
import json
import math
import subprocess
import sys

import pytest

from mginf_mrp.cli import main
from mginf_mrp.renewal import QueueConfig
from mginf_mrp.dist import parse_spec
from mginf_mrp.report import (
    CSV_COLUMNS,
    analysis_from_csv,
    analysis_from_json,
    analysis_to_csv,
    analysis_to_json,
    build_analysis,
    build_compare,
    cells_from_csv,
    fmt,
)
from mginf_mrp.sim import config_for, run

from conftest import CATALOG


def invoke(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def cell(cells, quantity, k=None, provenance=None, source=None):
    hits = [
        c for c in cells
        if c.quantity == quantity and c.k == k
        and (provenance is None or c.provenance == provenance)
        and (source is None or c.source == source)
    ]
    assert len(hits) == 1, (quantity, k, provenance, source, hits)
    return hits[0]


# analyze -----------------------------------------------------------------------


def test_analyze_exponential_json(capsys):
    code, out, _ = invoke(capsys, "analyze", "--lambda", "1", "--dist", "exp:alpha=1.0", "--kmax", "3", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    row = next(r for r in doc["rows"] if r["k"] == 2)
    m = [c for c in row["cells"] if c["quantity"] == "m"]
    computed = next(c for c in m if c["provenance"] == "computed")
    exact = next(c for c in m if c["provenance"] == "exact")
    assert computed["value"] == pytest.approx(1 / 3, abs=1e-12)
    assert exact["value"] == pytest.approx(1 / 3, abs=1e-12)
    assert exact["source"] == "exponential"


def test_analyze_deterministic_csv(capsys):
    code, out, _ = invoke(capsys, "analyze", "--lambda", "1", "--dist", "det:alpha=1.0", "--kmax", "2")
    assert code == 0
    assert out.splitlines()[0] == ",".join(CSV_COLUMNS)
    cells = cells_from_csv(out)
    m1 = cell(cells, "m", 1, "computed")
    assert m1.value == pytest.approx(0.367879, abs=1e-6)
    assert m1.source == "recursion_deterministic"
    # no exact per-state anchor outside exponential service
    assert not [c for c in cells if c.quantity == "m" and c.k == 1 and c.provenance == "exact"]


def test_analyze_error_block(capsys):
    code, out, _ = invoke(capsys, "analyze", "--lambda", "0.5", "--dist", "exp:alpha=1.0", "--kmax", "1", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    eps = next(c for c in doc["errors"] if c["quantity"] == "epsilon")
    assert eps["value"] == pytest.approx(0.648721, abs=1e-6)


def test_analyze_warnings_go_to_stderr(capsys):
    code, out, err = invoke(capsys, "analyze", "--lambda", "1", "--dist", "exp:alpha=1.0", "--kmax", "2")
    assert code == 0
    assert "inapplicable" in err or "not applicable" in err
    assert "WARNING" in err
    assert "WARNING" not in out


def test_every_cell_has_provenance():
    t = build_analysis(QueueConfig(1.0, parse_spec(CATALOG["hyperexp2"])), 4)
    for c in t.cells():
        assert c.provenance in {"computed", "bound", "exact", "input"}
        if c.value is not None:
            assert isinstance(c.value, float)


@pytest.mark.parametrize("spec", list(CATALOG.values()))
@pytest.mark.parametrize("lam", [0.4, 1.0])
def test_serialization_roundtrips(spec, lam):
    t = build_analysis(QueueConfig(lam, parse_spec(spec)), 5)
    from_json = analysis_from_json(analysis_to_json(t))
    from_csv = analysis_from_csv(analysis_to_csv(t))
    assert from_json == t
    assert from_csv == t
    # the two encodings carry the same numbers at 12 significant digits
    assert [fmt(c.value) for c in from_json.cells()] == [fmt(c.value) for c in from_csv.cells()]
    assert analysis_to_csv(from_json) == analysis_to_csv(t)


def test_kmax_zero(capsys):
    code, out, _ = invoke(capsys, "analyze", "--lambda", "1", "--dist", "uniform:a=0,b=2", "--kmax", "0")
    assert code == 0
    assert cell(cells_from_csv(out), "m", 0, "computed").value == 1.0


def test_out_file_and_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"lambda": 2.0, "dist": "erlang:n=2,alpha=1.0", "kmax": 4, "format": "json"}))
    out_path = tmp_path / "t.json"
    code, out, _ = invoke(capsys, "analyze", "--config", str(cfg), "--lambda", "1", "--out", str(out_path))
    assert code == 0 and out == ""
    doc = json.loads(out_path.read_text())
    assert doc["config"]["lambda"] == 1.0  # flag overrides file
    assert doc["config"]["dist"] == "erlang:n=2,alpha=1.0"
    assert max(r["k"] for r in doc["rows"]) == 4


# usage and numeric errors --------------------------------------------------------------


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["bogus"],
        ["analyze", "--dist", "exp:alpha=1"],
        ["analyze", "--lambda", "1"],
        ["analyze", "--lambda", "-1", "--dist", "exp:alpha=1"],
        ["analyze", "--lambda", "1", "--dist", "exp:alpha=-1"],
        ["analyze", "--lambda", "x", "--dist", "exp:alpha=1"],
        ["analyze", "--lambda", "1", "--dist", "exp:alpha=1", "--kmax", "-2"],
        ["analyze", "--lambda", "1", "--dist", "exp:alpha=1", "--format", "xml"],
        ["simulate", "--lambda", "1", "--dist", "exp:alpha=1", "--seed", "1"],
        ["simulate", "--lambda", "1", "--dist", "exp:alpha=1", "--cycles", "0", "--seed", "1"],
        ["errors", "--target-r", "-0.5"],
        ["errors", "--target-r", "0.5", "--rho", "0"],
        ["errors"],
        ["analyze", "--config", "/nonexistent/cfg.json"],
    ],
)
def test_usage_errors_exit_1(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        code = main(argv)
        raise SystemExit(code)
    assert exc.value.code == 1
    _, err = capsys.readouterr()
    assert err


def test_numeric_failure_exit_2(capsys):
    code, _, err = invoke(capsys, "analyze", "--lambda", "1", "--dist", "exp:alpha=1e13", "--kmax", "1")
    assert code == 2
    assert "numeric failure" in err


def test_budget_exhaustion_exit_2(monkeypatch, capsys):
    from mginf_mrp import cli

    small = functools.partial(cli.SimConfig, max_arrivals=10_000)
    monkeypatch.setattr(cli, "SimConfig", small)
    # rho = 60 needs about e^60 arrivals per cycle
    code, _, err = invoke(capsys, "simulate", "--lambda", "60", "--dist", "exp:alpha=1", "--cycles", "1", "--seed", "0")
    assert code == 2
    assert "numeric failure" in err


# simulate and compare ----------------------------------------------------------------


def test_simulate_is_byte_identical(capsys):
    argv = ["simulate", "--lambda", "1", "--dist", "det:alpha=1.0", "--cycles", "5000", "--seed", "7", "--kmax", "3"]
    _, a, _ = invoke(capsys, *argv)
    _, b, _ = invoke(capsys, *argv)
    assert a == b
    _, j, _ = invoke(capsys, *argv, "--format", "json")
    doc = json.loads(j)
    assert doc["metadata"]["seed"] == 7
    assert doc["metadata"]["cycles"] == 5000
    assert doc["entries_per_cycle"][0]["estimate"] == 1.0


def test_simulate_examples(capsys):
    code, out, _ = invoke(capsys, "simulate", "--lambda", "1", "--dist", "exp:alpha=1.0", "--cycles", "200000", "--seed", "42", "--format", "json")
    assert code == 0
    bc = json.loads(out)["busy_cycle_mean"]
    assert abs(bc["estimate"] - math.e) <= 3 * bc["standard_error"]
    code, out, _ = invoke(capsys, "simulate", "--lambda", "1", "--dist", "det:alpha=1.0", "--cycles", "200000", "--seed", "7", "--format", "json")
    bp = json.loads(out)["busy_period_mean"]
    assert abs(bp["estimate"] - (math.e - 1)) <= 3 * bp["standard_error"]


def test_simulate_replications_and_workers(capsys):
    base = ["simulate", "--lambda", "1", "--dist", "exp:alpha=1.0", "--cycles", "2000", "--seed", "3", "--replications", "2"]
    _, a, _ = invoke(capsys, *base)
    _, b, _ = invoke(capsys, *base, "--workers", "2")
    assert a == b


def test_compare_exponential_all_within(capsys):
    code, out, _ = invoke(
        capsys, "compare", "--lambda", "1", "--dist", "exp:alpha=1.0", "--cycles", "100000", "--seed", "11",
        "--kmax", "4", "--format", "json",
    )
    assert code == 0
    rows = json.loads(out)["rows"]
    mrp = [r for r in rows if r["kind"] == "mrp"]
    assert len(mrp) >= 20
    for r in mrp:
        sim = next(
            x for x in rows if x["kind"] == "sim" and x["quantity"] == r["quantity"] and x["k"] == r["k"]
        )
        # the table makes over twenty comparisons at once, hence 4 SE
        assert abs(r["value"] - sim["value"]) <= 4 * sim["stderr"] + 1e-12, (r, sim)
    assert not [r for r in rows if r["status"] == "VIOLATED"]


def test_compare_deterministic_reports_deviation():
    cfg = QueueConfig(1.0, parse_spec("det:alpha=1.0"))
    table = build_analysis(cfg, 2)
    rep = run(config_for(1.0, "det:alpha=1.0", cycles=200_000, k_max=2, seed=7))
    rows = build_compare(table, rep)
    m1 = [r for r in rows if r.quantity == "m" and r.k == 1]
    mrp = next(r for r in m1 if r.kind == "mrp")
    assert mrp.value == pytest.approx(0.367879, abs=1e-6)
    assert not [r for r in m1 if r.kind == "exact"]
    dev = next(r for r in m1 if r.kind == "deviation")
    assert dev.status == "DEVIATES"
    mu0 = [r for r in rows if r.quantity == "mu0"]
    assert next(r for r in mu0 if r.kind == "mrp").value == pytest.approx(1.859141, abs=1e-6)
    sim = next(r for r in mu0 if r.kind == "sim")
    assert abs(sim.value - math.e) <= 3 * sim.stderr
    assert next(r for r in mu0 if r.kind == "exact").value == pytest.approx(math.e)
    ups = [r for r in rows if r.quantity == "v" and r.kind == "sim"]
    assert {r.source for r in ups} == {"entries_per_cycle", "upward_entries_per_cycle"}


def test_compare_csv(capsys):
    code, out, _ = invoke(capsys, "compare", "--lambda", "1", "--dist", "uniform:a=0,b=2", "--cycles", "2000", "--seed", "1", "--kmax", "2")
    assert code == 0
    head = out.splitlines()[0].split(",")
    assert head == ["quantity", "k", "kind", "source", "direction", "value", "stderr", "status"]


# errors ------------------------------------------------------------------------------


def test_errors_threshold(capsys):
    code, out, _ = invoke(capsys, "errors", "--target-r", "0.5")
    assert code == 0
    c = cell(cells_from_csv(out), "scv_max")
    assert c.value == pytest.approx(0.681987068611, abs=1e-12)
    code, out, _ = invoke(capsys, "errors", "--target-r", "0.5", "--rho", "1", "--format", "json")
    doc = json.loads(out)
    assert doc["scv_max"]["value"] == pytest.approx(0.378630797513, abs=1e-12)
    assert doc["scv_max"]["source"] == "computed:delta"


def test_errors_threshold_out_of_range_is_flagged(capsys):
    code, out, err = invoke(capsys, "errors", "--target-r", "2.0")
    assert code == 0
    c = cell(cells_from_csv(out), "scv_max")
    assert c.value is None and not c.applicable
    assert "not applicable" in err


def test_errors_report(capsys):
    code, out, _ = invoke(capsys, "errors", "--lambda", "1", "--dist", "det:alpha=1.0")
    assert code == 0
    eps = cell(cells_from_csv(out), "epsilon")
    assert eps.value == 0.0 and eps.applicable
    code, out, err = invoke(capsys, "errors", "--lambda", "1", "--dist", "exp:alpha=1.0")
    assert code == 0
    assert not cell(cells_from_csv(out), "epsilon").applicable
    assert "not applicable" in err


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "mginf_mrp", "errors", "--target-r", "0.5"], capture_output=True, text=True, check=False
    )
    assert res.returncode == 0
    assert "scv_max" in res.stdout
