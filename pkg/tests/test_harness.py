import csv
import json

import numpy as np
import pytest

from qcut.circuit import clustered_topology
from qcut.cli import main
from qcut.errors import InsufficientBudgetError, InvalidArgumentError, ReportParseError
from qcut.harness import (
    CSV_FIELDS,
    ExperimentConfig,
    evaluate_instance,
    instance_circuit,
    read_records,
    report,
    run_cell,
    run_sweep,
    shots_per_variant,
    stream_seed,
)


def _config(**kw):
    base = dict(qubit_counts=[6], fragment_counts=[2], shot_budgets=[2400], instances=2, master_seed=3)
    base.update(kw)
    return ExperimentConfig(**base)


def test_stream_seed_stable():
    assert stream_seed(0, 8, 2, 0) == stream_seed(0, 8, 2, 0)
    assert stream_seed(0, 8, 2, 0) != stream_seed(0, 8, 2, 1)
    assert 0 <= stream_seed("a") < 2**64


def test_config_validation(tmp_path):
    with pytest.raises(InvalidArgumentError):
        _config(qubit_counts=[])
    with pytest.raises(InvalidArgumentError):
        _config(instances=0)
    with pytest.raises(InvalidArgumentError):
        _config(methods=["magic"])
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"qubit_counts": [6], "fragment_counts": [2], "shot_budgets": [100]}))
    assert ExperimentConfig.load(path).instances == 100
    path.write_text(json.dumps({"qubit_counts": [6], "fragment_counts": [2], "shot_budgets": [100], "x": 1}))
    with pytest.raises(InvalidArgumentError):
        ExperimentConfig.load(path)


def test_budget():
    graph = clustered_topology(6, 2)
    assert graph.num_variants == 24
    assert shots_per_variant(graph, 1200) == 50
    assert shots_per_variant(graph, 1210) == 50
    with pytest.raises(InsufficientBudgetError, match="24"):
        shots_per_variant(graph, 23)


def test_run_cell_ghz_like_exact_limit():
    record = run_cell(6, 2, 10**4, 0, "mlft", master_seed=1)
    assert record.n * record.V <= record.S
    assert 0 <= record.infidelity <= 1
    with pytest.raises(InsufficientBudgetError):
        run_cell(9, 3, 100, 0, "direct")


def test_shared_counts_between_methods():
    records = evaluate_instance(0, 6, 2, 0, [2400, 24000])
    by_shots = {}
    for r in records:
        if r.method != "full":
            by_shots.setdefault(r.S, set()).add(r.counts_checksum)
    assert all(len(v) == 1 for v in by_shots.values())
    assert by_shots[2400] != by_shots[24000]


def test_circuit_shared_across_budgets(tmp_path):
    a = instance_circuit(0, 6, 2, 1, tmp_path)
    b = instance_circuit(0, 6, 2, 1, tmp_path)
    c = instance_circuit(0, 6, 2, 1)
    assert a[0] == b[0] == c[0]
    assert len(list(tmp_path.iterdir())) == 1


def test_sweep_cardinality_and_resume(tmp_path):
    out = tmp_path / "r.csv"
    assert run_sweep(_config(), out) == 6
    rows = read_records(out)
    assert len(rows) == 6
    assert {(r["method"], r["instance"]) for r in rows} == {
        (m, i) for m in ("full", "direct", "mlft") for i in ("0", "1")
    }
    assert run_sweep(_config(), out) == 0
    # extending the config only adds the missing rows
    assert run_sweep(_config(instances=3), out) == 3


def test_sweep_parallel_matches_serial(tmp_path):
    config = _config(qubit_counts=[6, 8], shot_budgets=[2400, 24000])
    run_sweep(config, tmp_path / "a.csv", jobs=1)
    run_sweep(config, tmp_path / "b.csv", jobs=2)
    strip = lambda rows: [{k: v for k, v in r.items() if k != "wall_time_s"} for r in rows]
    assert strip(read_records(tmp_path / "a.csv")) == strip(read_records(tmp_path / "b.csv"))


def test_sweep_skips_small_budget(tmp_path, caplog):
    out = tmp_path / "r.csv"
    written = run_sweep(_config(shot_budgets=[10], instances=1), out)
    assert written == 1  # only the full method fits
    assert "skipping" in caplog.text


def test_sweep_bad_path(tmp_path):
    with pytest.raises(OSError, match="nowhere"):
        run_sweep(_config(), tmp_path / "nowhere" / "r.csv")


def _write(path, rows):
    with path.open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _row(method, inf, instance=0, q=6, s=2400):
    n, v, k = (s, 1, 0) if method == "full" else (s // 24, 24, 2)
    return dict(method=method, Q=q, F=2, S=s, n=n, V=v, K=k, instance=instance, seed=1,
                infidelity=inf, clipped_mass=0.0, wall_time_s=0.1, counts_checksum="x")  # fmt: skip


def test_report_single_row(tmp_path):
    _write(tmp_path / "r.csv", [_row("full", 0.25)])
    summary = report(tmp_path / "r.csv", tmp_path / "out")
    assert len(summary) == 1
    assert summary[0]["mean_infidelity"] == 0.25 and summary[0]["std_infidelity"] == 0


def test_report_known_values(tmp_path):
    rows = [_row("direct", v, i) for i, v in enumerate([0.1, 0.3])] + [_row("mlft", 0.2, 0)]
    _write(tmp_path / "r.csv", rows)
    summary = report(tmp_path / "r.csv", tmp_path / "out", plots=True)
    direct = next(e for e in summary if e["method"] == "direct")
    assert direct["mean_infidelity"] == pytest.approx(0.2)
    assert direct["std_infidelity"] == pytest.approx(0.1)
    assert direct["estimate_cut"] == pytest.approx((8 + 8) / 100)
    files = sorted(p.name for p in (tmp_path / "out").iterdir())
    assert "summary.csv" in files and "vs_shots_Q6_F2.csv" in files and "vs_shots_Q6_F2.svg" in files


def test_report_malformed(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("method,Q\nfull,6\n")
    with pytest.raises(ReportParseError, match="line 1"):
        report(path, tmp_path / "out")
    _write(path, [_row("full", 0.1)])
    with path.open("a") as handle:
        handle.write("full,6,2\n")
    with pytest.raises(ReportParseError, match="line 3"):
        report(path, tmp_path / "out")
    _write(path, [])
    with pytest.raises(ReportParseError):
        report(path, tmp_path / "out")


def test_cli_round_trip(tmp_path, capsys):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"qubit_counts": [6], "fragment_counts": [2], "shot_budgets": [2400], "instances": 1}))
    assert main(["sweep", "--config", str(config), "--out", str(tmp_path / "r.csv")]) == 0
    assert main(["report", "--in", str(tmp_path / "r.csv"), "--out-dir", str(tmp_path / "rep")]) == 0
    assert (tmp_path / "rep" / "summary.csv").exists()
    assert main(["generate", "--qubits", "6", "--fragments", "2", "--out", str(tmp_path / "c.json")]) == 0
    assert json.loads((tmp_path / "c.json").read_text())["num_variants"] == 24
    capsys.readouterr()
    assert main(["run", "--qubits", "6", "--fragments", "2", "--shots", "2400", "--method", "direct"]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["n"] == 100 and record["V"] == 24


def test_cli_errors(capsys):
    assert main(["run", "--qubits", "9", "--fragments", "3", "--shots", "10", "--method", "mlft"]) == 2
    assert "168" in capsys.readouterr().err
