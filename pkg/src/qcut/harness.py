"""
Experiment orchestration: seeded instances, method comparison, CSV sweeps and reports.

Random streams are derived from a BLAKE2b hash of the decimal parts that identify them (see
`stream_seed`), so results never depend on execution order or the number of worker processes.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from qcut.circuit import (
    Circuit,
    CutPoint,
    FragmentGraph,
    build_clustered_ruc,
    circuit_from_dict,
    circuit_to_dict,
    clustered_topology,
    cut_circuit,
    cuts_from_json,
    cuts_to_json,
)
from qcut.direct import VariantData, direct_tensor
from qcut.errors import InsufficientBudgetError, InvalidArgumentError, ReportParseError
from qcut.fragsim import (
    exact_full_distribution,
    exact_variant_distributions,
    sample_full,
    sample_variant,
    statevector_limit,
    variant_keys,
)
from qcut.metrics import (
    estimate_infidelity_cut,
    expected_infidelity_full,
    fidelity,
    instance_stats,
    legend_infidelity_full,
)
from qcut.mlft import fit_ansatz, project_maximum_likelihood, tensor_from_choi
from qcut.recombine import RawReconstruction, clip_and_normalize, contract, negative_mass

log = logging.getLogger(__name__)

METHODS = ("full", "direct", "mlft")
CUTTING_METHODS = ("direct", "mlft")
CSV_FIELDS = (
    "method", "Q", "F", "S", "n", "V", "K", "instance", "seed",
    "infidelity", "clipped_mass", "wall_time_s", "counts_checksum",
)  # fmt: skip


def stream_seed(*parts: object) -> int:
    """64-bit seed from the first 8 bytes of BLAKE2b("qcut/" + "/".join(parts))."""
    text = "qcut/" + "/".join(str(part) for part in parts)
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


def make_rng(*parts: object) -> np.random.Generator:
    return np.random.default_rng(stream_seed(*parts))


@dataclass
class ExperimentConfig:
    qubit_counts: list[int]
    fragment_counts: list[int]
    shot_budgets: list[int]
    instances: int = 100
    master_seed: int = 0
    methods: list[str] = field(default_factory=lambda: list(METHODS))
    statevector_limit: int = field(default_factory=statevector_limit)

    def __post_init__(self) -> None:
        for name in ("qubit_counts", "fragment_counts", "shot_budgets", "methods"):
            if not getattr(self, name):
                raise InvalidArgumentError(f"{name} must be non-empty")
        if self.instances < 1:
            raise InvalidArgumentError("instances must be at least 1")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise InvalidArgumentError(f"unknown methods {sorted(unknown)}")

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(doc) - known
        if extra:
            raise InvalidArgumentError(f"unknown config fields {sorted(extra)}")
        return cls(**doc)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class ResultRecord:
    method: str
    Q: int
    F: int
    S: int
    n: int
    V: int
    K: int
    instance: int
    seed: int
    infidelity: float
    clipped_mass: float
    wall_time_s: float
    counts_checksum: str

    def row(self) -> dict[str, str]:
        out = {key: str(value) for key, value in asdict(self).items()}
        out["infidelity"] = repr(self.infidelity)
        out["clipped_mass"] = repr(self.clipped_mass)
        out["wall_time_s"] = f"{self.wall_time_s:.4f}"
        return out

    @property
    def key(self) -> tuple:
        return (self.method, self.Q, self.F, self.S, self.instance)


####################################################################################################
# single instances


def instance_circuit(
    master_seed: int, num_qubits: int, num_fragments: int, instance: int, cache_dir: str | Path | None = None
) -> tuple[Circuit, list[CutPoint]]:
    """The clustered circuit shared by every method and shot budget of one instance."""
    path = None
    if cache_dir is not None:
        path = Path(cache_dir) / f"circuit_s{master_seed}_q{num_qubits}_f{num_fragments}_i{instance}.json"
        if path.exists():
            doc = json.loads(path.read_text())
            return circuit_from_dict(doc["circuit"]), cuts_from_json(doc["cuts"])
    rng = make_rng(master_seed, num_qubits, num_fragments, instance, "circuit")
    circuit, cuts = build_clustered_ruc(num_qubits, num_fragments, rng)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        doc = {"circuit": circuit_to_dict(circuit), "cuts": cuts_to_json(cuts)}
        path.write_text(json.dumps(doc))
    return circuit, cuts


def shots_per_variant(graph: FragmentGraph, shots: int) -> int:
    n = shots // graph.num_variants
    if n == 0:
        raise InsufficientBudgetError(f"{shots} shots cannot cover V = {graph.num_variants} variants")
    return n


def reconstruct(graph: FragmentGraph, data: Sequence[Mapping[object, VariantData]], method: str) -> RawReconstruction:
    """Raw (unclipped) reconstruction from per-fragment variant data."""
    tensors = []
    for fragment, fragment_data in zip(graph.fragments, data):
        if method == "direct":
            tensors.append(direct_tensor(fragment, fragment_data))
        elif method == "mlft":
            blocks = project_maximum_likelihood(fit_ansatz(fragment, fragment_data))
            tensors.append(tensor_from_choi(blocks, fragment))
        else:
            raise InvalidArgumentError(f"not a cutting method: {method}")
    return contract(tensors, graph)


def _checksum(arrays: Iterable[np.ndarray]) -> str:
    digest = hashlib.sha256()
    for array in arrays:
        digest.update(np.ascontiguousarray(array, dtype=np.int64).tobytes())
    return digest.hexdigest()[:16]


def _infidelity(exact: np.ndarray, estimate: np.ndarray) -> float:
    return min(1.0, max(0.0, fidelity(exact, estimate).infidelity))


def evaluate_instance(
    master_seed: int,
    num_qubits: int,
    num_fragments: int,
    instance: int,
    shot_budgets: Sequence[int],
    methods: Sequence[str] = METHODS,
    limit: int | None = None,
    cache_dir: str | Path | None = None,
) -> list[ResultRecord]:
    """
    Run every requested (shot budget, method) pair on one circuit instance.

    Both cutting methods consume the same sampled variant counts for a given budget.
    """
    limit = statevector_limit() if limit is None else limit
    seed = stream_seed(master_seed, num_qubits, num_fragments, instance)
    circuit, cuts = instance_circuit(master_seed, num_qubits, num_fragments, instance, cache_dir)
    graph = cut_circuit(circuit, cuts)
    exact = exact_full_distribution(circuit, limit)
    cutting = [m for m in methods if m in CUTTING_METHODS]
    variant_dists = [exact_variant_distributions(f, limit) for f in graph.fragments] if cutting else []
    records = []
    for shots in shot_budgets:
        if "full" in methods:
            start = time.perf_counter()
            rng = make_rng(master_seed, num_qubits, num_fragments, instance, shots, "full")
            freqs = sample_full(circuit, shots, rng, exact=exact)
            infidelity = _infidelity(exact, freqs)
            records.append(
                ResultRecord(
                    "full", num_qubits, num_fragments, shots, shots, 1, 0, instance, seed, infidelity,
                    0.0, time.perf_counter() - start, _checksum([np.rint(freqs * shots)]),
                )  # fmt: skip
            )
        if not cutting:
            continue
        try:
            n = shots_per_variant(graph, shots)
        except InsufficientBudgetError as exc:
            log.warning("skipping Q=%d F=%d S=%d: %s", num_qubits, num_fragments, shots, exc)
            continue
        leftover = shots - n * graph.num_variants
        if leftover:
            log.debug("S=%d V=%d: discarding %d leftover shots", shots, graph.num_variants, leftover)
        start = time.perf_counter()
        counts = []
        for f, fragment in enumerate(graph.fragments):
            fragment_counts = {}
            for v, key in enumerate(variant_keys(fragment)):
                rng = make_rng(master_seed, num_qubits, num_fragments, instance, shots, f, v)
                fragment_counts[key] = sample_variant(variant_dists[f][key], n, rng)
            counts.append(fragment_counts)
        checksum = _checksum(c.counts for fragment_counts in counts for c in fragment_counts.values())
        sampling_time = time.perf_counter() - start
        for method in cutting:
            start = time.perf_counter()
            raw = reconstruct(graph, counts, method)
            estimate = clip_and_normalize(raw)
            records.append(
                ResultRecord(
                    method, num_qubits, num_fragments, shots, n, graph.num_variants, graph.num_cuts,
                    instance, seed, _infidelity(exact, estimate), negative_mass(raw),
                    sampling_time + time.perf_counter() - start, checksum,
                )  # fmt: skip
            )
    return records


def run_cell(
    num_qubits: int,
    num_fragments: int,
    shots: int,
    instance: int,
    method: str,
    master_seed: int = 0,
    limit: int | None = None,
    cache_dir: str | Path | None = None,
) -> ResultRecord:
    if method not in METHODS:
        raise InvalidArgumentError(f"unknown method {method}")
    if method in CUTTING_METHODS:
        shots_per_variant(clustered_topology(num_qubits, num_fragments), shots)
    limit = statevector_limit() if limit is None else limit
    (record,) = evaluate_instance(
        master_seed, num_qubits, num_fragments, instance, [shots], [method], limit, cache_dir
    )
    return record


####################################################################################################
# sweeps


def read_records(path: str | Path) -> list[dict[str, str]]:
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or list(reader.fieldnames) != list(CSV_FIELDS):
            raise ReportParseError(f"{path}: line 1: expected header {','.join(CSV_FIELDS)}")
        rows = []
        for row in reader:
            if None in row or any(value is None or value == "" for value in row.values()):
                raise ReportParseError(f"{path}: line {reader.line_num}: wrong number of fields")
            rows.append(row)
    return rows


def _row_key(row: Mapping[str, str]) -> tuple:
    return (row["method"], int(row["Q"]), int(row["F"]), int(row["S"]), int(row["instance"]))


def _work_units(config: ExperimentConfig, done: set) -> Iterator[tuple]:
    for num_qubits in config.qubit_counts:
        for num_fragments in config.fragment_counts:
            if num_qubits < 2 * num_fragments:
                log.warning("skipping Q=%d F=%d: clusters would be too small", num_qubits, num_fragments)
                continue
            methods = [m for m in METHODS if m in config.methods]
            if "full" in methods and num_qubits > config.statevector_limit:
                log.warning("skipping full method at Q=%d: above statevector limit", num_qubits)
                methods.remove("full")
            for instance in range(config.instances):
                todo = [
                    (shots, method)
                    for shots in config.shot_budgets
                    for method in methods
                    if (method, num_qubits, num_fragments, shots, instance) not in done
                ]
                if todo:
                    shots = sorted({s for s, _ in todo}, key=config.shot_budgets.index)
                    needed = [m for m in methods if any(m == method for _, method in todo)]
                    yield (config.master_seed, num_qubits, num_fragments, instance, shots, needed,
                           config.statevector_limit)  # fmt: skip


def _run_unit(unit: tuple, cache_dir: str | None) -> list[ResultRecord]:
    master_seed, num_qubits, num_fragments, instance, shots, methods, limit = unit
    return evaluate_instance(master_seed, num_qubits, num_fragments, instance, shots, methods, limit, cache_dir)


def run_sweep(
    config: ExperimentConfig,
    out_path: str | Path,
    jobs: int = 1,
    cache_dir: str | Path | None = None,
) -> int:
    """
    Append one row per (method, Q, F, S, instance) to a CSV file, skipping rows already present.

    Rows are written in a fixed order regardless of `jobs`.  Returns the number of new rows.
    """
    out_path = Path(out_path)
    done: set = set()
    if out_path.exists() and out_path.stat().st_size > 0:
        done = {_row_key(row) for row in read_records(out_path)}
        log.info("%s: %d existing rows", out_path, len(done))
    units = list(_work_units(config, done))
    log.info("%d instance units to run", len(units))
    cache = None if cache_dir is None else str(cache_dir)

    written = 0
    new_file = not out_path.exists() or out_path.stat().st_size == 0
    try:
        handle = out_path.open("a", newline="")
    except OSError as exc:
        raise OSError(f"cannot open {out_path} for writing: {exc}") from exc
    with handle:
        writer = csv.DictWriter(handle, fieldnames=CSV_FIELDS)
        if new_file:
            writer.writeheader()
        if jobs > 1:
            pool = ProcessPoolExecutor(max_workers=jobs)
            results: Iterable[list[ResultRecord]] = pool.map(_run_unit, units, [cache] * len(units))
        else:
            pool = None
            results = (_run_unit(unit, cache) for unit in units)
        try:
            for index, records in enumerate(results, start=1):
                for record in records:
                    if record.key not in done:
                        writer.writerow(record.row())
                        written += 1
                handle.flush()
                log.info("unit %d/%d done (Q=%d F=%d instance=%d)", index, len(units), *units[index - 1][1:4])
        finally:
            if pool is not None:
                pool.shutdown()
    return written


####################################################################################################
# reports


SUMMARY_FIELDS = (
    "method", "Q", "F", "S", "n", "V", "K", "count", "mean_infidelity", "std_infidelity",
    "estimate_full", "estimate_full_legend", "estimate_cut", "bound_cut",
)  # fmt: skip


def summarize(rows: Sequence[Mapping[str, str]]) -> list[dict]:
    groups: dict[tuple, list[Mapping[str, str]]] = {}
    for row in rows:
        key = (row["method"], int(row["Q"]), int(row["F"]), int(row["S"]))
        groups.setdefault(key, []).append(row)
    summary = []
    for (method, num_qubits, num_fragments, shots), members in sorted(
        groups.items(), key=lambda item: (METHODS.index(item[0][0]), *item[0][1:])
    ):
        stats = instance_stats([float(row["infidelity"]) for row in members])
        first = members[0]
        n, num_variants, num_cuts = int(first["n"]), int(first["V"]), int(first["K"])
        entry = {
            "method": method, "Q": num_qubits, "F": num_fragments, "S": shots, "n": n,
            "V": num_variants, "K": num_cuts, "count": stats.count,
            "mean_infidelity": stats.mean, "std_infidelity": stats.std,
            "estimate_full": expected_infidelity_full(num_qubits, shots),
            "estimate_full_legend": legend_infidelity_full(num_qubits, shots),
            "estimate_cut": "", "bound_cut": "",
        }  # fmt: skip
        if method in CUTTING_METHODS:
            cut = estimate_infidelity_cut(clustered_topology(num_qubits, num_fragments), n)
            entry["estimate_cut"], entry["bound_cut"] = cut.estimate, cut.bound
        summary.append(entry)
    return summary


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Mapping]) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(header))
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _panel_rows(summary: Sequence[Mapping], axis: str, fixed: Mapping[str, int]) -> list[dict]:
    table: dict[int, dict] = {}
    for entry in summary:
        if any(entry[k] != v for k, v in fixed.items()):
            continue
        row = table.setdefault(entry[axis], {axis: entry[axis]})
        row[f"{entry['method']}_mean"] = entry["mean_infidelity"]
        row[f"{entry['method']}_std"] = entry["std_infidelity"]
        row["estimate_full"] = entry["estimate_full"]
        if entry["estimate_cut"] != "":
            row["estimate_cut"] = entry["estimate_cut"]
    return [table[key] for key in sorted(table)]


def _plot(path: Path, rows: Sequence[Mapping], axis: str, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    xs = [row[axis] for row in rows]
    for method in METHODS:
        key = f"{method}_mean"
        if any(key in row for row in rows):
            pts = [(row[axis], row[key]) for row in rows if key in row]
            ax.plot(*zip(*pts), "o", mfc="none", label=method)
    for key, style in (("estimate_full", "--"), ("estimate_cut", ":")):
        pts = [(row[axis], row[key]) for row in rows if key in row]
        if pts:
            ax.plot(*zip(*pts), "k" + style, label=key.replace("_", " "))
    if axis == "S":
        ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(axis)
    ax.set_ylabel("infidelity")
    ax.set_title(title)
    ax.set_xticks(xs)
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def report(csv_path: str | Path, out_dir: str | Path, plots: bool = False) -> list[dict]:
    """Summary statistics plus one data file per figure panel (optionally rendered as SVG)."""
    rows = read_records(csv_path)
    if not rows:
        raise ReportParseError(f"{csv_path}: no data rows")
    summary = summarize(rows)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "summary.csv", SUMMARY_FIELDS, summary)

    panels = []
    for num_qubits in sorted({e["Q"] for e in summary}):
        for num_fragments in sorted({e["F"] for e in summary}):
            panels.append(("S", {"Q": num_qubits, "F": num_fragments}, f"vs_shots_Q{num_qubits}_F{num_fragments}"))
    for shots in sorted({e["S"] for e in summary}):
        for num_fragments in sorted({e["F"] for e in summary}):
            panels.append(("Q", {"S": shots, "F": num_fragments}, f"vs_qubits_S{shots}_F{num_fragments}"))
    for axis, fixed, name in panels:
        panel = _panel_rows(summary, axis, fixed)
        if not panel:
            continue
        header = [axis] + sorted({k for row in panel for k in row if k != axis})
        _write_csv(out_dir / f"{name}.csv", header, panel)
        if plots:
            _plot(out_dir / f"{name}.svg", panel, axis, ", ".join(f"{k}={v}" for k, v in fixed.items()))
    return summary


def log_slope(xs: Sequence[float], ys: Sequence[float], base: float = math.e) -> float:
    """Least-squares slope of log(ys) against xs."""
    logs = np.log(np.asarray(ys, dtype=float)) / np.log(base)
    return float(np.polyfit(np.asarray(xs, dtype=float), logs, 1)[0])
