"""Benchmark harness: static/dynamic pairs timed through both verification routes."""
from __future__ import annotations

import csv
import io
import json
import random
import statistics
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from .benchgen import FAMILIES
from .circuit import Circuit, PiFraction, count_resets
from .equivalence import CheckConfig, EquivalenceError, check_full, total_variation
from .extract import ExtractConfig, ExtractError, extract
from .reconstruct import reconstruct_unitary
from .statevec import outcome_distribution_static

SKIPPED = "---"

CSV_COLUMNS = [
    "family", "size", "variants", "n_static", "g_static", "n_dynamic", "g_dynamic",
    "t_trans", "t_ver", "t_extract", "t_sim", "status",
]


@dataclass
class BenchRow:
    family: str
    size: int
    variants: str
    n_static: int
    g_static: int
    n_dynamic: int
    g_dynamic: int
    t_trans: float | None = None
    t_ver: float | None = None
    t_extract: float | None = None
    t_sim: float | None = None
    status: str = "ok"
    details: dict = field(default_factory=dict)

    def csv_row(self) -> list[str]:
        def fmt(v):
            return SKIPPED if v is None else f"{v:.6f}"
        return [self.family, str(self.size), self.variants, str(self.n_static), str(self.g_static),
                str(self.n_dynamic), str(self.g_dynamic), fmt(self.t_trans), fmt(self.t_ver),
                fmt(self.t_extract), fmt(self.t_sim), self.status]


def instance(family: str, size: int, rng: random.Random) -> tuple[Circuit, Circuit, int]:
    """Static circuit, dynamic circuit and basis input for one benchmark instance."""
    static_fn, dynamic_fn = FAMILIES[family]
    if family == "bv":
        secret = "".join(rng.choice("01") for _ in range(size))
        return static_fn(secret), dynamic_fn(secret), 0
    if family == "qpe":
        # odd numerator over 2**(size+1): never exactly representable with `size` bits
        theta = PiFraction(Fraction(2 * rng.randrange(2 ** size) + 1, 2 ** size))
        return static_fn(size, theta), dynamic_fn(size, theta), 1
    return static_fn(size), dynamic_fn(size), 0


def _timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


def run_instance(family: str, size: int, rng: random.Random, dense_cap: int = 14,
                 extract_cfg: ExtractConfig | None = None, repeats: int = 1) -> BenchRow:
    extract_cfg = extract_cfg or ExtractConfig()
    static, dynamic, inp = instance(family, size, rng)
    row = BenchRow(family, size, "static/dynamic", static.num_qubits, len(static.ops),
                   dynamic.num_qubits, len(dynamic.ops))
    problems = []
    (reconstructed, _), row.t_trans = _timed(reconstruct_unitary, dynamic)
    row.details["reconstructed_qubits"] = reconstructed.num_qubits
    row.details["resets"] = count_resets(dynamic)
    if reconstructed.num_qubits <= dense_cap:
        try:
            res, row.t_ver = _timed(check_full, reconstructed, static, CheckConfig(dense_cap=dense_cap))
            row.details["full_verdict"] = res.verdict
            row.details["full_deviation"] = res.max_deviation
            if not res.equivalent:
                problems.append("full check failed")
        except EquivalenceError as exc:
            problems.append(str(exc))
    try:
        times = []
        for _ in range(repeats):
            dist, t = _timed(extract, dynamic, inp, extract_cfg)
            times.append(t)
        row.t_extract = statistics.median(times)
        row.details["extract_branches"] = dist.stats["branches_simulated"]
        row.details["extract_gate_applications"] = dist.stats["gate_applications"]
        row.details["extract_amplitude_updates"] = dist.stats["amplitude_updates"]
    except ExtractError as exc:
        dist = None
        problems.append(str(exc))
    times = []
    for _ in range(repeats):
        sdist, t = _timed(outcome_distribution_static, static, inp)
        times.append(t)
    row.t_sim = statistics.median(times)
    row.details["sim_gate_applications"] = sdist.stats["gate_applications"]
    row.details["sim_amplitude_updates"] = sdist.stats["amplitude_updates"]
    if dist is not None:
        tvd = total_variation(dist.entries, sdist.entries)
        row.details["tvd"] = tvd
        if row.t_extract > 0:
            row.details["sim_over_extract"] = row.t_sim / row.t_extract
        if tvd > 1e-9:
            problems.append(f"distribution mismatch (TVD {tvd:.3g})")
    if problems:
        row.status = "; ".join(problems)
    return row


def run_bench(families, sizes, seed: int = 0, dense_cap: int = 14,
              extract_cfg: ExtractConfig | None = None, repeats: int = 1) -> list[BenchRow]:
    rows = []
    for family in families:
        rng = random.Random(f"{seed}:{family}")
        for size in sizes:
            try:
                rows.append(run_instance(family, size, rng, dense_cap, extract_cfg, repeats))
            except Exception as exc:  # one broken instance must not stop the run
                rows.append(BenchRow(family, size, "static/dynamic", 0, 0, 0, 0,
                                     status=f"error: {exc}"))
    return rows


def rows_to_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.csv_row())
    return buf.getvalue()


def rows_to_json(rows: list[BenchRow]) -> str:
    return json.dumps({"columns": CSV_COLUMNS, "rows": [asdict(r) for r in rows]}, indent=2)


def check_report(text: str) -> list[str]:
    """Problems found in a bench CSV report; empty when the schema holds."""
    problems = []
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        return ["empty report"]
    if header != CSV_COLUMNS:
        return [f"bad header: {header}"]
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(CSV_COLUMNS):
            problems.append(f"line {lineno}: expected {len(CSV_COLUMNS)} fields, got {len(row)}")
            continue
        rec = dict(zip(CSV_COLUMNS, row))
        for col in ("size", "n_static", "g_static", "n_dynamic", "g_dynamic"):
            if not rec[col].isdigit():
                problems.append(f"line {lineno}: {col} is not a count: {rec[col]!r}")
        for col in ("t_trans", "t_ver", "t_extract", "t_sim"):
            if rec[col] == SKIPPED:
                continue
            try:
                if float(rec[col]) < 0:
                    problems.append(f"line {lineno}: {col} is negative")
            except ValueError:
                problems.append(f"line {lineno}: {col} is not a duration: {rec[col]!r}")
    return problems
