"""Full functional equivalence (system matrices) and fixed-input distribution equivalence."""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuit import Circuit, ClassicControlled, Measure, Reset, Unitary, gate_matrix, is_dynamic
from .extract import ExtractConfig, extract, resolve_workers
from .reconstruct import reconstruct_unitary
from .statevec import (
    OutcomeDistribution, SimulationError, _check_static, apply_matrix, audit, format_key,
    outcome_distribution_static,
)

DEFAULT_DENSE_CAP = 14


class EquivalenceError(ValueError):
    pass


@dataclass(frozen=True)
class CheckConfig:
    """``input_permutation[i]`` is the qubit of the first circuit matching qubit ``i`` of the second."""

    tolerance: float | None = None  # None: 1e-10 for unitaries, 1e-9 TVD for distributions
    input_permutation: Sequence[int] | None = None
    output_permutation: Sequence[int] | None = None
    input_state: int = 0
    align: str = "none"  # none | measurements
    dense_cap: int = DEFAULT_DENSE_CAP
    workers: int | str | None = 1
    extract: ExtractConfig = field(default_factory=ExtractConfig)


@dataclass
class EquivalenceResult:
    verdict: str  # equivalent | not_equivalent | error
    max_deviation: float
    global_phase: complex | None = None
    counterexample: dict | None = None
    timings: dict = field(default_factory=dict)
    mode: str = "full"
    message: str = ""

    @property
    def equivalent(self) -> bool:
        return self.verdict == "equivalent"

    def to_json(self) -> dict:
        phase = None if self.global_phase is None else [self.global_phase.real, self.global_phase.imag]
        out = {"mode": self.mode, "verdict": self.verdict, "maxDeviation": self.max_deviation,
               "globalPhase": phase, "counterexample": self.counterexample, "timings": self.timings}
        if self.message:
            out["message"] = self.message
        return out


def _check_unitary_only(g: Circuit) -> None:
    for i, op in enumerate(g.ops):
        if isinstance(op, (Reset, ClassicControlled)):
            raise EquivalenceError(f"op {i} is {type(op).__name__}; reconstruct the circuit first")
    try:
        _check_static(g)
    except SimulationError as exc:
        raise EquivalenceError(str(exc)) from None


def build_unitary(g: Circuit, dense_cap: int = DEFAULT_DENSE_CAP, workers: int | str | None = 1) -> np.ndarray:
    """System matrix of a unitary-only circuit; column j is the evolved basis state j.

    Trailing measurements are ignored. Columns are simulated as a batch, split
    across ``workers`` threads.
    """
    _check_unitary_only(g)
    n = g.num_qubits
    if n > dense_cap:
        raise EquivalenceError(f"too many qubits for dense unitary: {n} > cap {dense_cap}")
    dim = 2 ** n
    unitaries = [(gate_matrix(op.gate), op.targets, [(c.qubit, c.positive) for c in op.controls],
                  op.gate.is_diagonal) for op in g.ops if isinstance(op, Unitary)]

    def run(cols: range) -> np.ndarray:
        block = np.zeros((dim, len(cols)), dtype=complex)
        block[list(cols), np.arange(len(cols))] = 1.0
        for m, targets, controls, diag in unitaries:
            apply_matrix(block, n, m, targets, controls, diag)
        audit.record(block)
        return block

    w = min(resolve_workers(workers), dim)
    if w == 1:
        return run(range(dim))
    bounds = np.linspace(0, dim, w + 1).astype(int)
    chunks = [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ThreadPoolExecutor(max_workers=w) as pool:
        return np.concatenate(list(pool.map(run, chunks)), axis=1)


def _validate_permutation(perm: Sequence[int], n: int, what: str) -> list[int]:
    perm = list(perm)
    if sorted(perm) != list(range(n)):
        raise EquivalenceError(f"{what} is not a permutation of {n} qubits: {perm}")
    return perm


def _basis_map(perm: Sequence[int]) -> np.ndarray:
    """Basis index of the first circuit for each basis index of the second under ``perm``."""
    n = len(perm)
    idx = np.arange(2 ** n)
    out = np.zeros_like(idx)
    for i, p in enumerate(perm):
        out |= ((idx >> i) & 1) << p
    return out


def permute_unitary(u: np.ndarray, input_perm: Sequence[int] | None, output_perm: Sequence[int] | None) -> np.ndarray:
    """Re-express ``u`` (of the second circuit) in the first circuit's qubit labels."""
    if input_perm is None and output_perm is None:
        return u
    n = int(np.log2(u.shape[0]))
    ip = _basis_map(input_perm if input_perm is not None else range(n))
    op = _basis_map(output_perm if output_perm is not None else (input_perm if input_perm is not None else range(n)))
    out = np.empty_like(u)
    out[np.ix_(op, ip)] = u
    return out


def measurement_alignment(g: Circuit, g2: Circuit) -> list[int]:
    """Qubit permutation pairing the qubits that write the same clbit; the rest keep index order."""
    def writers(c: Circuit) -> dict[int, int]:
        return {op.clbit: op.qubit for op in c.ops if isinstance(op, Measure)}

    w1, w2 = writers(g), writers(g2)
    perm: dict[int, int] = {}
    used = set()
    for clbit, q2 in sorted(w2.items()):
        q1 = w1.get(clbit)
        if q1 is not None and q1 not in used and q2 not in perm:
            perm[q2] = q1
            used.add(q1)
    rest1 = [q for q in range(g.num_qubits) if q not in used]
    rest2 = [q for q in range(g2.num_qubits) if q not in perm]
    for q2, q1 in zip(rest2, rest1):
        perm[q2] = q1
    return [perm[q] for q in range(g2.num_qubits)]


def compare_unitaries(u: np.ndarray, u2: np.ndarray, tolerance: float) -> EquivalenceResult:
    """Max-norm comparison up to a global phase fixed by the first significant entry of ``u2``."""
    flat = np.abs(u2).ravel()
    significant = np.flatnonzero(flat > tolerance)
    phase = 1.0 + 0j
    if significant.size:
        i = significant[0]
        ratio = u.ravel()[i] / u2.ravel()[i]
        if abs(ratio) > 0:
            phase = ratio / abs(ratio)
    diff = np.abs(u - phase * u2)
    dev = float(diff.max()) if diff.size else 0.0
    if dev <= tolerance:
        return EquivalenceResult("equivalent", dev, complex(phase))
    col = int(np.argmax(diff.max(axis=0)))
    n = int(np.log2(u.shape[0]))

    def sparse(v):
        return {format_key(k, n): [float(v[k].real), float(v[k].imag)]
                for k in np.flatnonzero(np.abs(v) > 1e-12)}

    cex = {"input": format_key(col, n), "columnDeviation": float(diff[:, col].max()),
           "expected": sparse(u[:, col]), "observed": sparse(phase * u2[:, col])}
    return EquivalenceResult("not_equivalent", dev, complex(phase), cex)


def check_full(g: Circuit, g2: Circuit, cfg: CheckConfig | None = None) -> EquivalenceResult:
    """Full functional equivalence after unitary reconstruction of both circuits."""
    cfg = cfg or CheckConfig()
    tol = 1e-10 if cfg.tolerance is None else cfg.tolerance
    timings = {}
    t0 = time.perf_counter()
    r1, _ = reconstruct_unitary(g)
    r2, _ = reconstruct_unitary(g2)
    timings["reconstruct"] = time.perf_counter() - t0
    if r1.num_qubits != r2.num_qubits:
        raise EquivalenceError(
            f"arity mismatch: reconstructed circuits act on {r1.num_qubits} and {r2.num_qubits} qubits")
    n = r1.num_qubits
    in_perm, out_perm = cfg.input_permutation, cfg.output_permutation
    if in_perm is None and out_perm is None and cfg.align == "measurements":
        in_perm = measurement_alignment(r1, r2)
    if in_perm is not None:
        in_perm = _validate_permutation(in_perm, n, "input_permutation")
    if out_perm is not None:
        out_perm = _validate_permutation(out_perm, n, "output_permutation")
    t0 = time.perf_counter()
    u1 = build_unitary(r1, cfg.dense_cap, cfg.workers)
    u2 = permute_unitary(build_unitary(r2, cfg.dense_cap, cfg.workers), in_perm, out_perm)
    timings["build"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    result = compare_unitaries(u1, u2, tol)
    timings["compare"] = time.perf_counter() - t0
    result.timings = timings
    return result


def total_variation(p: dict[str, float], q: dict[str, float]) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def outcome_distribution(g: Circuit, input_index: int, cfg: ExtractConfig | None = None) -> OutcomeDistribution:
    """Branching extraction for dynamic circuits, plain simulation otherwise."""
    if is_dynamic(g):
        return extract(g, input_index, cfg)
    return outcome_distribution_static(g, input_index, (cfg or ExtractConfig()).sim)


def check_distribution(g: Circuit, g2: Circuit, cfg: CheckConfig | None = None) -> EquivalenceResult:
    """Compare outcome distributions of both circuits for the basis input ``cfg.input_state``."""
    cfg = cfg or CheckConfig()
    tol = 1e-9 if cfg.tolerance is None else cfg.tolerance
    input2 = cfg.input_state
    if cfg.input_permutation is not None:
        perm = _validate_permutation(cfg.input_permutation, g2.num_qubits, "input_permutation")
        # bit i of the second circuit's input comes from qubit perm[i] of the first
        input2 = sum(((cfg.input_state >> p) & 1) << i for i, p in enumerate(perm))
    for c, idx in ((g, cfg.input_state), (g2, input2)):
        if not 0 <= idx < 2 ** c.num_qubits:
            raise EquivalenceError(f"input state {idx} out of range for {c.num_qubits} qubit(s) of {c.name}")
    timings = {}
    t0 = time.perf_counter()
    d1 = outcome_distribution(g, cfg.input_state, cfg.extract)
    timings["first"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    d2 = outcome_distribution(g2, input2, cfg.extract)
    timings["second"] = time.perf_counter() - t0
    tvd = total_variation(d1.entries, d2.entries)
    if tvd <= tol:
        return EquivalenceResult("equivalent", tvd, None, None, timings, "distribution")
    keys = sorted(set(d1.entries) | set(d2.entries))
    worst = max(keys, key=lambda k: (abs(d1.get(k) - d2.get(k)), d1.get(k)))
    cex = {"input": cfg.input_state, "bitstring": worst, "expected": d1.get(worst), "observed": d2.get(worst),
           "expectedDistribution": d1.entries, "observedDistribution": d2.entries}
    return EquivalenceResult("not_equivalent", tvd, None, cex, timings, "distribution")
