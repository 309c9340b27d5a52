"""Exact outcome distributions of dynamic circuits by branching simulation.

Every measurement splits the simulation into a |0>- and a |1>-successor whose
probabilities are checkpointed; a leaf's probability is the product of the
checkpoints along its path. The prefix up to a branching point is simulated
once and shared by both successors, zero-weight successors are never started,
and independent subtrees can be handed to a worker pool.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

from .circuit import Circuit, ClassicControlled, Gate, Measure, Reset, Unitary
from .statevec import (
    DEFAULT_CONFIG, OutcomeDistribution, SimConfig, StateVector, apply, format_key, init_basis,
    prob_zero, project,
)

# clbit recorded in checkpoints of internal (unrecorded) reset branches
RESET_SENTINEL = -1


class ExtractError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExtractConfig:
    prune_threshold: float = 1e-12
    max_branches: int = 2 ** 26
    parallel: int | str = 1
    sim: SimConfig = DEFAULT_CONFIG

    def __post_init__(self):
        if self.prune_threshold < 0:
            raise ValueError("prune_threshold must be >= 0")

    def workers(self) -> int:
        return resolve_workers(self.parallel)


def resolve_workers(spec: int | str | None) -> int:
    if spec is None:
        spec = os.environ.get("DYNEQ_WORKERS", 1)
    if spec == "auto":
        return os.cpu_count() or 1
    w = int(spec)
    if w < 1:
        raise ValueError(f"worker count must be >= 1, got {w}")
    return w


@dataclass(frozen=True)
class Checkpoint:
    clbit: int
    outcome: int
    probability: float


@dataclass
class Branch:
    state: StateVector
    pc: int
    weight: float
    path: tuple[Checkpoint, ...]
    classical: list[int]
    known: list[int]  # per qubit: classically known value or -1
    depth: int = 0

    def fork(self, state: StateVector, pc: int, cp: Checkpoint) -> Branch:
        return Branch(state, pc, self.weight * cp.probability, self.path + (cp,),
                      list(self.classical), list(self.known), self.depth + 1)

    def sort_key(self) -> tuple:
        return tuple(c.outcome for c in self.path)


@dataclass
class _Tally:
    leaves: list = field(default_factory=list)   # (sort key, bitstring, probability)
    pruned: list = field(default_factory=list)   # (sort key, mass)
    branches: int = 0
    gate_applications: int = 0
    amplitude_updates: int = 0
    segment_runs: dict = field(default_factory=dict)
    segment_gates: dict = field(default_factory=dict)

    def merge(self, other: _Tally) -> None:
        self.leaves.extend(other.leaves)
        self.pruned.extend(other.pruned)
        self.branches += other.branches
        self.gate_applications += other.gate_applications
        self.amplitude_updates += other.amplitude_updates
        for d in ("segment_runs", "segment_gates"):
            mine = getattr(self, d)
            for k, v in getattr(other, d).items():
                mine[k] = mine.get(k, 0) + v


def _x_on(q: int) -> Unitary:
    return Unitary(Gate("x"), (q,))


class _Runner:
    def __init__(self, g: Circuit, cfg: ExtractConfig):
        self.g = g
        self.cfg = cfg
        self.outputs = g.outputs

    def key(self, classical: list[int]) -> str:
        value = 0
        for k, c in enumerate(self.outputs):
            value |= classical[c] << k
        return format_key(value, len(self.outputs))

    def _apply(self, br: Branch, op: Unitary, tally: _Tally) -> None:
        apply(br.state, op)
        tally.gate_applications += 1
        tally.amplitude_updates += br.state.amps.size
        tally.segment_gates[br.depth] = tally.segment_gates.get(br.depth, 0) + 1
        for q in op.targets:
            br.known[q] = -1

    def _split(self, br: Branch, q: int, clbit: int, next_pc: int, tally: _Tally,
               flip_one: bool) -> list[Branch]:
        """Children of ``br`` for measuring qubit ``q``; ``flip_one`` resets the |1> child."""
        p0 = prob_zero(br.state, q)
        probs = (p0, 1.0 - p0)
        zero_floor = self.cfg.sim.zero_prob_threshold
        live = [b for b in (0, 1)
                if probs[b] > zero_floor and br.weight * probs[b] > self.cfg.prune_threshold]
        for b in (0, 1):
            if b not in live:
                tally.pruned.append((br.sort_key() + (b,), br.weight * probs[b]))
        children = []
        for j, b in enumerate(live):
            state = br.state if j == len(live) - 1 else br.state.copy()
            project(state, q, b, self.cfg.sim, p_outcome=probs[b])
            child = br.fork(state, next_pc, Checkpoint(clbit, b, probs[b]))
            if clbit != RESET_SENTINEL:
                child.classical[clbit] = b
            child.known[q] = b
            if flip_one and b == 1:
                self._apply(child, _x_on(q), tally)
                child.known[q] = 0
            children.append(child)
        tally.branches += len(children)
        for c in children:
            tally.segment_runs[c.depth] = tally.segment_runs.get(c.depth, 0) + 1
        return children

    def advance(self, br: Branch, tally: _Tally) -> list[Branch] | None:
        """Run ``br`` up to its next branching point; ``None`` means it reached the end."""
        ops = self.g.ops
        pc = br.pc
        while pc < len(ops):
            op = ops[pc]
            pc += 1
            if isinstance(op, Unitary):
                self._apply(br, op, tally)
            elif isinstance(op, ClassicControlled):
                bit = br.classical[op.clbit]
                if bit < 0:
                    raise ExtractError(f"condition on unwritten clbit {op.clbit} at op {pc - 1}")
                if bit == op.value:
                    self._apply(br, op.inner, tally)
            elif isinstance(op, Measure):
                return self._split(br, op.qubit, op.clbit, pc, tally, flip_one=False)
            elif isinstance(op, Reset):
                known = br.known[op.qubit]
                if known >= 0:
                    if known == 1:
                        self._apply(br, _x_on(op.qubit), tally)
                    br.known[op.qubit] = 0
                else:
                    return self._split(br, op.qubit, RESET_SENTINEL, pc, tally, flip_one=True)
        tally.leaves.append((br.sort_key(), self.key(br.classical), br.weight))
        return None

    def run_subtree(self, root: Branch) -> _Tally:
        tally = _Tally()
        stack = [root]
        while stack:
            br = stack.pop()
            children = self.advance(br, tally)
            if children:
                stack.extend(reversed(children))
                if len(stack) > self.cfg.max_branches:
                    raise ExtractError(f"branch budget exceeded: {len(stack)} live branches")
        return tally


def _finish(g: Circuit, tally: _Tally) -> OutcomeDistribution:
    entries: dict[str, float] = {}
    for _, key, p in sorted(tally.leaves, key=lambda leaf: leaf[0]):
        entries[key] = entries.get(key, 0.0) + p
    pruned = math.fsum(m for _, m in sorted(tally.pruned, key=lambda x: x[0]))
    depth = max(tally.segment_runs, default=0)
    stats = {
        "branches_simulated": tally.branches,
        "gate_applications": tally.gate_applications,
        "amplitude_updates": tally.amplitude_updates,
        "segment_runs": [1] + [tally.segment_runs.get(k, 0) for k in range(1, depth + 1)],
        "segment_gate_applications": [tally.segment_gates.get(k, 0) for k in range(depth + 1)],
    }
    return OutcomeDistribution(dict(sorted(entries.items())), pruned, stats)


def extract(g: Circuit, input_index: int = 0, cfg: ExtractConfig | None = None) -> OutcomeDistribution:
    """Complete outcome distribution of ``g`` for basis input ``input_index``."""
    cfg = cfg or ExtractConfig()
    runner = _Runner(g, cfg)
    root = Branch(init_basis(g.num_qubits, input_index), 0, 1.0, (),
                  [-1] * g.num_clbits, [-1] * g.num_qubits)
    workers = cfg.workers()
    if workers == 1:
        return _finish(g, runner.run_subtree(root))

    # expand breadth-first until there is enough independent work, then farm out subtrees
    tally = _Tally()
    frontier = [root]
    while frontier and len(frontier) < 4 * workers:
        nxt = []
        for br in frontier:
            children = runner.advance(br, tally)
            if children:
                nxt.extend(children)
        frontier = nxt
        if len(frontier) > cfg.max_branches:
            raise ExtractError(f"branch budget exceeded: {len(frontier)} live branches")
    if frontier:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for sub in pool.map(runner.run_subtree, frontier):
                tally.merge(sub)
    return _finish(g, tally)


def _outcome_bits(outcomes: str | Sequence[int]) -> list[int]:
    bits = [int(b) for b in outcomes]
    if any(b not in (0, 1) for b in bits):
        raise ValueError(f"outcomes must be bits, got {outcomes!r}")
    return bits


def enumerate_forced(g: Circuit, input_index: int, outcomes: str | Sequence[int],
                     config: SimConfig = DEFAULT_CONFIG) -> float:
    """Probability that the i-th measurement of ``g`` yields ``outcomes[i]`` for every i.

    Brute-force single-path oracle: each measurement is forced, every reset is
    expanded as measure + conditional X + discard and summed over both results.
    """
    bits = _outcome_bits(outcomes)
    n_meas = sum(isinstance(op, Measure) for op in g.ops)
    if len(bits) != n_meas:
        raise ValueError(f"expected {n_meas} outcome bits, got {len(bits)}")

    def walk(state: StateVector, pc: int, k: int, classical: dict) -> float:
        ops = g.ops
        while pc < len(ops):
            op = ops[pc]
            pc += 1
            if isinstance(op, Unitary):
                apply(state, op)
            elif isinstance(op, ClassicControlled):
                if op.clbit not in classical:
                    raise ExtractError(f"condition on unwritten clbit {op.clbit}")
                if classical[op.clbit] == op.value:
                    apply(state, op.inner)
            elif isinstance(op, Measure):
                b = bits[k]
                p0 = prob_zero(state, op.qubit)
                p = p0 if b == 0 else 1.0 - p0
                if p <= config.zero_prob_threshold:
                    return 0.0
                project(state, op.qubit, b, config, p_outcome=p)
                classical = {**classical, op.clbit: b}
                k += 1
                return p * walk(state, pc, k, classical)
            elif isinstance(op, Reset):
                p0 = prob_zero(state, op.qubit)
                total = 0.0
                for b, p in ((0, p0), (1, 1.0 - p0)):
                    if p <= config.zero_prob_threshold:
                        continue
                    s = project(state.copy(), op.qubit, b, config, p_outcome=p)
                    if b:
                        apply(s, _x_on(op.qubit))
                    total += p * walk(s, pc, k, classical)
                return total
        return 1.0

    return walk(init_basis(g.num_qubits, input_index), 0, 0, {})


def forced_distribution(g: Circuit, input_index: int = 0,
                        config: SimConfig = DEFAULT_CONFIG) -> dict[str, float]:
    """Outcome distribution assembled from :func:`enumerate_forced` over all outcome strings."""
    measures = [op for op in g.ops if isinstance(op, Measure)]
    outputs = g.outputs
    dist: dict[str, float] = {}
    for bits in product((0, 1), repeat=len(measures)):
        p = enumerate_forced(g, input_index, bits, config)
        if p == 0.0:
            continue
        final = {}
        for m, b in zip(measures, bits):
            final[m.clbit] = b
        value = sum(final[c] << k for k, c in enumerate(outputs))
        key = format_key(value, len(outputs))
        dist[key] = dist.get(key, 0.0) + p
    return dist


def distribution_json(dist: OutcomeDistribution, input_label: str) -> dict:
    return {
        "input": input_label,
        "entries": dist.entries,
        "prunedMass": dist.pruned_mass,
        "branchesSimulated": dist.stats.get("branches_simulated", 0),
        "gateApplications": dist.stats.get("gate_applications", 0),
    }
