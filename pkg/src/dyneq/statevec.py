"""Dense state-vector simulation.

Amplitude index ``i`` has qubit ``k`` at bit ``k`` (weight ``2**k``). Gates are
applied in place on a ``(2,) * n`` view of the amplitude array, so the same
kernel also drives batched simulation (extra trailing axes) for unitary
construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuit import (
    Circuit, ClassicControlled, Measure, Reset, Unitary, gate_matrix, mid_circuit_measurements,
)


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    norm_tolerance: float = 1e-10
    zero_prob_threshold: float = 1e-12

    def __post_init__(self):
        for name in ("norm_tolerance", "zero_prob_threshold"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")


DEFAULT_CONFIG = SimConfig()


@dataclass
class NormAudit:
    """Opt-in tracker of the worst norm deviation seen after any public state operation."""

    enabled: bool = False
    max_deviation: float = 0.0
    checks: int = 0

    def record(self, amps: np.ndarray) -> None:
        if not self.enabled:
            return
        flat = amps.reshape(amps.shape[0], -1)
        norms = np.einsum("ij,ij->j", flat.conj(), flat).real
        dev = float(np.max(np.abs(np.sqrt(norms) - 1.0))) if norms.size else 0.0
        self.checks += 1
        if dev > self.max_deviation:
            self.max_deviation = dev


audit = NormAudit()


@dataclass
class StateVector:
    n: int
    amps: np.ndarray

    def copy(self) -> StateVector:
        return StateVector(self.n, self.amps.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2


def init_basis(n: int, index: int) -> StateVector:
    if n < 0 or not 0 <= index < 2 ** n:
        raise SimulationError(f"basis index {index} out of range for {n} qubit(s)")
    amps = np.zeros(2 ** n, dtype=complex)
    amps[index] = 1.0
    return StateVector(n, amps)


def apply_matrix(amps: np.ndarray, n: int, matrix: np.ndarray, targets, controls=(), diagonal=False) -> None:
    """Apply ``matrix`` on ``targets`` of ``amps`` in place, conditioned on ``controls``.

    ``amps`` has shape ``(2**n, ...)``; ``controls`` is a sequence of
    ``(qubit, positive)`` pairs.
    """
    t = amps.reshape((2,) * n + amps.shape[1:])
    index = [slice(None)] * t.ndim
    for q, positive in controls:
        index[n - 1 - q] = 1 if positive else 0
    sub = t[tuple(index)]
    # axis of each remaining qubit inside ``sub``
    removed = sorted(n - 1 - q for q, _ in controls)
    def axis(q):
        a = n - 1 - q
        return a - sum(r < a for r in removed)

    k = len(targets)
    if k == 1 and diagonal:
        a = axis(targets[0])
        sl = [slice(None)] * sub.ndim
        if matrix[0, 0] != 1:
            sl[a] = 0
            sub[tuple(sl)] *= matrix[0, 0]
        sl[a] = 1
        sub[tuple(sl)] *= matrix[1, 1]
        return
    if k == 1:
        # in-place 2x2 update on the two halves; avoids tensordot's transposed copies
        a = axis(targets[0])
        i0 = [slice(None)] * sub.ndim
        i1 = list(i0)
        i0[a], i1[a] = slice(0, 1), slice(1, 2)  # slices keep views even for 1-d input
        lo, hi = sub[tuple(i0)], sub[tuple(i1)]
        saved = lo.copy()
        lo *= matrix[0, 0]
        lo += matrix[0, 1] * hi
        hi *= matrix[1, 1]
        hi += matrix[1, 0] * saved
        return
    # tensor axes of the matrix are MSB first: targets[k-1], ..., targets[0]
    axes = [axis(q) for q in reversed(targets)]
    m = matrix.reshape((2,) * (2 * k))
    res = np.tensordot(m, sub, axes=(list(range(k, 2 * k)), axes))
    sub[...] = np.moveaxis(res, list(range(k)), axes)


def apply(state: StateVector, op: Unitary) -> StateVector:
    """Apply a (controlled) unitary in place and return the same state."""
    gate = op.gate
    apply_matrix(state.amps, state.n, gate_matrix(gate), op.targets,
                 [(c.qubit, c.positive) for c in op.controls], gate.is_diagonal)
    audit.record(state.amps)
    return state


def prob_zero(state: StateVector, q: int) -> float:
    t = state.amps.reshape((2,) * state.n)
    half = t.take(0, axis=state.n - 1 - q)
    p = float(np.vdot(half, half).real)
    return min(max(p, 0.0), 1.0)


def prob_one(state: StateVector, q: int) -> float:
    return 1.0 - prob_zero(state, q)


def project(state: StateVector, q: int, outcome: int, config: SimConfig = DEFAULT_CONFIG,
            p_outcome: float | None = None) -> StateVector:
    """Collapse qubit ``q`` onto ``outcome`` in place and renormalize."""
    if p_outcome is None:
        p0 = prob_zero(state, q)
        p_outcome = p0 if outcome == 0 else 1.0 - p0
    if p_outcome <= config.zero_prob_threshold:
        raise SimulationError(f"zero-probability projection of qubit {q} onto |{outcome}>")
    t = state.amps.reshape((2,) * state.n)
    sl = [slice(None)] * state.n
    sl[state.n - 1 - q] = 1 - outcome
    t[tuple(sl)] = 0
    state.amps /= np.sqrt(p_outcome)
    audit.record(state.amps)
    return state


def _check_static(g: Circuit) -> None:
    for i, op in enumerate(g.ops):
        if isinstance(op, (Reset, ClassicControlled)):
            raise SimulationError(f"not static: op {i} is {type(op).__name__}")
    mids = mid_circuit_measurements(g)
    if mids:
        raise SimulationError(f"not static: mid-circuit measurement at op {mids[0]}")


def simulate(g: Circuit, state: StateVector) -> int:
    """Apply every unitary of ``g`` to ``state`` in place; returns the number applied."""
    count = 0
    for op in g.ops:
        if isinstance(op, Unitary):
            apply(state, op)
            count += 1
    return count


@dataclass
class OutcomeDistribution:
    """Outcome bitstrings (MSB first, ``output_order[k]`` at weight ``2**k``) to probability."""

    entries: dict[str, float]
    pruned_mass: float = 0.0
    stats: dict = field(default_factory=dict)

    def total(self) -> float:
        return sum(self.entries.values()) + self.pruned_mass

    def get(self, key: str) -> float:
        return self.entries.get(key, 0.0)

    def top(self, k: int = 2) -> list[tuple[str, float]]:
        return sorted(self.entries.items(), key=lambda kv: (-kv[1], kv[0]))[:k]


def format_key(value: int, width: int) -> str:
    return format(value, f"0{width}b") if width else ""


def outcome_distribution_static(g: Circuit, input_index: int = 0,
                                config: SimConfig = DEFAULT_CONFIG) -> OutcomeDistribution:
    """Joint distribution of the measured clbits of a circuit whose measurements sit at the tail."""
    _check_static(g)
    state = init_basis(g.num_qubits, input_index)
    applied = simulate(g, state)
    writer = {op.clbit: op.qubit for op in g.ops if isinstance(op, Measure)}
    outputs = g.outputs
    probs = state.probabilities()
    idx = np.arange(probs.size)
    keys = np.zeros(probs.size, dtype=np.int64)
    for k, c in enumerate(outputs):
        keys |= ((idx >> writer[c]) & 1) << k
    marg = np.bincount(keys, weights=probs, minlength=2 ** len(outputs))
    width = len(outputs)
    entries = {format_key(i, width): float(p) for i, p in enumerate(marg)
               if p > config.zero_prob_threshold}
    dropped = float(marg.sum()) - sum(entries.values())
    return OutcomeDistribution(
        entries, max(dropped, 0.0),
        {"gate_applications": applied, "amplitude_updates": applied * 2 ** g.num_qubits},
    )
