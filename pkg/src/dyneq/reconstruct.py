"""Unitary reconstruction of dynamic circuits.

Resets are replaced by fresh qubits appended at the highest indices, then all
measurements are deferred to the tail, turning classical conditions into
quantum controls on the measured qubits.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .circuit import (
    Circuit, ClassicControlled, Control, Measure, Reset, Unitary, count_resets,
)


class ReconstructError(ValueError):
    def __init__(self, kind: str, op_index: int, detail: str = ""):
        self.kind = kind
        self.op_index = op_index
        super().__init__(f"{kind} at op {op_index}" + (f": {detail}" if detail else ""))


@dataclass
class WireMap:
    """Where each original qubit lives after reset substitution."""

    current: list[int]
    allocations: list[tuple[int, int]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"allocations": [list(a) for a in self.allocations], "finalMap": list(self.current)}


def _remap(op, wires: list[int]):
    if isinstance(op, Unitary):
        return Unitary(op.gate, tuple(wires[q] for q in op.targets),
                       tuple(Control(wires[c.qubit], c.positive) for c in op.controls))
    if isinstance(op, Measure):
        return Measure(wires[op.qubit], op.clbit)
    if isinstance(op, ClassicControlled):
        return ClassicControlled(_remap(op.inner, wires), op.clbit, op.value)
    raise TypeError(type(op))


def substitute_resets(g: Circuit) -> tuple[Circuit, WireMap]:
    """Replace every reset by a fresh qubit; later ops on that qubit move to the new wire."""
    wires = WireMap(list(range(g.num_qubits)))
    next_qubit = g.num_qubits
    ops = []
    for i, op in enumerate(g.ops):
        if isinstance(op, Reset):
            wires.allocations.append((i, next_qubit))
            wires.current[op.qubit] = next_qubit
            next_qubit += 1
        else:
            ops.append(_remap(op, wires.current))
    out = g.with_ops(ops, num_qubits=next_qubit, name=g.name)
    return out, wires


def _add_control(op: Unitary, control: Control) -> Unitary | None:
    for c in op.controls:
        if c.qubit == control.qubit:
            # repeated condition on the same qubit: same polarity is redundant,
            # opposite polarity can never fire
            return op if c.positive == control.positive else None
    return Unitary(op.gate, op.targets, op.controls + (control,))


def defer_measurements(g: Circuit) -> Circuit:
    """Move all measurements to the tail, replacing classical conditions by quantum controls."""
    writer: dict[int, int] = {}
    measured_qubits: set[int] = set()
    body, measures = [], []
    for i, op in enumerate(g.ops):
        if isinstance(op, Reset):
            raise ReconstructError("reset present", i, "substitute resets first")
        if isinstance(op, Measure):
            if op.clbit in writer:
                raise ReconstructError("clbit overwritten", i, f"clbit {op.clbit} is measured twice")
            writer[op.clbit] = op.qubit
            measured_qubits.add(op.qubit)
            measures.append(op)
            continue
        if isinstance(op, ClassicControlled):
            if op.clbit not in writer:
                raise ReconstructError("condition on unwritten clbit", i, f"clbit {op.clbit}")
            inner = _add_control(op.inner, Control(writer[op.clbit], op.value == 1))
        else:
            inner = op
        if inner is None:
            continue
        hit = measured_qubits.intersection(inner.targets)
        if hit:
            raise ReconstructError("non-deferrable", i, f"measured qubit {min(hit)} is a target")
        body.append(inner)
    measures.sort(key=lambda m: m.clbit)
    return g.with_ops(body + measures)


def reconstruct_unitary(g: Circuit) -> tuple[Circuit, WireMap]:
    """Reset substitution followed by measurement deferral; the result has n + r qubits."""
    substituted, wires = substitute_resets(g)
    out = defer_measurements(substituted)
    assert out.num_qubits == g.num_qubits + count_resets(g)
    return out, wires
