"""Circuit data model: unitary gates plus the three dynamic primitives.

Qubit ``k`` carries weight ``2**k`` in every basis index and bitstring used by
this package (LSB first). Circuits are immutable; use :class:`Builder` to
assemble one operation at a time.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np


class CircuitError(ValueError):
    """Raised when a circuit violates the model's invariants."""


@dataclass(frozen=True)
class PiFraction:
    """An exact rational multiple of pi, e.g. ``PiFraction(Fraction(3, 8))`` = 3pi/8."""

    coeff: Fraction

    def __post_init__(self):
        object.__setattr__(self, "coeff", Fraction(self.coeff))

    def __float__(self) -> float:
        # same evaluation order as the QASM text "num*pi/den"
        return self.coeff.numerator * math.pi / self.coeff.denominator

    def __neg__(self) -> PiFraction:
        return PiFraction(-self.coeff)

    def __mul__(self, k) -> PiFraction:
        return PiFraction(self.coeff * Fraction(k))

    __rmul__ = __mul__

    def __str__(self) -> str:
        num, den = self.coeff.numerator, self.coeff.denominator
        if num == 0:
            return "0"
        sign = "-" if num < 0 else ""
        num = abs(num)
        head = "pi" if num == 1 else f"{num}*pi"
        return f"{sign}{head}" if den == 1 else f"{sign}{head}/{den}"


Angle = Union[float, PiFraction]


def pi_frac(num: int, den: int = 1) -> PiFraction:
    return PiFraction(Fraction(num, den))


def neg_angle(a: Angle) -> Angle:
    return -a if isinstance(a, PiFraction) else -float(a)


# name -> (number of angle parameters, number of targets)
GATE_SIGNATURES: dict[str, tuple[int, int]] = {
    "x": (0, 1), "y": (0, 1), "z": (0, 1), "h": (0, 1),
    "s": (0, 1), "sdg": (0, 1), "t": (0, 1), "tdg": (0, 1), "sx": (0, 1),
    "p": (1, 1), "rx": (1, 1), "ry": (1, 1), "rz": (1, 1),
    "u": (3, 1),
    "swap": (0, 2),
}

_DIAGONAL = {"z", "s", "sdg", "t", "tdg", "p", "rz"}


@dataclass(frozen=True)
class Gate:
    """A gate kind with its angle parameters (radians)."""

    name: str
    params: tuple = ()

    def __post_init__(self):
        if self.name not in GATE_SIGNATURES:
            raise CircuitError(f"unknown gate {self.name!r}")
        nparams, _ = GATE_SIGNATURES[self.name]
        if len(self.params) != nparams:
            raise CircuitError(f"gate {self.name} takes {nparams} parameter(s), got {len(self.params)}")
        for p in self.params:
            if not math.isfinite(float(p)):
                raise CircuitError(f"gate {self.name} has non-finite parameter {p!r}")

    @property
    def num_targets(self) -> int:
        return GATE_SIGNATURES[self.name][1]

    @property
    def is_diagonal(self) -> bool:
        return self.name in _DIAGONAL

    def __str__(self) -> str:
        if not self.params:
            return self.name
        return f"{self.name}({', '.join(str(p) for p in self.params)})"


def gate_matrix(gate: Gate) -> np.ndarray:
    """Return the ``2**k x 2**k`` matrix of ``gate`` (k = number of targets).

    For two-target gates ``targets[0]`` is the least significant index bit.
    Controls are handled by the simulator, never here.
    """
    return _gate_matrix(gate.name, tuple(float(p) for p in gate.params))


_SQ = 1 / math.sqrt(2)
_FIXED = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "h": np.array([[_SQ, _SQ], [_SQ, -_SQ]], dtype=complex),
    "s": np.array([[1, 0], [0, 1j]], dtype=complex),
    "sdg": np.array([[1, 0], [0, -1j]], dtype=complex),
    "t": np.array([[1, 0], [0, cmath.exp(1j * math.pi / 4)]], dtype=complex),
    "tdg": np.array([[1, 0], [0, cmath.exp(-1j * math.pi / 4)]], dtype=complex),
    "sx": np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex) / 2,
    "swap": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}


@lru_cache(maxsize=4096)
def _gate_matrix(name: str, params: tuple) -> np.ndarray:
    if name in _FIXED:
        m = _FIXED[name]
    elif name == "p":
        m = np.array([[1, 0], [0, cmath.exp(1j * params[0])]], dtype=complex)
    elif name == "rz":
        h = params[0] / 2
        m = np.array([[cmath.exp(-1j * h), 0], [0, cmath.exp(1j * h)]], dtype=complex)
    elif name == "rx":
        c, s = math.cos(params[0] / 2), math.sin(params[0] / 2)
        m = np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    elif name == "ry":
        c, s = math.cos(params[0] / 2), math.sin(params[0] / 2)
        m = np.array([[c, -s], [s, c]], dtype=complex)
    elif name == "u":
        theta, phi, lam = params
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        m = np.array(
            [[c, -cmath.exp(1j * lam) * s],
             [cmath.exp(1j * phi) * s, cmath.exp(1j * (phi + lam)) * c]],
            dtype=complex,
        )
    else:  # pragma: no cover - guarded by Gate.__post_init__
        raise CircuitError(f"unknown gate {name!r}")
    m = m.copy()
    m.flags.writeable = False
    return m


def inverse_gates(gate: Gate) -> list[Gate]:
    """Gates whose product equals ``gate``'s inverse exactly (no global phase)."""
    name, params = gate.name, gate.params
    if name in ("x", "y", "z", "h", "swap"):
        return [gate]
    if name in ("s", "sdg", "t", "tdg"):
        flip = {"s": "sdg", "sdg": "s", "t": "tdg", "tdg": "t"}
        return [Gate(flip[name])]
    if name == "sx":
        # sx has order 4 and the set has no sxdg
        return [gate, gate, gate]
    if name in ("p", "rx", "ry", "rz"):
        return [Gate(name, (neg_angle(params[0]),))]
    theta, phi, lam = params
    return [Gate("u", (neg_angle(theta), neg_angle(lam), neg_angle(phi)))]


@dataclass(frozen=True)
class Control:
    qubit: int
    positive: bool = True


@dataclass(frozen=True)
class Unitary:
    gate: Gate
    targets: tuple[int, ...]
    controls: tuple[Control, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "controls", tuple(self.controls))

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(c.qubit for c in self.controls) + self.targets


@dataclass(frozen=True)
class Measure:
    qubit: int
    clbit: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


@dataclass(frozen=True)
class Reset:
    qubit: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


@dataclass(frozen=True)
class ClassicControlled:
    """``inner`` is applied iff classical bit ``clbit`` equals ``value``."""

    inner: Unitary
    clbit: int
    value: int = 1

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.inner.qubits


Operation = Union[Unitary, Measure, Reset, ClassicControlled]


@dataclass(frozen=True)
class ValidationError:
    op_index: int | None
    reason: str

    def __str__(self) -> str:
        where = "circuit" if self.op_index is None else f"op {self.op_index}"
        return f"{where}: {self.reason}"


@dataclass(frozen=True)
class Circuit:
    """Ordered operations over ``num_qubits`` qubits and ``num_clbits`` classical bits.

    ``output_order[k]`` is the clbit reported at weight ``2**k`` in outcome
    bitstrings. ``None`` means every measured clbit, in index order.
    """

    num_qubits: int
    num_clbits: int = 0
    ops: tuple[Operation, ...] = ()
    name: str = "circuit"
    output_order: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        if self.output_order is not None:
            object.__setattr__(self, "output_order", tuple(self.output_order))

    def __len__(self) -> int:
        return len(self.ops)

    @property
    def outputs(self) -> tuple[int, ...]:
        if self.output_order is not None:
            return self.output_order
        return tuple(sorted({op.clbit for op in self.ops if isinstance(op, Measure)}))

    @property
    def has_default_output_order(self) -> bool:
        return self.output_order is None or self.output_order == tuple(
            sorted({op.clbit for op in self.ops if isinstance(op, Measure)})
        )

    def with_ops(self, ops: Iterable[Operation], **changes) -> Circuit:
        fields = dict(num_qubits=self.num_qubits, num_clbits=self.num_clbits,
                      name=self.name, output_order=self.output_order)
        fields.update(changes)
        return Circuit(ops=tuple(ops), **fields)

    def check(self) -> Circuit:
        """Return ``self`` or raise :class:`CircuitError` listing every violation."""
        errors = validate(self)
        if errors:
            raise CircuitError("; ".join(str(e) for e in errors))
        return self


def _validate_unitary(op: Unitary, n: int) -> list[str]:
    reasons = []
    if not isinstance(op.gate, Gate):
        return ["unitary without a gate kind"]
    if len(op.targets) != op.gate.num_targets:
        reasons.append(f"gate {op.gate.name} expects {op.gate.num_targets} target(s), got {len(op.targets)}")
    for q in op.qubits:
        if not isinstance(q, (int, np.integer)) or q < 0 or q >= n:
            reasons.append(f"qubit index {q} out of range for {n} qubit(s)")
    targets = set(op.targets)
    controls = [c.qubit for c in op.controls]
    if any(c in targets for c in controls):
        reasons.append("control equals target")
    elif len(set(op.qubits)) != len(op.qubits):
        reasons.append("qubit appears twice in one operation")
    return reasons


def validate(circuit: Circuit) -> list[ValidationError]:
    """Check every invariant of the model; returns an empty list iff the circuit is valid."""
    errors: list[ValidationError] = []
    n, m = circuit.num_qubits, circuit.num_clbits
    if n < 0 or m < 0:
        errors.append(ValidationError(None, "negative register size"))
    measured = set()
    for i, op in enumerate(circuit.ops):
        if isinstance(op, Unitary):
            reasons = _validate_unitary(op, n)
        elif isinstance(op, ClassicControlled):
            reasons = _validate_unitary(op.inner, n) if isinstance(op.inner, Unitary) else ["classically-controlled op must wrap a unitary"]
            if not 0 <= op.clbit < m:
                reasons.append(f"clbit index {op.clbit} out of range for {m} clbit(s)")
            if op.value not in (0, 1):
                reasons.append(f"condition value must be a bit, got {op.value!r}")
        elif isinstance(op, Measure):
            reasons = []
            if not 0 <= op.qubit < n:
                reasons.append(f"qubit index {op.qubit} out of range for {n} qubit(s)")
            if not 0 <= op.clbit < m:
                reasons.append(f"clbit index {op.clbit} out of range for {m} clbit(s)")
            measured.add(op.clbit)
        elif isinstance(op, Reset):
            reasons = [] if 0 <= op.qubit < n else [f"qubit index {op.qubit} out of range for {n} qubit(s)"]
        else:
            reasons = [f"unknown operation type {type(op).__name__}"]
        errors.extend(ValidationError(i, r) for r in reasons)
    if circuit.output_order is not None:
        order = circuit.output_order
        if len(set(order)) != len(order):
            errors.append(ValidationError(None, "output_order has duplicates"))
        for c in order:
            if c not in measured:
                errors.append(ValidationError(None, f"output clbit {c} is never measured"))
    return errors


def count_measurements(circuit: Circuit) -> int:
    return sum(isinstance(op, Measure) for op in circuit.ops)


def count_resets(circuit: Circuit) -> int:
    return sum(isinstance(op, Reset) for op in circuit.ops)


def count_classic_controls(circuit: Circuit) -> int:
    return sum(isinstance(op, ClassicControlled) for op in circuit.ops)


def mid_circuit_measurements(circuit: Circuit) -> list[int]:
    """Indices of measures followed by a later op on the same qubit or clbit."""
    found = []
    ops = circuit.ops
    for i, op in enumerate(ops):
        if not isinstance(op, Measure):
            continue
        for later in ops[i + 1:]:
            if op.qubit in later.qubits:
                found.append(i)
                break
            if isinstance(later, (Measure, ClassicControlled)) and later.clbit == op.clbit:
                found.append(i)
                break
    return found


def is_dynamic(circuit: Circuit) -> bool:
    if any(isinstance(op, (Reset, ClassicControlled)) for op in circuit.ops):
        return True
    return bool(mid_circuit_measurements(circuit))


def num_gates(circuit: Circuit) -> int:
    return sum(isinstance(op, (Unitary, ClassicControlled)) for op in circuit.ops)


def append(circuit: Circuit, op: Operation) -> Circuit:
    return circuit.with_ops(circuit.ops + (op,))


def compose(a: Circuit, b: Circuit) -> Circuit:
    """``a`` followed by ``b``; both must have the same register sizes."""
    if (a.num_qubits, a.num_clbits) != (b.num_qubits, b.num_clbits):
        raise CircuitError(
            f"arity mismatch: ({a.num_qubits}, {a.num_clbits}) vs ({b.num_qubits}, {b.num_clbits})"
        )
    order = a.output_order if b.output_order is None else b.output_order
    return a.with_ops(a.ops + b.ops, output_order=order)


def inverse(circuit: Circuit) -> Circuit:
    """Inverse of a unitary-only circuit (measurements are rejected)."""
    ops = []
    for op in reversed(circuit.ops):
        if not isinstance(op, Unitary):
            raise CircuitError(f"cannot invert non-unitary operation {op!r}")
        ops.extend(Unitary(g, op.targets, op.controls) for g in inverse_gates(op.gate))
    return circuit.with_ops(ops, name=f"{circuit.name}_inv", output_order=None)


def strip_measurements(circuit: Circuit) -> Circuit:
    return circuit.with_ops((op for op in circuit.ops if not isinstance(op, Measure)), output_order=None)


def _params_close(a: Sequence, b: Sequence, atol: float) -> bool:
    return len(a) == len(b) and all(abs(float(x) - float(y)) <= atol for x, y in zip(a, b))


def _unitary_close(a: Unitary, b: Unitary, atol: float) -> bool:
    return (a.gate.name == b.gate.name and a.targets == b.targets and a.controls == b.controls
            and _params_close(a.gate.params, b.gate.params, atol))


def structurally_equal(a: Circuit, b: Circuit, atol: float = 1e-12) -> bool:
    """Equality of register sizes, outputs and op lists; angles compared in float space."""
    if (a.num_qubits, a.num_clbits, a.outputs) != (b.num_qubits, b.num_clbits, b.outputs):
        return False
    if len(a.ops) != len(b.ops):
        return False
    for x, y in zip(a.ops, b.ops):
        if type(x) is not type(y):
            return False
        if isinstance(x, Unitary):
            if not _unitary_close(x, y, atol):
                return False
        elif isinstance(x, ClassicControlled):
            if (x.clbit, x.value) != (y.clbit, y.value) or not _unitary_close(x.inner, y.inner, atol):
                return False
        elif x != y:
            return False
    return True


@dataclass
class Builder:
    """Mutable single-owner helper for assembling a :class:`Circuit`."""

    num_qubits: int
    num_clbits: int = 0
    name: str = "circuit"
    ops: list = field(default_factory=list)

    def add(self, op: Operation) -> Builder:
        self.ops.append(op)
        return self

    def gate(self, name: str, *targets: int, params: Sequence[Angle] = (), controls=(), negative=()) -> Builder:
        ctrls = tuple(Control(q, True) for q in controls) + tuple(Control(q, False) for q in negative)
        return self.add(Unitary(Gate(name, tuple(params)), tuple(targets), ctrls))

    def h(self, q: int) -> Builder:
        return self.gate("h", q)

    def x(self, q: int) -> Builder:
        return self.gate("x", q)

    def cx(self, control: int, target: int) -> Builder:
        return self.gate("x", target, controls=(control,))

    def p(self, theta: Angle, q: int) -> Builder:
        return self.gate("p", q, params=(theta,))

    def cp(self, theta: Angle, control: int, target: int) -> Builder:
        return self.gate("p", target, params=(theta,), controls=(control,))

    def measure(self, q: int, c: int) -> Builder:
        return self.add(Measure(q, c))

    def reset(self, q: int) -> Builder:
        return self.add(Reset(q))

    def c_if(self, clbit: int, value: int, name: str, *targets: int, params: Sequence[Angle] = ()) -> Builder:
        return self.add(ClassicControlled(Unitary(Gate(name, tuple(params)), tuple(targets)), clbit, value))

    def build(self, output_order: Sequence[int] | None = None) -> Circuit:
        return Circuit(self.num_qubits, self.num_clbits, tuple(self.ops), self.name,
                       None if output_order is None else tuple(output_order)).check()
