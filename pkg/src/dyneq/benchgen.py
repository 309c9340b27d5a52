"""Benchmark circuit families: static and dynamic QPE, Bernstein-Vazirani and QFT.

Layout conventions shared by every family:

* qubit 0 holds the eigenstate (QPE) or the phase-kickback ancilla (BV);
  QFT has no such qubit.
* the dynamic variants reuse one work qubit and reset it between rounds, so
  reconstructing them puts round ``k`` on wire ``k + 1`` (``k`` for QFT), which
  is exactly where the static variants keep the qubit measured into clbit ``k``.
  Reconstructed dynamic circuits therefore line up with their static partner
  without any permutation.
* clbit ``k`` has weight ``2**k``; the QPE estimate is ``0.c_{m-1}...c_0``.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .circuit import (
    GATE_SIGNATURES, Angle, Builder, Circuit, ClassicControlled, Control, Gate, Measure, PiFraction,
    Reset, Unitary,
)


@dataclass(frozen=True)
class BenchSpec:
    family: str  # bv | qft | qpe
    variant: str  # static | dynamic
    size: int
    theta: Angle | None = None
    secret: str | None = None

    def __post_init__(self):
        if self.family not in ("bv", "qft", "qpe"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.variant not in ("static", "dynamic"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.size < 1:
            raise ValueError("size must be >= 1")
        if self.secret is not None and len(self.secret) != self.size:
            raise ValueError("secret length must equal size")
        if self.theta is not None and not 0 <= float(self.theta) < 2 * 3.141592653589793:
            raise ValueError("theta must lie in [0, 2pi)")

    def build(self) -> Circuit:
        dynamic = self.variant == "dynamic"
        if self.family == "qpe":
            theta = self.theta if self.theta is not None else PiFraction(Fraction(3, 8))
            return iqpe_dynamic(self.size, theta) if dynamic else qpe_static(self.size, theta)
        if self.family == "bv":
            secret = self.secret or "1" * self.size
            return bv_dynamic(secret) if dynamic else bv_static(secret)
        return qft_dynamic(self.size) if dynamic else qft_static(self.size)


def _times(theta: Angle, k: int) -> Angle:
    return theta * k if isinstance(theta, PiFraction) else float(theta) * k


def _inverse_qft_phase(distance: int) -> tuple[str, tuple]:
    """Gate for the controlled correction -pi/2**distance (S-dagger and T-dagger where they fit)."""
    if distance == 1:
        return "sdg", ()
    if distance == 2:
        return "tdg", ()
    return "p", (PiFraction(Fraction(-1, 2 ** distance)),)


def qpe_static(m: int, theta: Angle, prepare_eigenstate: bool = False) -> Circuit:
    """m-bit phase estimation of ``p(theta)``; qubit 0 is the eigenstate, qubit k+1 yields clbit k.

    The eigenstate |1> is expected as input (basis index 1) unless
    ``prepare_eigenstate`` adds an X on qubit 0.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    b = Builder(m + 1, m, f"qpe_static_{m}")
    if prepare_eigenstate:
        b.x(0)
    for j in range(m):
        b.h(j + 1)
    for j in range(m):
        b.cp(_times(theta, 2 ** (m - 1 - j)), j + 1, 0)
    for j in range(m):
        for k in range(j):
            name, params = _inverse_qft_phase(j - k)
            b.gate(name, j + 1, params=params, controls=(k + 1,))
        b.h(j + 1)
    for j in range(m):
        b.measure(j + 1, j)
    return b.build()


def iqpe_dynamic(m: int, theta: Angle, prepare_eigenstate: bool = False) -> Circuit:
    """Iterative phase estimation with a single work qubit (qubit 1), measured and reset each round."""
    if m < 1:
        raise ValueError("m must be >= 1")
    b = Builder(2, m, f"iqpe_dynamic_{m}")
    if prepare_eigenstate:
        b.x(0)
    for j in range(m):
        b.h(1)
        b.cp(_times(theta, 2 ** (m - 1 - j)), 1, 0)
        for k in range(j):
            b.c_if(k, 1, "p", 1, params=(PiFraction(Fraction(-1, 2 ** (j - k))),))
        b.h(1)
        b.measure(1, j)
        if j < m - 1:
            b.reset(1)
    return b.build()


def _secret_bits(secret: str) -> list[int]:
    if not secret or any(ch not in "01" for ch in secret):
        raise ValueError(f"secret must be a nonempty bitstring, got {secret!r}")
    # clbit k holds the k-th least significant character
    return [int(ch) for ch in reversed(secret)]


def bv_static(secret: str) -> Circuit:
    """Bernstein-Vazirani with ancilla qubit 0 and data qubit k+1 measured into clbit k."""
    bits = _secret_bits(secret)
    n = len(bits)
    b = Builder(n + 1, n, f"bv_static_{secret}")
    b.x(0).h(0)
    for k in range(n):
        b.h(k + 1)
    for k in range(n):
        if bits[k]:
            b.cx(k + 1, 0)
    for k in range(n):
        b.h(k + 1)
    b.h(0).x(0)
    for k in range(n):
        b.measure(k + 1, k)
    return b.build()


def bv_dynamic(secret: str) -> Circuit:
    """Two-qubit Bernstein-Vazirani: the work qubit is measured and reset once per secret bit."""
    bits = _secret_bits(secret)
    n = len(bits)
    b = Builder(2, n, f"bv_dynamic_{secret}")
    b.x(0).h(0)
    for k in range(n):
        b.h(1)
        if bits[k]:
            b.cx(1, 0)
        b.h(1)
        b.measure(1, k)
        if k < n - 1:
            b.reset(1)
    b.h(0).x(0)
    return b.build()


def qft_static(n: int) -> Circuit:
    """QFT (no final swaps) on n qubits, qubit k measured into clbit k."""
    if n < 1:
        raise ValueError("n must be >= 1")
    b = Builder(n, n, f"qft_static_{n}")
    for j in range(n):
        b.h(j)
        for k in range(j + 1, n):
            b.cp(PiFraction(Fraction(1, 2 ** (k - j))), k, j)
    for j in range(n):
        b.measure(j, j)
    return b.build()


def qft_dynamic(n: int) -> Circuit:
    """Semiclassical QFT on one reused qubit: phases conditioned on earlier outcomes, H, measure."""
    if n < 1:
        raise ValueError("n must be >= 1")
    b = Builder(1, n, f"qft_dynamic_{n}")
    for k in range(n):
        for j in range(k):
            b.c_if(j, 1, "p", 0, params=(PiFraction(Fraction(1, 2 ** (k - j))),))
        b.h(0)
        b.measure(0, k)
        if k < n - 1:
            b.reset(0)
    return b.build()


FAMILIES = {
    "bv": (bv_static, bv_dynamic),
    "qft": (qft_static, qft_dynamic),
    "qpe": (qpe_static, iqpe_dynamic),
}


# -- random circuits ---------------------------------------------------------

_RANDOM_GATES = [g for g in GATE_SIGNATURES]


def _random_angle(rng: random.Random):
    if rng.random() < 0.3:
        return PiFraction(Fraction(rng.randint(-16, 16), rng.choice([1, 2, 4, 8, 16])))
    return rng.uniform(-7.0, 7.0)


def _random_unitary(rng: random.Random, targets_from: list[int], controls_from: list[int],
                    max_controls: int, negative: bool) -> Unitary | None:
    names = [g for g in _RANDOM_GATES if GATE_SIGNATURES[g][1] <= len(targets_from)]
    if not names:
        return None
    name = rng.choice(names)
    nparams, ntargets = GATE_SIGNATURES[name]
    targets = rng.sample(targets_from, ntargets)
    pool = [q for q in controls_from if q not in targets]
    k = rng.randint(0, min(max_controls, len(pool)))
    controls = tuple(Control(q, (not negative) or rng.random() < 0.6) for q in rng.sample(pool, k))
    return Unitary(Gate(name, tuple(_random_angle(rng) for _ in range(nparams))), tuple(targets), controls)


def random_circuit(rng: random.Random, num_qubits: int = 3, num_clbits: int = 3, num_ops: int = 20,
                   negative_controls: bool = False, reorder_outputs: bool = True) -> Circuit:
    """Arbitrary valid circuit mixing every operation kind; no deferrability guarantees."""
    qubits = list(range(num_qubits))
    ops = []
    written: set[int] = set()
    for _ in range(num_ops):
        r = rng.random()
        if r < 0.55 or not num_clbits:
            op = _random_unitary(rng, qubits, qubits, 2, negative_controls)
            if op is not None:
                ops.append(op)
        elif r < 0.75:
            c = rng.randrange(num_clbits)
            ops.append(Measure(rng.randrange(num_qubits), c))
            written.add(c)
        elif r < 0.85:
            ops.append(Reset(rng.randrange(num_qubits)))
        else:
            inner = _random_unitary(rng, qubits, qubits, 1, negative_controls)
            if inner is not None:
                ops.append(ClassicControlled(inner, rng.randrange(num_clbits), rng.randint(0, 1)))
    order = None
    if reorder_outputs and written and rng.random() < 0.3:
        order = sorted(written)
        rng.shuffle(order)
    return Circuit(num_qubits, num_clbits, tuple(ops), f"random_{num_qubits}x{num_ops}", order).check()


def random_dynamic_circuit(rng: random.Random, max_qubits: int = 4, max_measures: int = 3,
                           max_resets: int = 2, num_ops: int = 16) -> Circuit:
    """Random dynamic circuit that reconstruction accepts.

    A measured qubit is only used as a control until it is reset; every clbit
    is written once before any condition reads it.
    """
    n = rng.randint(1, max_qubits)
    m = rng.randint(1, max_measures)
    r_budget = rng.randint(0, max_resets)
    ops = []
    measured: set[int] = set()
    written: list[int] = []
    resets = 0
    for _ in range(num_ops):
        free = [q for q in range(n) if q not in measured]
        r = rng.random()
        if r < 0.5:
            op = _random_unitary(rng, free, list(range(n)), 2, True) if free else None
            if op is not None:
                ops.append(op)
        elif r < 0.7 and len(written) < m and free:
            q = rng.choice(free)
            ops.append(Measure(q, len(written)))
            written.append(len(written))
            measured.add(q)
        elif r < 0.82 and resets < r_budget:
            q = rng.choice(sorted(measured)) if measured and rng.random() < 0.7 else rng.randrange(n)
            ops.append(Reset(q))
            measured.discard(q)
            resets += 1
        elif written and free:
            inner = _random_unitary(rng, free, list(range(n)), 1, True)
            if inner is not None:
                ops.append(ClassicControlled(inner, rng.choice(written), rng.randint(0, 1)))
    # make sure the circuit measures at least once and stays dynamic-ish
    while len(written) < m:
        free = [q for q in range(n) if q not in measured]
        if not free:
            break
        q = rng.choice(free)
        ops.append(Measure(q, len(written)))
        written.append(len(written))
        measured.add(q)
    return Circuit(n, m, tuple(ops), f"random_dynamic_{n}q", None).check()
