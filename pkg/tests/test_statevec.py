import math

import numpy as np
import pytest

from dyneq.benchgen import iqpe_dynamic, qpe_static
from dyneq.circuit import GATE_SIGNATURES, Builder, Control, Gate, Unitary, gate_matrix, inverse_gates, pi_frac
from dyneq.statevec import (
    SimConfig, SimulationError, StateVector, apply, init_basis, outcome_distribution_static,
    prob_one, prob_zero, project,
)


def naive_operator(n, op):
    """Full 2^n matrix of a controlled gate, built entry by entry from basis indices."""
    m = gate_matrix(op.gate)
    k = len(op.targets)
    dim = 2 ** n
    full = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        if not all(((col >> c.qubit) & 1) == int(c.positive) for c in op.controls):
            full[col, col] = 1
            continue
        sub_in = sum(((col >> t) & 1) << j for j, t in enumerate(op.targets))
        for sub_out in range(2 ** k):
            row = col
            for j, t in enumerate(op.targets):
                row = (row & ~(1 << t)) | (((sub_out >> j) & 1) << t)
            full[row, col] += m[sub_out, sub_in]
    return full


def random_state(rng, n):
    v = np.array([complex(rng.gauss(0, 1), rng.gauss(0, 1)) for _ in range(2 ** n)])
    return StateVector(n, v / np.linalg.norm(v))


def random_op(rng, n):
    name = rng.choice([g for g in sorted(GATE_SIGNATURES) if GATE_SIGNATURES[g][1] <= n])
    nparams, ntargets = GATE_SIGNATURES[name]
    qs = rng.sample(range(n), min(n, ntargets + rng.randint(0, 2)))
    targets, rest = qs[:ntargets], qs[ntargets:]
    controls = tuple(Control(q, rng.random() < 0.6) for q in rest)
    return Unitary(Gate(name, tuple(rng.uniform(-4, 4) for _ in range(nparams))), tuple(targets), controls)


def test_init_basis():
    s = init_basis(4, 0b0001)
    assert s.amps[1] == 1 and np.count_nonzero(s.amps) == 1
    assert np.array_equal(init_basis(1, 0).amps, [1, 0])
    assert init_basis(10, 37).norm() == pytest.approx(1.0)
    with pytest.raises(SimulationError):
        init_basis(2, 4)


def test_hadamard_on_zero():
    s = apply(init_basis(1, 0), Unitary(Gate("h"), (0,)))
    assert np.allclose(s.amps, [1 / math.sqrt(2)] * 2)


def test_controlled_phase_on_11():
    s = apply(init_basis(2, 3), Unitary(Gate("p", (pi_frac(3, 8),)), (0,), (Control(1),)))
    assert np.allclose(s.amps, [0, 0, 0, np.exp(2j * np.pi * 3 / 16)], atol=1e-15)


def test_hadamard_twice(rng):
    s = random_state(rng, 3)
    orig = s.amps.copy()
    for _ in range(2):
        apply(s, Unitary(Gate("h"), (1,)))
    assert np.abs(s.amps - orig).max() < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_apply_matches_naive_operator(n, rng):
    for _ in range(40):
        op = random_op(rng, n)
        s = random_state(rng, n)
        expected = naive_operator(n, op) @ s.amps
        apply(s, op)
        assert np.abs(s.amps - expected).max() < 1e-12


def test_apply_inverse_restores(rng):
    for _ in range(50):
        n = rng.randint(1, 4)
        op = random_op(rng, n)
        s = random_state(rng, n)
        orig = s.amps.copy()
        apply(s, op)
        assert abs(s.norm() - 1) <= 1e-10
        for g in inverse_gates(op.gate):
            apply(s, Unitary(g, op.targets, op.controls))
        assert np.abs(s.amps - orig).max() <= 1e-10


def test_linearity(rng):
    n = 3
    for _ in range(10):
        op = random_op(rng, n)
        a, b = random_state(rng, n), random_state(rng, n)
        alpha, beta = 0.3 - 0.2j, 0.7j
        combo = alpha * a.amps + beta * b.amps
        scale = np.linalg.norm(combo)
        mix = StateVector(n, combo / scale)
        apply(a, op)
        apply(b, op)
        apply(mix, op)
        assert np.allclose(mix.amps * scale, alpha * a.amps + beta * b.amps, atol=1e-12)


def test_prob_zero_examples():
    s = apply(init_basis(1, 0), Unitary(Gate("h"), (0,)))
    assert prob_zero(s, 0) == pytest.approx(0.5)
    assert prob_zero(init_basis(1, 1), 0) == 0


def test_prob_sum(rng):
    s = random_state(rng, 4)
    for q in range(4):
        assert abs(prob_zero(s, q) + prob_one(s, q) - 1) <= 1e-12


def test_iqpe_second_checkpoint():
    # simulate the first two rounds of IQPE by hand, forcing c0 = 1
    g = iqpe_dynamic(3, pi_frac(3, 8))
    s = init_basis(2, 1)
    measures = 0
    classical = {}
    for op in g.ops:
        kind = type(op).__name__
        if kind == "Unitary":
            apply(s, op)
        elif kind == "ClassicControlled":
            if classical[op.clbit] == op.value:
                apply(s, op.inner)
        elif kind == "Measure":
            if measures == 1:
                assert prob_zero(s, op.qubit) == pytest.approx(math.cos(math.pi / 8) ** 2, abs=1e-12)
                return
            project(s, op.qubit, 1)
            classical[op.clbit] = 1
            measures += 1
        elif kind == "Reset":
            apply(s, Unitary(Gate("x"), (op.qubit,)))
    pytest.fail("second measurement not reached")


def test_project():
    s = project(apply(init_basis(1, 0), Unitary(Gate("h"), (0,))), 0, 1)
    assert np.allclose(s.amps, [0, 1])
    with pytest.raises(SimulationError, match="zero-probability projection"):
        project(init_basis(1, 0), 0, 1)


def test_project_idempotent(rng):
    for outcome in (0, 1):
        s = project(random_state(rng, 3), 1, outcome)
        assert prob_zero(s, 1) == (1.0 if outcome == 0 else 0.0)
        assert abs(s.norm() - 1) < 1e-12


def test_qpe_top_two():
    d = outcome_distribution_static(qpe_static(3, pi_frac(3, 8)), 1)
    assert [k for k, _ in d.top(2)] == ["001", "010"] or [k for k, _ in d.top(2)] == ["010", "001"]


def test_h_measure_uniform():
    d = outcome_distribution_static(Builder(1, 1).h(0).measure(0, 0).build(), 0)
    assert d.entries == pytest.approx({"0": 0.5, "1": 0.5})


def test_exact_phase_certain():
    d = outcome_distribution_static(qpe_static(3, pi_frac(1, 4)), 1)
    assert d.entries == pytest.approx({"001": 1.0}, abs=1e-12)


def test_output_order_controls_key_layout():
    g = Builder(2, 2).x(0).measure(0, 0).measure(1, 1).build(output_order=(1, 0))
    # clbit 1 at weight 1 (rightmost), clbit 0 at weight 2
    assert outcome_distribution_static(g, 0).entries == pytest.approx({"10": 1.0})


def test_not_static_rejected():
    with pytest.raises(SimulationError, match="not static"):
        outcome_distribution_static(iqpe_dynamic(2, pi_frac(1, 4)), 1)


def test_sim_config_bounds():
    with pytest.raises(ValueError):
        SimConfig(norm_tolerance=0)
