import pytest

from dyneq.benchgen import iqpe_dynamic, qpe_static, random_dynamic_circuit
from dyneq.circuit import (
    Builder, ClassicControlled, Control, Measure, Reset, Unitary, count_resets, is_dynamic, pi_frac,
    structurally_equal,
)
from dyneq.equivalence import total_variation
from dyneq.extract import extract
from dyneq.reconstruct import ReconstructError, defer_measurements, reconstruct_unitary, substitute_resets
from dyneq.statevec import outcome_distribution_static


def iqpe3():
    return iqpe_dynamic(3, pi_frac(3, 8))


def test_substitute_resets_iqpe_structure():
    g, wires = substitute_resets(iqpe3())
    assert g.num_qubits == 4
    assert not any(isinstance(op, Reset) for op in g.ops)
    # round k works on wire k + 1; the eigenstate stays on wire 0
    assert [(m.qubit, m.clbit) for m in g.ops if isinstance(m, Measure)] == [(1, 0), (2, 1), (3, 2)]
    conds = [(op.clbit, op.inner.targets) for op in g.ops if isinstance(op, ClassicControlled)]
    assert conds == [(0, (2,)), (0, (3,)), (1, (3,))]
    assert wires.allocations == [(4, 2), (10, 3)]
    assert wires.current == [0, 3]
    assert wires.to_json() == {"allocations": [[4, 2], [10, 3]], "finalMap": [0, 3]}


def test_substitute_without_resets_is_identity():
    g = qpe_static(3, pi_frac(3, 8))
    out, wires = substitute_resets(g)
    assert structurally_equal(out, g) and wires.allocations == []


def test_h_reset_h():
    out, _ = substitute_resets(Builder(1, 0).h(0).reset(0).h(0).build())
    assert out.num_qubits == 2
    assert [op.targets for op in out.ops] == [(0,), (1,)]


def test_reset_on_untouched_qubit_is_substituted():
    out, wires = substitute_resets(Builder(2, 0).reset(1).x(1).build())
    assert out.num_qubits == 3 and wires.allocations == [(0, 2)]


def test_defer_matches_deferred_qpe_structure():
    g, _ = reconstruct_unitary(iqpe3())
    ops = g.ops
    tail = ops[-3:]
    assert all(isinstance(m, Measure) for m in tail)
    assert [(m.qubit, m.clbit) for m in tail] == [(1, 0), (2, 1), (3, 2)]
    assert not any(isinstance(op, (Measure, Reset, ClassicControlled)) for op in ops[:-3])
    controlled_phases = [op for op in ops[:-3] if op.gate.name == "p" and op.controls and op.targets != (0,)]
    assert [(op.controls[0].qubit, op.targets[0]) for op in controlled_phases] == [(1, 2), (1, 3), (2, 3)]
    assert all(op.controls[0].positive for op in controlled_phases)
    assert not is_dynamic(g)


def test_defer_static_unchanged():
    g = qpe_static(3, pi_frac(3, 8))
    assert structurally_equal(defer_measurements(g), g)
    out, _ = reconstruct_unitary(g)
    assert structurally_equal(out, g)


def test_non_deferrable():
    g = Builder(1, 1).measure(0, 0).x(0).build()
    with pytest.raises(ReconstructError, match="non-deferrable"):
        defer_measurements(g)


def test_control_on_measured_qubit_allowed():
    g = Builder(2, 1).h(0).measure(0, 0).cx(0, 1).build()
    out = defer_measurements(g)
    assert isinstance(out.ops[-1], Measure)


def test_condition_on_unwritten_clbit():
    g = Builder(1, 1).c_if(0, 1, "x", 0).build()
    with pytest.raises(ReconstructError, match="condition on unwritten clbit"):
        defer_measurements(g)


def test_clbit_overwritten():
    g = Builder(2, 1).measure(0, 0).measure(1, 0).build()
    with pytest.raises(ReconstructError, match="clbit overwritten") as info:
        defer_measurements(g)
    assert info.value.op_index == 1


def test_value_zero_condition_becomes_negative_control():
    g = Builder(2, 1).h(0).measure(0, 0).c_if(0, 0, "x", 1).build()
    out = defer_measurements(g)
    op = out.ops[1]
    assert op.controls == (Control(0, False),)


def test_gate_count_law(rng):
    for _ in range(30):
        g = random_dynamic_circuit(rng)
        sub, _ = substitute_resets(g)
        out = defer_measurements(sub)
        units = sum(isinstance(op, (Unitary, ClassicControlled)) for op in sub.ops)
        # conditions reading the same qubit with opposite polarity drop out, nothing else changes
        assert sum(isinstance(op, Unitary) for op in out.ops) <= units
        assert sum(isinstance(op, Measure) for op in out.ops) == sum(isinstance(op, Measure) for op in g.ops)


def test_qubit_count_law(rng):
    for _ in range(50):
        g = random_dynamic_circuit(rng)
        out, _ = reconstruct_unitary(g)
        assert out.num_qubits == g.num_qubits + count_resets(g)


def test_distribution_preserved_random(rng):
    for _ in range(50):
        g = random_dynamic_circuit(rng)
        s = rng.randrange(2 ** g.num_qubits)
        out, _ = reconstruct_unitary(g)
        tvd = total_variation(extract(g, s).entries, outcome_distribution_static(out, s).entries)
        assert tvd <= 1e-9


def test_iqpe_distribution_matches_qpe():
    out, _ = reconstruct_unitary(iqpe3())
    d1 = outcome_distribution_static(out, 1)
    d2 = outcome_distribution_static(qpe_static(3, pi_frac(3, 8)), 1)
    assert total_variation(d1.entries, d2.entries) <= 1e-12
