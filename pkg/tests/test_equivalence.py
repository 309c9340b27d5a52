import math

import numpy as np
import pytest

from dyneq.benchgen import bv_dynamic, bv_static, iqpe_dynamic, qpe_static, random_circuit, random_dynamic_circuit
from dyneq.circuit import Builder, Circuit, Gate, Unitary, inverse, pi_frac, strip_measurements
from dyneq.equivalence import (
    CheckConfig, EquivalenceError, build_unitary, check_distribution, check_full,
    measurement_alignment, permute_unitary, total_variation,
)
from dyneq.reconstruct import ReconstructError, reconstruct_unitary


def with_global_phase(g: Circuit, lam: float) -> Circuit:
    """Prepend rz(lam) p(-lam) on qubit 0, which equals exp(-i lam/2) times the identity."""
    layer = (Unitary(Gate("rz", (lam,)), (0,)), Unitary(Gate("p", (-lam,)), (0,)))
    return g.with_ops(layer + g.ops)


def perturbed_qpe(eps):
    g = qpe_static(3, pi_frac(3, 8))
    ops = list(g.ops)
    i = next(i for i, op in enumerate(ops) if isinstance(op, Unitary) and op.gate.name == "p" and op.controls)
    op = ops[i]
    ops[i] = Unitary(Gate("p", (float(op.gate.params[0]) + eps,)), op.targets, op.controls)
    return g.with_ops(ops)


def test_build_unitary_h():
    u = build_unitary(Builder(1, 0).h(0).build())
    assert np.allclose(u, np.array([[1, 1], [1, -1]]) / math.sqrt(2))


def test_build_unitary_reconstructed_iqpe():
    g, _ = reconstruct_unitary(iqpe_dynamic(3, pi_frac(3, 8)))
    u = build_unitary(g)
    assert u.shape == (16, 16)
    assert np.abs(u.conj().T @ u - np.eye(16)).max() <= 1e-9


def test_build_unitary_times_inverse(rng):
    for _ in range(10):
        g = random_circuit(rng, 3, 0, 25)
        prod = build_unitary(g) @ build_unitary(inverse(g))
        assert np.abs(prod - np.eye(8)).max() <= 1e-9


def test_build_unitary_parallel_matches(rng):
    g = random_circuit(rng, 4, 0, 30)
    assert np.array_equal(build_unitary(g, workers=1), build_unitary(g, workers=3))


def test_dense_cap():
    with pytest.raises(EquivalenceError, match="too many qubits for dense unitary"):
        build_unitary(Builder(5, 0).h(4).build(), dense_cap=4)


def test_iqpe_vs_qpe_full():
    r = check_full(iqpe_dynamic(3, pi_frac(3, 8)), qpe_static(3, pi_frac(3, 8)))
    assert r.equivalent and r.max_deviation <= 1e-10


def test_self_check():
    g = qpe_static(3, pi_frac(3, 8))
    r = check_full(g, g)
    assert r.equivalent and r.max_deviation == 0.0


def test_perturbed_angle_detected():
    g, g2 = qpe_static(3, pi_frac(3, 8)), perturbed_qpe(1e-3)
    r = check_full(g, g2)
    assert r.verdict == "not_equivalent"
    assert r.max_deviation >= 1e-4  # eps times an amplitude of size ~1/2
    direct = np.abs(build_unitary(strip_measurements(g)) - build_unitary(strip_measurements(g2))).max()
    assert r.max_deviation == pytest.approx(direct, rel=1e-6)
    assert r.counterexample["columnDeviation"] == pytest.approx(r.max_deviation)


def test_arity_mismatch():
    with pytest.raises(EquivalenceError, match="arity mismatch"):
        check_full(qpe_static(3, pi_frac(3, 8)), qpe_static(4, pi_frac(3, 8)))


def test_phase_invariance(rng):
    for _ in range(10):
        g = random_dynamic_circuit(rng)
        g2 = random_dynamic_circuit(rng)
        for other in (g, g2):
            try:
                base = check_full(g, other).verdict
            except (EquivalenceError, ReconstructError):
                continue
            shifted = check_full(g, with_global_phase(other, rng.uniform(-3, 3))).verdict
            assert shifted == base


def test_symmetry(rng):
    for _ in range(20):
        g = random_circuit(rng, 2, 0, 6)
        g2 = random_circuit(rng, 2, 0, 6) if rng.random() < 0.5 else with_global_phase(g, 0.4)
        assert check_full(g, g2).verdict == check_full(g2, g).verdict


def test_full_implies_distribution(rng):
    for m in (2, 3):
        g, g2 = iqpe_dynamic(m, pi_frac(5, 8)), qpe_static(m, pi_frac(5, 8))
        assert check_full(g, g2).equivalent
        for s in rng.sample(range(2 ** (m + 1)), 4):
            # fresh wires start in |0>, so only the first two qubits carry the input
            if s < 4:
                assert check_distribution(g, g2, CheckConfig(input_state=s)).equivalent


def test_distribution_iqpe_vs_qpe():
    r = check_distribution(iqpe_dynamic(3, pi_frac(3, 8)), qpe_static(3, pi_frac(3, 8)),
                           CheckConfig(input_state=1))
    assert r.equivalent and r.max_deviation <= 1e-9


def test_distribution_self():
    g = bv_static("101")
    r = check_distribution(g, g)
    assert r.equivalent and r.max_deviation == 0.0


def test_distribution_bv_mismatch():
    r = check_distribution(bv_dynamic("101"), bv_static("100"))
    assert r.verdict == "not_equivalent"
    assert r.max_deviation == pytest.approx(1.0)
    assert r.counterexample["bitstring"] == "101"


def test_total_variation_metric(rng):
    def rand_dist():
        keys = rng.sample(["00", "01", "10", "11"], rng.randint(1, 4))
        w = [rng.random() for _ in keys]
        return {k: x / sum(w) for k, x in zip(keys, w)}
    for _ in range(20):
        p, q = rand_dist(), rand_dist()
        assert total_variation(p, q) >= 0
        assert total_variation(p, q) == pytest.approx(total_variation(q, p))
        assert total_variation(p, p) == 0


def test_permutation_supplied():
    # swap roles of the two qubits: cx(0,1) vs cx(1,0) become equal under the swap
    a = Builder(2, 0).cx(0, 1).build()
    b = Builder(2, 0).cx(1, 0).build()
    assert not check_full(a, b).equivalent
    assert check_full(a, b, CheckConfig(input_permutation=[1, 0])).equivalent
    with pytest.raises(EquivalenceError):
        check_full(a, b, CheckConfig(input_permutation=[0, 0]))


def test_permute_unitary_identity():
    u = build_unitary(Builder(2, 0).h(0).cx(0, 1).build())
    assert np.array_equal(permute_unitary(u, [0, 1], None), u)


def test_measurement_alignment():
    a = Builder(2, 2).measure(0, 1).measure(1, 0).build()
    b = Builder(2, 2).measure(0, 0).measure(1, 1).build()
    assert measurement_alignment(a, b) == [1, 0]
    a2 = Builder(2, 2).x(0).measure(0, 1).measure(1, 0).build()
    b2 = Builder(2, 2).x(1).measure(0, 0).measure(1, 1).build()
    assert check_full(a2, b2, CheckConfig(align="measurements")).equivalent
    assert not check_full(a2, b2).equivalent


def test_result_json():
    data = check_full(bv_dynamic("11"), bv_static("11")).to_json()
    assert data["verdict"] == "equivalent"
    assert set(data) >= {"mode", "maxDeviation", "globalPhase", "counterexample", "timings"}
