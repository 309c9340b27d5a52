import random

import pytest

from dyneq.benchgen import (
    BenchSpec, bv_dynamic, bv_static, iqpe_dynamic, qft_dynamic, qft_static, qpe_static,
    random_circuit, random_dynamic_circuit,
)
from dyneq.circuit import (
    ClassicControlled, count_measurements, count_resets, pi_frac, structurally_equal, validate,
)
from dyneq.equivalence import CheckConfig, check_distribution, check_full
from dyneq.extract import extract
from dyneq.reconstruct import reconstruct_unitary
from dyneq.statevec import outcome_distribution_static


def test_qpe_static_shape():
    g = qpe_static(3, pi_frac(3, 8))
    assert g.num_qubits == 4 and count_measurements(g) == 3
    assert validate(g) == []


def test_qpe_prepared_eigenstate():
    g = qpe_static(3, pi_frac(3, 8), prepare_eigenstate=True)
    assert outcome_distribution_static(g, 0).entries == pytest.approx(
        outcome_distribution_static(qpe_static(3, pi_frac(3, 8)), 1).entries)


def test_qpe_zero_phase():
    assert outcome_distribution_static(qpe_static(1, 0.0), 1).entries == pytest.approx({"0": 1.0})


def test_qpe_exact_phase():
    d = outcome_distribution_static(qpe_static(3, pi_frac(1, 4)), 1)
    assert d.entries == pytest.approx({"001": 1.0}, abs=1e-12)


def test_iqpe_corrections():
    g = iqpe_dynamic(3, pi_frac(3, 8))
    conds = [(op.clbit, op.inner.gate.params[0]) for op in g.ops if isinstance(op, ClassicControlled)]
    assert conds == [(0, pi_frac(-1, 2)), (0, pi_frac(-1, 4)), (1, pi_frac(-1, 2))]


@pytest.mark.parametrize("m", range(1, 7))
def test_iqpe_counts(m):
    g = iqpe_dynamic(m, pi_frac(3, 8))
    assert (count_resets(g), count_measurements(g)) == (m - 1, m)


def test_iqpe_exact_four_bits():
    d = extract(iqpe_dynamic(4, pi_frac(5, 8)), 1)
    assert d.entries == pytest.approx({"0101": 1.0}, abs=1e-12)


def test_bv_static_point_mass():
    assert outcome_distribution_static(bv_static("101"), 0).entries == pytest.approx({"101": 1.0})


@pytest.mark.parametrize("secret", ["1", "0", "10", "0110", "110101001"])
def test_bv_dynamic_two_qubits(secret):
    g = bv_dynamic(secret)
    assert g.num_qubits == 2
    assert extract(g, 0).entries == pytest.approx({secret: 1.0})


@pytest.mark.parametrize("n", range(1, 10))
def test_bv_full_check(n):
    rng = random.Random(n)
    s = "".join(rng.choice("01") for _ in range(n))
    assert check_full(bv_dynamic(s), bv_static(s)).equivalent


def test_qft_static_one():
    g = qft_static(1)
    assert [type(op).__name__ for op in g.ops] == ["Unitary", "Measure"]
    assert g.ops[0].gate.name == "h"


@pytest.mark.parametrize("n", range(1, 11))
def test_qft_distribution_check(n):
    assert check_distribution(qft_dynamic(n), qft_static(n)).equivalent


@pytest.mark.parametrize("n", range(1, 6))
def test_qft_full_check(n):
    assert check_full(qft_dynamic(n), qft_static(n)).equivalent


def test_qpe_theta_grid():
    for m in range(1, 9):
        for k in range(16):
            theta = pi_frac(k, 8)
            r = check_distribution(iqpe_dynamic(m, theta), qpe_static(m, theta), CheckConfig(input_state=1))
            assert r.max_deviation <= 1e-9


@pytest.mark.parametrize("m", range(1, 9))
def test_qubit_count_law(m):
    r, _ = reconstruct_unitary(iqpe_dynamic(m, pi_frac(3, 8)))
    assert r.num_qubits == m + 1 == qpe_static(m, pi_frac(3, 8)).num_qubits


def test_bv_single_live_path():
    d = extract(bv_dynamic("10110"), 0)
    assert d.stats["branches_simulated"] == 5
    assert d.pruned_mass <= 1e-12  # zero up to rounding in 1 - p0


def test_bench_spec_deterministic():
    spec = BenchSpec("qpe", "dynamic", 4, pi_frac(3, 8))
    assert structurally_equal(spec.build(), spec.build())
    assert structurally_equal(BenchSpec("bv", "static", 3, secret="101").build(), bv_static("101"))


@pytest.mark.parametrize("kwargs", [
    dict(family="ghz", variant="static", size=2),
    dict(family="bv", variant="static", size=0),
    dict(family="bv", variant="static", size=3, secret="10"),
    dict(family="qpe", variant="static", size=3, theta=7.0),
])
def test_bench_spec_invariants(kwargs):
    with pytest.raises(ValueError):
        BenchSpec(**kwargs)


def test_random_generators_valid(rng):
    for _ in range(50):
        assert validate(random_circuit(rng, rng.randint(1, 4), rng.randint(0, 3), 20)) == []
        g = random_dynamic_circuit(rng)
        reconstruct_unitary(g)  # always deferrable
        assert count_measurements(g) >= 1
