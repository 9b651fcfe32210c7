import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghz_teleport import statevec as sv
from ghz_teleport.bases import bell_basis, make_ghz, x_basis
from ghz_teleport.protocol import PAULI, conversion_unitary

S2 = 1 / math.sqrt(2)


def test_make_ket_basis_state():
    k = sv.make_ket([1, 0])
    assert k.num_qubits == 1
    np.testing.assert_array_equal(k.amplitudes, [1, 0])


def test_make_ket_normalizes():
    k = sv.make_ket([1, 1])
    np.testing.assert_allclose(k.amplitudes, [S2, S2], atol=1e-15)


def test_make_ket_keeps_normalized_amplitudes():
    k = sv.make_ket([0.6, 0.8j])
    np.testing.assert_allclose(k.amplitudes, [0.6, 0.8j], atol=1e-15)
    assert abs(np.linalg.norm(k.amplitudes) - 1) < 1e-12


@pytest.mark.parametrize("bad", [[0, 0], [1, 0, 0], [1], [np.nan, 1], [np.inf, 0]])
def test_make_ket_rejects(bad):
    with pytest.raises(ValueError):
        sv.make_ket(bad)


def test_ket_rejects_unnormalized():
    with pytest.raises(ValueError):
        sv.Ket(np.array([1.0, 1.0]))


def test_ket_is_immutable():
    k = sv.make_ket([1, 0])
    with pytest.raises(ValueError):
        k.amplitudes[0] = 0


def test_tensor_basis_states():
    out = sv.tensor(sv.basis_ket(0, 1), sv.basis_ket(1, 1))
    np.testing.assert_array_equal(out.amplitudes, [0, 1, 0, 0])


def test_tensor_uniform():
    plus = sv.make_ket([1, 1])
    np.testing.assert_allclose(sv.tensor(plus, plus).amplitudes, [0.5] * 4, atol=1e-15)


def test_tensor_joint_state_layout():
    alpha, beta, n = 0.6, 0.8j, 0.5 - 1.5j
    N = 1 / math.sqrt(1 + abs(n) ** 2)
    joint = sv.tensor(sv.make_ket([alpha, beta]), make_ghz(n, 3))
    expected = np.zeros(16, dtype=complex)
    # |A1 A2 C B>: alpha|0000> + alpha n|0111> + beta|1000> + beta n|1111>
    expected[0b0000] = alpha * N
    expected[0b0111] = alpha * n * N
    expected[0b1000] = beta * N
    expected[0b1111] = beta * n * N
    np.testing.assert_allclose(joint.amplitudes, expected, atol=1e-15)


def test_apply_x_on_first_qubit():
    out = sv.apply_unitary(sv.basis_ket(0, 2), PAULI["X"], [0])
    np.testing.assert_array_equal(out.amplitudes, [0, 0, 1, 0])


def test_apply_z_on_second_qubit():
    out = sv.apply_unitary(sv.make_ket([1, 1, 0, 0]), PAULI["Z"], [1])
    np.testing.assert_allclose(out.amplitudes, [S2, -S2, 0, 0], atol=1e-15)


def test_conversion_unitary_on_excited_receiver():
    # row 3 of the conversion matrix at |c/d| = 1/2
    out = sv.apply_unitary(sv.basis_ket(2, 2), conversion_unitary(1.0, 2.0), [0, 1])
    np.testing.assert_allclose(out.amplitudes, [0, 0, 0.5, -math.sqrt(3) / 2], atol=1e-15)


def test_apply_unitary_respects_target_order():
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    # control qubit 2, target qubit 0 of |001>
    out = sv.apply_unitary(sv.basis_ket(0b001, 3), cnot, [2, 0])
    np.testing.assert_array_equal(out.amplitudes, sv.basis_ket(0b101, 3).amplitudes)


@pytest.mark.parametrize(
    "u, targets",
    [(np.eye(4), [0]), (np.eye(2), [0, 0]), (np.eye(2), [3]), (np.array([[1, 1], [0, 1]]), [0])],
)
def test_apply_unitary_rejects(u, targets):
    with pytest.raises(ValueError):
        sv.apply_unitary(sv.basis_ket(0, 2), u, targets)


def test_measure_eigenstate(rng):
    k, p, rest = sv.measure_in_basis(sv.basis_ket(0, 1), sv.computational_basis(1), [0], rng)
    assert (k, p, rest) == (0, 1.0, None)


def test_measure_plus_in_hadamard_basis(rng):
    k, p, _ = sv.measure_in_basis(sv.make_ket([1, 1]), x_basis(1), [0], rng)
    assert k == 0
    assert p == pytest.approx(1.0, abs=1e-15)


def test_measure_removes_qubits(rng):
    k, p, rest = sv.measure_in_basis(sv.make_ket([0, 1, 0, 0]), sv.computational_basis(1), [0], rng)
    assert k == 0 and p == pytest.approx(1.0)
    np.testing.assert_allclose(rest.amplitudes, [0, 1])


def test_measure_never_samples_zero_probability():
    state = sv.make_ket([0, 1])
    basis = sv.computational_basis(1)
    for u in [0.0, 0.5, 1 - 1e-16]:
        assert sv.sample_index(sv.outcome_probabilities(state, basis, [0]), u) == 1


def test_sample_index_degenerate():
    with pytest.raises(sv.DegenerateStateError):
        sv.sample_index(np.zeros(2), 0.3)


def test_bell_outcome_probability_in_joint_state():
    alpha, beta, n, m = 0.6, 0.8j, 1.7 * np.exp(0.4j), 0.3 - 0.9j
    N2, M2 = 1 / (1 + abs(n) ** 2), 1 / (1 + abs(m) ** 2)
    joint = sv.tensor(sv.make_ket([alpha, beta]), make_ghz(n, 3))
    probs = sv.outcome_probabilities(joint, bell_basis(m), [0, 1])
    expected = N2 * M2 * np.array(
        [
            abs(alpha) ** 2 + abs(m * n * beta) ** 2,
            abs(m * alpha) ** 2 + abs(n * beta) ** 2,
            abs(n * alpha) ** 2 + abs(m * beta) ** 2,
            abs(m * n * alpha) ** 2 + abs(beta) ** 2,
        ]
    )
    np.testing.assert_allclose(probs, expected, atol=1e-15)


def test_measurement_frequencies_follow_born_rule():
    rng = np.random.default_rng(7)
    state = sv.make_ket([0.6, 0.8])
    counts = np.bincount(
        [sv.measure_in_basis(state, sv.computational_basis(1), [0], rng)[0] for _ in range(20000)], minlength=2
    )
    # binomial sigma ~ 0.0035
    assert abs(counts[0] / 20000 - 0.36) < 0.015


def test_fidelity_examples():
    zero, one = sv.basis_ket(0, 1), sv.basis_ket(1, 1)
    assert sv.fidelity(zero, zero) == 1.0
    assert sv.fidelity(zero, one) == 0.0
    with pytest.raises(ValueError):
        sv.fidelity(zero, sv.basis_ket(0, 2))


def test_random_unitary_is_unitary(rng):
    u = sv.random_unitary(8, rng).entries
    assert np.max(np.abs(u.conj().T @ u - np.eye(8))) < 1e-12


def test_unitary_norm_preserved_1000(rng):
    worst = 0.0
    for _ in range(1000):
        out = sv.apply_unitary(sv.random_ket(3, rng), sv.random_unitary(4, rng), list(rng.permutation(3)[:2]))
        worst = max(worst, abs(np.linalg.norm(out.amplitudes) - 1))
    assert worst < 1e-12


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_probabilities_sum_to_one(seed):
    rng = np.random.default_rng(seed)
    state = sv.random_ket(4, rng)
    basis = sv.OrthonormalBasis(tuple(sv.Ket(r) for r in sv.random_unitary(4, rng).entries))
    assert abs(sv.outcome_probabilities(state, basis, [3, 1]).sum() - 1) < 1e-10


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_product_state_factorizes(seed):
    rng = np.random.default_rng(seed)
    a, b = sv.random_ket(2, rng), sv.random_ket(1, rng)
    basis = x_basis(complex(*rng.normal(size=2)))
    joint = sv.outcome_probabilities(sv.tensor(a, b), basis, [2])
    alone = sv.outcome_probabilities(b, basis, [0])
    np.testing.assert_allclose(joint, alone, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(seeds, st.floats(min_value=0, max_value=2 * math.pi))
def test_fidelity_symmetric_and_phase_invariant(seed, theta):
    rng = np.random.default_rng(seed)
    a, b = sv.random_ket(2, rng), sv.random_ket(2, rng)
    assert abs(sv.fidelity(a, b) - sv.fidelity(b, a)) <= 1e-15
    assert abs(sv.fidelity(a, sv.Ket(np.exp(1j * theta) * a.amplitudes)) - 1) <= 1e-15
    assert 0.0 <= sv.fidelity(a, b) <= 1.0
