import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfsnet.errors import DimensionError, DomainError, ZeroStateError
from qfsnet.qudit import (
    apply_gate,
    basis_state,
    hadamard_qudit,
    hadamard_qutrit,
    is_unitary,
    make_qudit,
    measure_prob,
    pauli_x,
    pauli_z,
    phase_encode,
    realize,
    rotation_gate,
    unrealize,
)

PSI3 = (2 / np.sqrt(10), np.sqrt(3) / np.sqrt(10), np.sqrt(3) / np.sqrt(10))


def test_psi3_is_normalized():
    s = make_qudit(PSI3)
    assert s.dim == 3
    assert np.linalg.norm(s.amps) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("k, expected", [(0, 0.4), (1, 0.3), (2, 0.3)])
def test_psi3_probabilities(k, expected):
    assert measure_prob(make_qudit(PSI3), k) == pytest.approx(expected, abs=1e-12)


def test_make_qudit_normalizes_and_rejects_zero():
    s = make_qudit([1, 1, 1, 1])
    np.testing.assert_allclose(s.amps, 0.5, atol=1e-15)
    np.testing.assert_array_equal(make_qudit([1, 0, 0]).amps, [1, 0, 0])
    with pytest.raises(ZeroStateError):
        make_qudit([0, 0, 0])
    with pytest.raises(DimensionError):
        make_qudit([1])


def test_measure_prob_index_checks():
    assert measure_prob(basis_state(1, 5), 1) == 1.0
    with pytest.raises(IndexError):
        measure_prob(basis_state(0, 3), 3)


def test_pauli_actions():
    out = apply_gate(pauli_x(3), basis_state(2, 3))
    np.testing.assert_allclose(out.amps, [1, 0, 0], atol=1e-15)
    z = pauli_z(3) @ basis_state(1, 3).amps
    np.testing.assert_allclose(z, [0, np.exp(2j * np.pi / 3), 0], atol=1e-15)
    x = pauli_x(3)
    np.testing.assert_allclose(x @ x @ x, np.eye(3), atol=1e-12)
    with pytest.raises(DimensionError):
        pauli_z(1)


def test_hadamard_reductions():
    h2 = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    np.testing.assert_allclose(hadamard_qudit(2), h2, atol=1e-12)
    np.testing.assert_allclose(hadamard_qudit(3), hadamard_qutrit(), atol=1e-12)
    first = hadamard_qutrit() @ np.array([1, 0, 0])
    np.testing.assert_allclose(first, np.ones(3) / np.sqrt(3), atol=1e-15)
    col = make_qudit(hadamard_qutrit() @ np.array([0, 1, 0]))
    for k in range(3):
        assert measure_prob(col, k) == pytest.approx(1 / 3, abs=1e-12)


def test_rotation_gate_cases():
    np.testing.assert_allclose(rotation_gate(0.0), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(rotation_gate(np.pi) @ [1, 0, 0], [0, 0, 1], atol=1e-12)
    with pytest.raises(DomainError):
        rotation_gate(np.inf)


@pytest.mark.parametrize("D", range(2, 9))
def test_generated_gates_are_unitary(D):
    for g in (pauli_x(D), pauli_z(D), hadamard_qudit(D)):
        assert is_unitary(g)


@settings(max_examples=60, deadline=None)
@given(st.floats(-20, 20, allow_nan=False))
def test_rotation_unitary_for_any_angle(w):
    assert is_unitary(rotation_gate(w))


def test_realize_examples():
    np.testing.assert_allclose(realize(basis_state(0, 3)), [1, 0, 0, 0, 0, 0])
    s = make_qudit([1, 1j])
    np.testing.assert_allclose(realize(s), [np.sqrt(0.5), 0, 0, np.sqrt(0.5)], atol=1e-15)


amps = st.lists(
    st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=2, max_size=7
).filter(lambda v: sum(a * a + b * b for a, b in v) > 1e-6)


@settings(max_examples=100, deadline=None)
@given(amps)
def test_state_properties(v):
    s = make_qudit([complex(a, b) for a, b in v])
    assert sum(measure_prob(s, k) for k in range(s.dim)) == pytest.approx(1.0, abs=1e-9)
    r = realize(s)
    assert np.linalg.norm(r) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(unrealize(r).amps, s.amps, atol=1e-12)
    moved = apply_gate(hadamard_qudit(s.dim), s)
    assert np.sum(moved.probabilities()) == pytest.approx(1.0, abs=1e-9)


def test_phase_encode():
    assert phase_encode(0.0) == 0.0
    assert phase_encode(1.0) == pytest.approx(2 * np.pi / 3)
    assert phase_encode(0.0, apply_sigmoid=True) == pytest.approx(np.pi / 3)
    with pytest.raises(DomainError):
        phase_encode(1.5)
