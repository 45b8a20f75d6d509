import numpy as np
import pytest
from scipy.linalg import expm

from fdqme.liouville import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_Z,
    HilbertOperator,
    VectorizedOperator,
    commutator_superop,
    devectorize,
    frame_transform,
    hs_inner,
    left_multiplier,
    lindblad_dissipator,
    qubit_state,
    right_multiplier,
    squeeze_dissipator,
    trace_dual,
    vectorize,
)

RNG = np.random.default_rng(20240817)


def random_matrix(n):
    return RNG.normal(size=(n, n)) + 1j * RNG.normal(size=(n, n))


def random_hermitian(n):
    m = random_matrix(n)
    return 0.5 * (m + m.conj().T)


def test_vectorize_identity():
    v = vectorize(np.eye(2, dtype=complex))
    assert np.array_equal(v.vec, np.array([1, 0, 0, 1], dtype=complex))


def test_vectorize_lowering_operator_order():
    # sigma_minus = |g><e| lands on the (g,e) slot of (gg, ge, eg, ee)
    v = vectorize(SIGMA_MINUS)
    assert np.array_equal(v.vec, np.array([0, 1, 0, 0], dtype=complex))


@pytest.mark.parametrize("n", [2, 3, 5])
def test_vectorize_round_trip_exact(n):
    a = random_matrix(n)
    assert np.array_equal(devectorize(vectorize(a)).entries, a)


def test_vectorize_linear():
    a, b = random_matrix(3), random_matrix(3)
    lhs = vectorize(2.5 * a - 1j * b).vec
    rhs = 2.5 * vectorize(a).vec - 1j * vectorize(b).vec
    assert np.allclose(lhs, rhs, atol=0, rtol=0)


def test_hs_inner_values():
    assert hs_inner(np.eye(2), np.eye(2)) == pytest.approx(2.0)
    assert hs_inner(SIGMA_MINUS, SIGMA_PLUS) == pytest.approx(0.0)
    assert hs_inner(SIGMA_MINUS, SIGMA_MINUS) == pytest.approx(1.0)


def test_hs_inner_conjugate_symmetry_and_vector_form():
    a, b = random_matrix(4), random_matrix(4)
    ab = hs_inner(a, b)
    assert ab == pytest.approx(np.conj(hs_inner(b, a)), abs=1e-12)
    # agrees with the dual-vector contraction <<a|b>>
    assert ab == pytest.approx(np.vdot(vectorize(a).vec, vectorize(b).vec), abs=1e-12)


def test_hs_inner_dim_mismatch():
    with pytest.raises(ValueError, match="mismatch"):
        hs_inner(np.eye(2), np.eye(3))


def test_commutator_superop_free_qubit():
    l0 = commutator_superop(-(1.0 / 2.0) * SIGMA_Z)
    assert np.allclose(l0.mat, np.diag([0, 1j, -1j, 0]), atol=1e-15)


def test_commutator_superop_trivial_generators():
    assert np.allclose(commutator_superop(np.zeros((2, 2))).mat, 0)
    assert np.allclose(commutator_superop(np.eye(3)).mat, 0)


def test_commutator_superop_antihermitian_spectrum():
    h = random_hermitian(4)
    eigs = np.linalg.eigvals(commutator_superop(h).mat)
    assert np.abs(eigs.real).max() < 1e-10


def test_commutator_superop_rejects_nonhermitian():
    with pytest.raises(ValueError, match="Hermitian"):
        commutator_superop(random_matrix(2))


def test_lindblad_dissipator_decay():
    d = lindblad_dissipator(SIGMA_MINUS)
    out = devectorize(d.mat @ vectorize(qubit_state("e")).vec).entries
    expected = 2.0 * qubit_state("g") - 2.0 * qubit_state("e")
    assert np.allclose(out, expected, atol=1e-14)


def test_lindblad_dissipator_dark_state_and_zero():
    d = lindblad_dissipator(SIGMA_MINUS)
    assert np.allclose(d.mat @ vectorize(qubit_state("g")).vec, 0, atol=1e-14)
    assert np.allclose(lindblad_dissipator(np.zeros((3, 3))).mat, 0)


def test_lindblad_dissipator_trace_preserving():
    for n in (2, 3):
        o = random_matrix(n)
        left = trace_dual(n) @ lindblad_dissipator(o).mat
        assert np.abs(left).max() < 1e-12


def test_squeeze_dissipator_structure():
    s = squeeze_dissipator(SIGMA_MINUS)
    # sigma_minus^2 = 0, so only the coherence-swapping block survives
    expected = np.zeros((4, 4), dtype=complex)
    expected[1, 2] = 2.0
    assert np.allclose(s.mat, expected, atol=1e-14)
    # diagonal states are untouched
    assert np.allclose(s.mat @ vectorize(qubit_state("e")).vec, 0, atol=1e-14)


def test_squeeze_dissipator_trivial_cases():
    assert np.allclose(squeeze_dissipator(np.zeros((2, 2))).mat, 0)
    assert np.allclose(squeeze_dissipator(np.eye(2)).mat, 0)


def test_squeeze_dissipator_traceless_action():
    o = random_matrix(3)
    left = trace_dual(3) @ squeeze_dissipator(o).mat
    assert np.abs(left).max() < 1e-12


def test_lindblad_form_liouvillian_annihilates_trace():
    h = random_hermitian(3)
    lv = commutator_superop(h).mat
    for rate in (0.3, 1.7):
        lv = lv + rate * lindblad_dissipator(random_matrix(3)).mat
    assert np.abs(trace_dual(3) @ lv).max() < 1e-10
    # and it has a (right) eigenvalue at zero
    assert np.abs(np.linalg.eigvals(lv)).min() < 1e-9


def test_frame_transform_identities():
    l0 = commutator_superop(-(0.7 / 2.0) * SIGMA_Z)
    l = lindblad_dissipator(SIGMA_MINUS)
    assert np.allclose(frame_transform(l, l0, 0.0).mat, l.mat, atol=1e-14)
    # anything commuting with l0 is left alone
    lz = commutator_superop(SIGMA_Z)
    assert np.allclose(frame_transform(lz, l0, 2.3).mat, lz.mat, atol=1e-12)


def test_frame_transform_short_time_expansion():
    # first order in t: l + t [l, -l0], checked on the exchange coupling of
    # a qubit to a three-level mode
    from fdqme.liouville import annihilation

    a = annihilation(3)
    eye_c = np.eye(3, dtype=complex)
    h0 = np.kron(-(0.9 / 2) * SIGMA_Z, eye_c) + np.kron(np.eye(2, dtype=complex), 1.4 * a.conj().T @ a)
    v = 0.3 * (np.kron(SIGMA_PLUS, a) + np.kron(SIGMA_MINUS, a.conj().T))
    l0 = commutator_superop(h0)
    lv = commutator_superop(v)
    t = 1e-5
    moved = frame_transform(lv, l0, t).mat
    first_order = lv.mat + t * (lv.mat @ l0.mat - l0.mat @ lv.mat)
    assert np.abs(moved - first_order).max() < 10 * t**2 * np.abs(l0.mat).max() ** 2 * np.abs(lv.mat).max()


def test_superoperator_composition_is_matrix_product():
    # (A . B)(C . C) = AC . CB on random operators
    a, b, c, x = (random_matrix(3) for _ in range(4))
    lhs_mat = (left_multiplier(a) @ right_multiplier(b)) @ (left_multiplier(c) @ right_multiplier(c))
    lhs = devectorize(lhs_mat @ vectorize(x).vec).entries
    rhs = (a @ c) @ x @ (c @ b)
    assert np.abs(lhs - rhs).max() < 1e-12


def test_hermitian_flag_validation():
    with pytest.raises(ValueError, match="hermitian"):
        HilbertOperator(random_matrix(2), hermitian=True)
    HilbertOperator(random_hermitian(3), hermitian=True)


def test_vectorized_operator_validation():
    with pytest.raises(ValueError, match="perfect square"):
        VectorizedOperator(np.zeros(5))


def test_left_right_multipliers():
    a, x = random_matrix(3), random_matrix(3)
    assert np.allclose(devectorize(left_multiplier(a) @ vectorize(x).vec).entries, a @ x)
    assert np.allclose(devectorize(right_multiplier(a) @ vectorize(x).vec).entries, x @ a)


def test_frame_transform_matches_expm_conjugation():
    l0 = commutator_superop(random_hermitian(2)).mat
    l = lindblad_dissipator(random_matrix(2)).mat
    t = 0.37
    expected = expm(-l0 * t) @ l @ expm(l0 * t)
    assert np.allclose(frame_transform(l, l0, t).mat, expected, atol=1e-12)
