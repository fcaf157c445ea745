import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from wignerctx import _fock
from wignerctx.errors import DimensionError, PhysicalityError, TruncationError, UnsupportedError
from wignerctx.phase_space import displacement_map, rotation, squeezing
from wignerctx.states import (
    CZ,
    Disp,
    FockDensityMatrix,
    GaussianState,
    Rot,
    apply_gate_fock,
    coherent,
    coherent_fock,
    cz_unitary,
    make_cat,
    make_fock,
    mean_photon_number,
    mix,
    reduce_modes,
    squeezed_vacuum,
    squeezed_vacuum_fock,
    tensor,
    thermal,
    thermal_fock,
    transform_state,
    two_mode_squeezed_vacuum,
    vacuum,
)


def expect(state, op):
    return np.trace(state.matrix @ op)


def test_vacuum_covariance_is_half_identity():
    np.testing.assert_array_equal(vacuum(2).cov, 0.5 * np.eye(4))


def test_uncertainty_violation_rejected():
    with pytest.raises(PhysicalityError):
        GaussianState([0, 0], np.diag([0.1, 0.1]))


def test_bad_shapes_rejected():
    with pytest.raises(DimensionError):
        GaussianState([0, 0], np.eye(4))
    with pytest.raises(DimensionError):
        FockDensityMatrix((3,), np.eye(2))


def test_density_matrix_checks():
    with pytest.raises(PhysicalityError):
        FockDensityMatrix((2,), np.eye(2))
    with pytest.raises(PhysicalityError):
        FockDensityMatrix((2,), np.array([[1.5, 0], [0, -0.5]]))
    with pytest.raises(PhysicalityError):
        FockDensityMatrix((2,), np.array([[0.5, 1.0], [0.0, 0.5]]))


def test_squeezed_covariance():
    r = 0.5
    np.testing.assert_allclose(squeezed_vacuum(r).cov, np.diag([math.exp(-2 * r), math.exp(2 * r)]) / 2)


def test_two_mode_squeezed_reduced_state_is_thermal():
    r = 1.0
    red = reduce_modes(two_mode_squeezed_vacuum(r), [2])
    np.testing.assert_allclose(red.cov, thermal(math.sinh(r) ** 2).cov, atol=1e-12)


def test_tensor_and_reduce_round_trip():
    a, b = coherent(1.0, -0.5), squeezed_vacuum(0.3)
    ab = tensor(a, b)
    assert ab.modes == 2
    back = reduce_modes(ab, [2])
    np.testing.assert_allclose(back.cov, b.cov)
    np.testing.assert_allclose(reduce_modes(ab, [1]).mean, a.mean)


def test_fock_tensor_and_partial_trace():
    a = make_cat(1.0, "odd", 20)
    b = make_fock([2], 4)
    ab = tensor(a, b)
    np.testing.assert_allclose(reduce_modes(ab, [1]).matrix, a.matrix, atol=1e-14)
    np.testing.assert_allclose(reduce_modes(ab, [2]).matrix, b.matrix, atol=1e-14)


def test_mixed_backbones_rejected():
    with pytest.raises(UnsupportedError):
        tensor(vacuum(1), make_fock([0], 3))


def test_occupation_above_cutoff_rejected():
    with pytest.raises(DimensionError):
        make_fock([3], 3)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("parity", ["even", "odd"])
def test_cat_photon_number(alpha, parity):
    sgn = 1 if parity == "even" else -1
    x = alpha**2
    expected = x * (1 - sgn * math.exp(-2 * x)) / (1 + sgn * math.exp(-2 * x))
    assert mean_photon_number(make_cat(alpha, parity, 40)) == pytest.approx(expected, rel=1e-10)


def test_cat_truncation_error():
    with pytest.raises(TruncationError) as info:
        make_cat(3.0, "even", 10)
    assert info.value.trace_loss > 1e-3


def test_thermal_fock_photon_number():
    assert mean_photon_number(thermal_fock(1.0, 40)) == pytest.approx(1.0, abs=1e-9)
    assert mean_photon_number(thermal(1.0, 2)) == pytest.approx(2.0)


def test_coherent_fock_moments():
    s = coherent_fock(0.8, -0.3, 30)
    assert expect(s, _fock.position_operator(30)).real == pytest.approx(0.8, abs=1e-10)
    assert expect(s, _fock.momentum_operator(30)).real == pytest.approx(-0.3, abs=1e-10)
    assert mean_photon_number(s) == pytest.approx((0.8**2 + 0.3**2) / 2, abs=1e-10)


def test_squeezed_fock_variance():
    r = 0.5
    s = squeezed_vacuum_fock(r, 40)
    X = _fock.position_operator(40)
    assert expect(s, X @ X).real == pytest.approx(math.exp(-2 * r) / 2, abs=1e-8)


def test_mix_weights_validated():
    with pytest.raises(ValueError):
        mix([make_fock([0], 3), make_fock([1], 3)], [0.5, 0.6])
    m = mix([make_fock([0], 3), make_fock([1], 3)], [0.25, 0.75])
    assert mean_photon_number(m) == pytest.approx(0.75)


def test_rotation_gate_phases_coherences():
    psi = np.array([1.0, 1.0]) / math.sqrt(2)
    s = FockDensityMatrix((2,), np.outer(psi, psi))
    out = apply_gate_fock(s, Rot(1, 0.3))
    assert out.matrix[1, 0] == pytest.approx(0.5 * np.exp(0.3j))


def test_displacement_gate_moves_mean():
    s = apply_gate_fock(make_fock([0], 30), Disp(1, 1.0, 0.5))
    assert expect(s, _fock.position_operator(30)).real == pytest.approx(1.0, abs=1e-9)
    assert expect(s, _fock.momentum_operator(30)).real == pytest.approx(0.5, abs=1e-9)


def test_cz_unitary_is_unitary():
    U = cz_unitary(0.7, 6, 5)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(30), atol=1e-12)


def test_cz_gate_matches_padded_exponential():
    c, big = 8, 40
    X = _fock.position_operator(big)
    U = expm(1j * 0.4 * np.kron(X, X)).reshape(big, big, big, big)[:c, :c, :c, :c].reshape(c * c, c * c)
    s = tensor(make_fock([1], c), make_fock([0], c))
    out = apply_gate_fock(s, CZ(1, 2, 0.4))
    ref = U @ s.matrix @ U.conj().T
    np.testing.assert_allclose(out.matrix, ref / np.trace(ref).real, atol=1e-10)


def test_cz_gate_truncation_detected():
    with pytest.raises(TruncationError):
        apply_gate_fock(tensor(make_fock([3], 6), make_fock([3], 6)), CZ(1, 2, 2.0))


def test_cz_moves_momentum():
    c = 24
    s = tensor(coherent_fock(0.6, 0.0, c), make_fock([0], c))
    out = apply_gate_fock(s, CZ(1, 2, 0.5))
    P2 = np.kron(np.eye(c), _fock.momentum_operator(c))
    assert expect(out, P2).real == pytest.approx(0.5 * 0.6, abs=1e-8)


@given(st.floats(-3, 3), st.floats(-1, 1), st.floats(-1, 1))
def test_gaussian_transform_inverts_map(theta, dq, dp):
    S = displacement_map([dq, dp]) @ rotation(theta, 1, 1) @ squeezing(0.2, 1, 1)
    s = coherent(0.3, -0.2)
    moved = transform_state(s, S)
    np.testing.assert_allclose(S(moved.mean), s.mean, atol=1e-12)


def test_fock_transform_rejects_squeezing():
    with pytest.raises(UnsupportedError):
        transform_state(make_fock([1], 5), squeezing(0.3, 1, 1))


def test_cz_unitary_at_cutoff_twelve():
    U = cz_unitary(1.0, 12, 12)
    assert np.max(np.abs(U.conj().T @ U - np.eye(144))) < 1e-6
