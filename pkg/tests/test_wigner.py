import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wignerctx import _fock
from wignerctx.errors import CoverageError, DimensionError
from wignerctx.phase_space import displacement_map, random_symplectic, rotation
from wignerctx.states import (
    coherent,
    coherent_fock,
    make_cat,
    make_fock,
    squeezed_vacuum,
    squeezed_vacuum_fock,
    tensor,
    thermal,
    thermal_fock,
    two_mode_squeezed_vacuum,
    vacuum,
)
from wignerctx.wigner import (
    SQRT_2PI,
    GridSpec,
    characteristic_function,
    check_normalization,
    negativity_report,
    standard_grid,
    symplectic_covariance_check,
    wigner_fourier_oracle,
    wigner_grid,
    wigner_imaginary_residue,
    wigner_point,
    wigner_values,
)

VACUUM_PEAK = SQRT_2PI / math.pi


def fock_wigner_closed_form(n, q, p):
    """Laguerre form of the number-state Wigner function in this normalization."""
    from scipy.special import eval_laguerre

    r2 = q * q + p * p
    return VACUUM_PEAK * (-1) ** n * np.exp(-r2) * eval_laguerre(n, 2 * r2)


def test_vacuum_peak():
    assert wigner_point(vacuum(1), [0, 0]) == pytest.approx(VACUUM_PEAK, rel=1e-14)
    assert wigner_point(make_fock([0], 5), [0, 0]) == pytest.approx(VACUUM_PEAK, rel=1e-12)


def test_one_photon_origin():
    assert wigner_point(make_fock([1], 5), [0, 0]) == pytest.approx(-VACUUM_PEAK, rel=1e-12)


@pytest.mark.parametrize("n", [0, 1, 2, 5, 12])
def test_number_states_match_laguerre_form(n, rng):
    pts = rng.uniform(-3, 3, size=(40, 2))
    got = wigner_values(make_fock([n], 20), pts)
    np.testing.assert_allclose(got, fock_wigner_closed_form(n, pts[:, 0], pts[:, 1]), atol=1e-11)


def test_coherent_gaussian_and_fock_agree(rng):
    pts = rng.uniform(-4, 4, size=(50, 2))
    np.testing.assert_allclose(
        wigner_values(coherent(0.7, -1.1), pts), wigner_values(coherent_fock(0.7, -1.1, 40), pts), atol=1e-10
    )


def test_squeezed_gaussian_and_fock_agree(rng):
    pts = rng.uniform(-3, 3, size=(50, 2))
    np.testing.assert_allclose(
        wigner_values(squeezed_vacuum(0.5), pts), wigner_values(squeezed_vacuum_fock(0.5, 40), pts), atol=1e-7
    )


def test_thermal_gaussian_and_fock_agree(rng):
    pts = rng.uniform(-4, 4, size=(30, 4))
    a = wigner_values(thermal(1.0, 2), pts)
    b = wigner_values(tensor(thermal_fock(1.0, 40), thermal_fock(1.0, 40)), pts)
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_fock_wigner_is_real():
    s = make_cat(1.5, "odd", 30)
    assert wigner_imaginary_residue(s, np.random.default_rng(1).uniform(-3, 3, (40, 2))) < 1e-12


def test_characteristic_function_at_origin_is_one():
    for s in (vacuum(2), make_cat(1.0, "even", 20), coherent(1.0, 2.0)):
        assert characteristic_function(s, np.zeros(2 * s.modes)) == pytest.approx(1.0, abs=1e-12)


def test_characteristic_function_backbones_agree(rng):
    for x in rng.uniform(-2, 2, size=(10, 2)):
        assert characteristic_function(coherent(0.4, 0.9), x) == pytest.approx(
            characteristic_function(coherent_fock(0.4, 0.9, 40), x), abs=1e-10
        )


def test_normalization_self_test():
    assert check_normalization() < 1e-12


def test_grid_mass_and_marginal_vacuum():
    g = wigner_grid(vacuum(1), standard_grid(1))
    assert g.normalized_mass() == pytest.approx(1.0, abs=1e-9)
    q = g.spec.points(0)
    np.testing.assert_allclose(g.p_marginal(), np.exp(-q * q) / math.sqrt(math.pi), atol=1e-9)


def test_grid_axis_order_is_q_then_p():
    spec = GridSpec(((-5, 5, 21), (-5, 5, 21), (-5, 5, 11), (-5, 5, 11)))
    s = tensor(coherent_fock(1.0, 0.0, 40), coherent_fock(0.0, -2.0, 40))
    g = wigner_grid(s, spec)
    np.testing.assert_allclose(g.values, wigner_grid(tensor(coherent(1.0, 0.0), coherent(0.0, -2.0)), spec).values,
                               atol=1e-10)
    assert g.spec.shape == (21, 21, 11, 11)


def test_coverage_error():
    with pytest.raises(CoverageError) as info:
        wigner_grid(coherent(4.0, 0.0), GridSpec.uniform(-2, 2, 41, 1))
    assert info.value.captured_mass < 0.5


def test_grid_dimension_checked():
    with pytest.raises(DimensionError):
        wigner_grid(vacuum(2), standard_grid(1))


def test_grid_parse():
    spec = GridSpec.parse("-6:6:241", 1)
    assert spec.shape == (241, 241)
    spec = GridSpec.parse(["-1:1:3", "-2:2:5", "0:1:2", "-3:3:7"], 2)
    assert spec.shape == (3, 5, 2, 7)
    with pytest.raises(ValueError):
        GridSpec.parse("1:2", 1)
    with pytest.raises(DimensionError):
        GridSpec.parse(["-1:1:3"] * 3, 2)
    with pytest.raises(ValueError):
        GridSpec.parse("2:1:5", 1)


def test_negativity_report_gaussian_is_nonnegative():
    rep = negativity_report(wigner_grid(two_mode_squeezed_vacuum(0.5), standard_grid(2)))
    assert rep.nonnegative
    assert rep.negativity_volume == 0.0
    assert rep.total_mass == pytest.approx(1.0, abs=1e-3)


def test_one_photon_negativity_volume():
    rep = negativity_report(wigner_grid(make_fock([1], 10), standard_grid(1)))
    # analytic value 2 e^{-1/2} - 1 = 0.21306
    assert rep.negativity_volume == pytest.approx(2 / math.sqrt(math.e) - 1, abs=2e-4)
    assert rep.min_value == pytest.approx(-VACUUM_PEAK, rel=1e-12)
    np.testing.assert_allclose(rep.argmin, [0, 0])
    assert not rep.nonnegative


def test_fourier_oracle_matches_kernel():
    spec = GridSpec.uniform(-4, 4, 41, 1)
    for s in (make_cat(1.5, "even", 30), make_fock([2], 10), squeezed_vacuum(0.4)):
        a = wigner_grid(s, spec, check_coverage=False).values
        b = wigner_fourier_oracle(s, spec).values
        np.testing.assert_allclose(a, b, atol=1e-8)


def test_fourier_oracle_two_modes_coarse():
    spec = GridSpec.uniform(-2, 2, 5, 2)
    s = tensor(make_fock([1], 4), make_fock([0], 4))
    a = wigner_grid(s, spec, check_coverage=False).values
    b = wigner_fourier_oracle(s, spec, extent=10.0, step=0.25).values
    np.testing.assert_allclose(a, b, atol=1e-6)


@given(st.integers(0, 10_000))
def test_gaussian_symplectic_covariance(seed):
    S = displacement_map(np.random.default_rng(seed).normal(size=4)) @ random_symplectic(2, seed)
    pts = np.random.default_rng(seed + 1).normal(size=(20, 4))
    assert symplectic_covariance_check(two_mode_squeezed_vacuum(0.4), S, pts) < 1e-10


@given(st.floats(-math.pi, math.pi))
def test_fock_rotation_covariance(theta):
    pts = np.random.default_rng(0).uniform(-2, 2, size=(20, 2))
    assert symplectic_covariance_check(make_cat(1.0, "odd", 25), rotation(theta, 1, 1), pts) < 1e-9


def test_threads_do_not_change_values():
    s = tensor(make_fock([1], 6), thermal_fock(0.5, 20))
    spec = GridSpec.uniform(-5, 5, 13, 2)
    a = wigner_grid(s, spec, threads=1).values
    b = wigner_grid(s, spec, threads=4).values
    assert np.array_equal(a, b)


def test_vacuum_characteristic_modulus():
    assert abs(characteristic_function(vacuum(1), [1.0, 0.0])) == pytest.approx(math.exp(-0.25), abs=1e-12)


def test_two_mode_vacuum_coarse_mass():
    g = wigner_grid(vacuum(2), GridSpec.uniform(-6, 6, 41, 2))
    assert g.integral() / (2 * math.pi) == pytest.approx(1.0, abs=0.02)


def test_one_photon_rotation_invariance():
    pts = np.random.default_rng(7).uniform(-3, 3, size=(100, 2))
    assert symplectic_covariance_check(make_fock([1], 8), rotation(0.7, 1, 1), pts) < 1e-5
