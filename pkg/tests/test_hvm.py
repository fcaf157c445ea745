import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wignerctx.errors import CoverageError, NegativeWignerError
from wignerctx.hvm import (
    AssignmentBatch,
    Contextual,
    GridDensity,
    LinearAssignment,
    Noncontextual,
    build_hvm,
    empirical_from_hvm,
    round_trip,
    sample_assignment,
    verdict,
)
from wignerctx.measurement import quadrature_pdf
from wignerctx.phase_space import LagrangianSubspace
from wignerctx.states import coherent_fock, make_cat, make_fock, tensor, thermal_fock, two_mode_squeezed_vacuum, vacuum
from wignerctx.wigner import GridSpec, wigner_grid


@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4),
       st.lists(st.floats(-3, 3), min_size=4, max_size=4),
       st.floats(-2, 2))
def test_assignment_is_linear(y, x1, c):
    a = LinearAssignment(y)
    x1 = np.array(x1)
    x2 = np.array([1.0, -1.0, 0.5, 2.0])
    assert a(c * x1 + x2) == pytest.approx(c * a(x1) + a(x2), abs=1e-9)


def test_assignment_batch_is_a_sequence():
    batch = AssignmentBatch(np.arange(12.0).reshape(3, 4))
    assert len(batch) == 3
    assert batch[1]([1, 0, 0, 0]) == 4.0
    np.testing.assert_array_equal(batch.evaluate([0, 1, 0, 0]), [1, 5, 9])
    assert len(batch[:2]) == 2


def test_gaussian_model_moments():
    s = two_mode_squeezed_vacuum(0.8)
    pts = build_hvm(s).sample_points(1, 200_000)
    np.testing.assert_allclose(np.cov(pts.T), s.cov, atol=0.03)


def test_samples_independent_of_threads():
    model = build_hvm(thermal_fock(0.5, 20), GridSpec.uniform(-6, 6, 61, 1))
    a = model.sample_points(42, 40_000, threads=1)
    b = model.sample_points(42, 40_000, threads=4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, model.sample_points(43, 40_000, threads=1))


def test_samples_prefix_stable():
    model = build_hvm(vacuum(1))
    a = model.sample_points(7, 20_000)
    b = model.sample_points(7, 40_000)
    np.testing.assert_array_equal(a[:16384], b[:16384])


def test_zero_samples():
    assert build_hvm(vacuum(2)).sample_points(0, 0).shape == (0, 4)


def test_grid_density_reproduces_marginals():
    s = tensor(thermal_fock(0.3, 20), coherent_fock(0.5, 0.0, 20))
    spec = GridSpec.uniform(-6, 6, 41, 2)
    model = build_hvm(s, spec)
    assert isinstance(model.sampler, GridDensity)
    pts = model.sample_points(3, 100_000)
    for x in ([1, 0, 0, 0], [0, 0.5, 0, 0.5]):
        pdf = quadrature_pdf(s, x)
        assert pdf.ks(pts @ np.array(x, dtype=float)) < 0.015


def test_grid_density_samples_stay_in_grid():
    spec = GridSpec.uniform(-3, 3, 21, 1)
    model = build_hvm(make_fock([0], 5), spec)
    pts = model.sample_points(9, 10_000)
    assert pts.min() >= -3 and pts.max() <= 3


def test_negative_state_raises():
    with pytest.raises(NegativeWignerError) as info:
        build_hvm(make_fock([1], 5))
    assert info.value.report.min_value < 0


def test_verdicts_and_scopes():
    v = verdict(vacuum(2))
    assert isinstance(v, Noncontextual) and v.scope == "full"
    v = verdict(make_cat(1.0, "odd", 20))
    assert isinstance(v, Contextual) and v.scope == "negativity-criterion-only"
    assert v.verdict == "contextual"


def test_tolerance_override():
    s = make_fock([1], 5)
    assert isinstance(verdict(s, tol=10.0), Noncontextual)


def test_empirical_label_and_context():
    model = build_hvm(vacuum(2))
    e = np.linspace(-4, 4, 17)
    pdf = empirical_from_hvm(model, [1, 0, 0, 0], e, seed=5, count=50_000)
    assert pdf.tv(quadrature_pdf(vacuum(2), [1, 0, 0, 0], e)) < 0.02
    joint = empirical_from_hvm(model, LagrangianSubspace.positions(2), e, seed=5, count=50_000)
    np.testing.assert_allclose(joint.representation.masses.sum(axis=1), pdf.masses, atol=1e-12)


def test_round_trip_gaussian():
    s = two_mode_squeezed_vacuum(0.5)
    res = round_trip(s, build_hvm(s), labels=[[1, 1, 0, 0]], contexts=[LagrangianSubspace.positions(2)],
                     seed=2, count=50_000)
    assert res["labels"][0][1] < 0.015
    assert res["contexts"][0][1] < 0.03


def test_sample_assignment_wraps_points():
    model = build_hvm(vacuum(1))
    batch = sample_assignment(model, 0, 10)
    np.testing.assert_array_equal(batch.points, model.sample_points(0, 10))


def test_grid_hvm_needs_covering_grid():
    with pytest.raises(CoverageError):
        build_hvm(make_fock([0], 4), GridSpec.uniform(-1, 1, 11, 1))


def test_grid_model_density_matches_wigner():
    spec = GridSpec.uniform(-5, 5, 51, 1)
    grid = wigner_grid(thermal_fock(0.2, 15), spec)
    dens = GridDensity(grid)
    assert dens.masses.sum() == pytest.approx(1.0, abs=1e-12)
