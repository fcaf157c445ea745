"""Noncontextual hidden-variable models built from nonnegative Wigner functions.

The hidden variable is a phase-space point ``y`` drawn from the normalized
Wigner density ``W(y) / (2 pi)^{M/2}``; it answers every quadrature ``x`` with
``y . x``. Because the answers are linear in ``x``, they are consistent across
all contexts at once, and the marginal of ``y . x`` is the Wigner marginal that
gives the Born-rule statistics.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import _parallel
from .errors import CoverageError, NegativeWignerError
from .measurement import (
    BinnedPdf,
    EmpiricalContextModel,
    GridJoint,
    QuadratureLabel,
    as_context,
    as_label,
    context_distribution,
    default_edges,
    joint_tv,
    quadrature_pdf,
)
from .phase_space import LagrangianSubspace, phase_point
from .states import GaussianState, StateHandle
from .wigner import GridSpec, NegativityReport, WignerGrid, negativity_report, standard_grid, wigner_grid

SAMPLE_BLOCK = 16384
SCOPE_FULL = "full"
SCOPE_SINGLE_MODE = "negativity-criterion-only"


# -- densities -------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GaussianDensity:
    mean: np.ndarray
    cov: np.ndarray

    @property
    def dim(self) -> int:
        return self.mean.size

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        lam, vec = np.linalg.eigh(self.cov)
        root = vec * np.sqrt(np.clip(lam, 0.0, None))
        return self.mean + rng.standard_normal((count, self.dim)) @ root.T


def _cell_masses(values: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Trapezoid-consistent cell masses: corner average times cell volume, negatives clipped."""
    cells = np.zeros(tuple(n - 1 for n in values.shape))
    D = values.ndim
    for corner in range(2**D):
        sl = tuple(slice(1, None) if (corner >> a) & 1 else slice(None, -1) for a in range(D))
        cells += values[sl]
    cells /= 2**D
    for a in range(D):
        h = np.diff(spec.points(a))
        shape = [1] * D
        shape[a] = h.size
        cells = cells * h.reshape(shape)
    return np.maximum(cells, 0.0)


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Piecewise-constant density on the cells of a Wigner grid.

    Sampling is sequential: pick the cell index along axis 0 from its marginal,
    then along axis 1 conditioned on the first choice, and so on, each by
    inverse CDF; the point is then uniform within the chosen cell.
    """

    grid: WignerGrid
    masses: np.ndarray = field(init=False)
    tables: tuple = field(init=False, repr=False)

    def __post_init__(self):
        m = _cell_masses(self.grid.values, self.grid.spec)
        m = m / m.sum()
        object.__setattr__(self, "masses", m)
        tables = []
        D = m.ndim
        for k in range(D):
            marg = m.sum(axis=tuple(range(k + 1, D))) if k + 1 < D else m
            flat = marg.reshape(-1, marg.shape[-1])
            cdf = np.cumsum(flat, axis=1)
            tot = cdf[:, -1:]
            with np.errstate(invalid="ignore", divide="ignore"):
                cdf = np.where(tot > 0, cdf / tot, 1.0)
            cdf[:, -1] = 1.0
            # row-offset trick: searching row r for u is searching this flat table for u + r
            tables.append((cdf + np.arange(cdf.shape[0])[:, None]).reshape(-1))
        object.__setattr__(self, "tables", tuple(tables))

    @property
    def dim(self) -> int:
        return self.masses.ndim

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        spec = self.grid.spec
        u = rng.random((count, self.dim))
        jitter = rng.random((count, self.dim))
        prefix = np.zeros(count, dtype=np.int64)
        out = np.empty((count, self.dim))
        for k, shifted in enumerate(self.tables):
            n = self.masses.shape[k]
            pos = np.searchsorted(shifted, u[:, k] + prefix, side="right")
            idx = np.minimum(pos - prefix * n, n - 1)
            pts = spec.points(k)
            out[:, k] = pts[idx] + jitter[:, k] * (pts[idx + 1] - pts[idx])
            prefix = prefix * n + idx
        return out


@dataclass(frozen=True, eq=False)
class HiddenVariableModel:
    """Hidden-variable space R^{2M} with a probability density and linear answers."""

    sampler: Union[GaussianDensity, GridDensity]
    modes: int

    @property
    def scope(self) -> str:
        return SCOPE_SINGLE_MODE if self.modes == 1 else SCOPE_FULL

    def sample_points(self, seed: int, count: int, threads: int | None = None) -> np.ndarray:
        """``count`` i.i.d. hidden variables, shape ``(count, 2M)``.

        Draws happen in fixed blocks, each with its own child of
        ``SeedSequence(seed)``, so the output depends on ``seed`` and ``count``
        only, not on the number of worker threads.
        """
        if count < 0:
            raise ValueError("count must be nonnegative")
        blocks = [(s, min(SAMPLE_BLOCK, count - s)) for s in range(0, count, SAMPLE_BLOCK)]
        if not blocks:
            return np.zeros((0, 2 * self.modes))
        children = np.random.SeedSequence(seed).spawn(len(blocks))

        def draw(i):
            return self.sampler.sample(np.random.default_rng(children[i]), blocks[i][1])

        with _parallel.executor(threads) as pool:
            idx = range(len(blocks))
            parts = list(pool.map(draw, idx)) if pool is not None else [draw(i) for i in idx]
        return np.concatenate(parts, axis=0)


# -- assignments -----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LinearAssignment:
    """Global value assignment ``x -> y . x`` for a fixed hidden variable ``y``."""

    point: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", phase_point(self.point))

    def __call__(self, x) -> float:
        x = x.vector if isinstance(x, QuadratureLabel) else np.asarray(x, dtype=float)
        return float(self.point @ x)


class AssignmentBatch(Sequence):
    """Array-backed sequence of :class:`LinearAssignment` values."""

    def __init__(self, points: np.ndarray):
        self.points = np.asarray(points, dtype=float)
        self.points.setflags(write=False)

    def __len__(self):
        return self.points.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return AssignmentBatch(self.points[i])
        return LinearAssignment(self.points[i])

    def evaluate(self, x) -> np.ndarray:
        """Answers of every assignment to the label(s) ``x`` (vector or rows of a matrix)."""
        x = x.vector if isinstance(x, QuadratureLabel) else np.asarray(x, dtype=float)
        return self.points @ np.asarray(x).T


def sample_assignment(hvm: HiddenVariableModel, seed: int, count: int,
                      threads: int | None = None) -> AssignmentBatch:
    return AssignmentBatch(hvm.sample_points(seed, count, threads))


# -- verdicts --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Noncontextual:
    certificate: HiddenVariableModel
    report: NegativityReport
    spec: GridSpec
    scope: str = SCOPE_FULL

    verdict = "noncontextual"


@dataclass(frozen=True, eq=False)
class Contextual:
    witness: NegativityReport
    spec: GridSpec
    scope: str = SCOPE_FULL

    verdict = "contextual"


Verdict = Union[Noncontextual, Contextual]


def _model_from_grid(state: StateHandle, grid: WignerGrid) -> HiddenVariableModel:
    if isinstance(state, GaussianState):
        return HiddenVariableModel(GaussianDensity(state.mean, state.cov), state.modes)
    return HiddenVariableModel(GridDensity(grid), state.modes)


def verdict(state: StateHandle, spec: GridSpec | None = None, tol: float | None = None,
            threads: int | None = None) -> Verdict:
    """Noncontextual (with a model) iff the grid minimum of W is at least ``-tol``.

    ``tol`` defaults to ``1e-6 * max|W|`` on the grid. Single-mode inputs are
    tagged ``"negativity-criterion-only"``.
    """
    spec = spec or standard_grid(state.modes)
    grid = wigner_grid(state, spec, threads=threads)
    report = negativity_report(grid)
    tol = report.tolerance if tol is None else tol
    scope = SCOPE_SINGLE_MODE if state.modes == 1 else SCOPE_FULL
    if report.min_value >= -tol:
        return Noncontextual(_model_from_grid(state, grid), report, spec, scope)
    return Contextual(report, spec, scope)


def build_hvm(state: StateHandle, spec: GridSpec | None = None, threads: int | None = None) -> HiddenVariableModel:
    """Deterministic noncontextual model for a state with nonnegative Wigner function.

    Gaussian states get their exact moment Gaussian; Fock states get the grid
    density. Raises :class:`NegativeWignerError` carrying the negativity report
    when the Wigner function dips below tolerance.
    """
    if isinstance(state, GaussianState):
        return HiddenVariableModel(GaussianDensity(state.mean, state.cov), state.modes)
    spec = spec or standard_grid(state.modes)
    grid = wigner_grid(state, spec, threads=threads)
    report = negativity_report(grid)
    if not report.nonnegative:
        raise NegativeWignerError(report)
    return HiddenVariableModel(GridDensity(grid), state.modes)


def empirical_from_hvm(hvm: HiddenVariableModel, target, edges, seed: int, count: int,
                       threads: int | None = None) -> Union[BinnedPdf, EmpiricalContextModel]:
    """Histogram of the model's answers to a label, or joint histogram over a context."""
    pts = hvm.sample_points(seed, count, threads)
    if isinstance(target, LagrangianSubspace):
        B = target.basis
        if edges is None or np.ndim(edges[0]) == 0:
            edges = [edges] * B.shape[0]
        edges = [np.asarray(e, dtype=float) for e in edges]
        vals = pts @ B.T
        if count == 0:
            masses = np.zeros(tuple(e.size - 1 for e in edges))
        else:
            counts, _ = np.histogramdd(vals, bins=edges)
            masses = counts / count
        return EmpiricalContextModel(target, GridJoint(tuple(edges), masses))
    x = as_label(target)
    return BinnedPdf.histogram(pts @ x.vector, edges)


def context_edges(state: StateHandle, L: LagrangianSubspace) -> list[np.ndarray]:
    """Coarse per-row edges at ``mean + sd * (-4.5, -1.5, -0.75, 0, 0.75, 1.5, 4.5)``.

    Few cells keep the sampling noise of a joint TV estimate well below 0.02 at
    1e5 samples.
    """
    base = np.array([-4.5, -1.5, -0.75, 0.0, 0.75, 1.5, 4.5])
    out = []
    for row in L.basis:
        pdf = _covering_pdf(state, QuadratureLabel(row), None)
        c = pdf.centers
        mu = pdf.mean()
        sd = float(np.sqrt(((c - mu) ** 2) @ pdf.masses / pdf.total))
        out.append(mu + sd * base)
    return out


def _covering_pdf(state: StateHandle, x: QuadratureLabel, edges) -> BinnedPdf:
    """:func:`quadrature_pdf`, doubling the default range until the bins cover the outcome."""
    if edges is not None:
        return quadrature_pdf(state, x, edges)
    e = default_edges()
    for _ in range(3):
        try:
            return quadrature_pdf(state, x, e)
        except CoverageError:
            e = 2.0 * e
    return quadrature_pdf(state, x, e)


def round_trip(state: StateHandle, hvm: HiddenVariableModel, labels=(), contexts=(),
               seed: int = 0, count: int = 100_000, edges=None, threads: int | None = None) -> dict:
    """Compare the model's answers with the measurement statistics of ``state``.

    Returns ``{"labels": [(label, ks)], "contexts": [(context, tv)]}``: KS
    distances between sampled answers and :func:`quadrature_pdf`, and joint TV
    distances against :func:`context_distribution` on :func:`context_edges`.
    """
    pts = hvm.sample_points(seed, count, threads)
    result = {"labels": [], "contexts": []}
    for x in labels:
        x = as_label(x)
        pdf = _covering_pdf(state, x, edges)
        result["labels"].append((x, pdf.ks(pts @ x.vector)))
    for L in contexts:
        L = as_context(L)
        e = context_edges(state, L)
        model = context_distribution(state, L, e)
        counts, _ = np.histogramdd(pts @ L.basis.T, bins=e)
        result["contexts"].append((L, joint_tv(model.joint_masses(e), counts / count)))
    return result
