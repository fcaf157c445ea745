"""Quadrature measurements: outcome distributions of single labels and of contexts.

Two independent routes are provided for every supported (state, label) pair:

* :func:`quadrature_pdf` integrates the Wigner function over the hyperplanes
  ``{y : y . x = t}``. The label is first rotated onto a coordinate axis with an
  orthogonal symplectic map (Jacobian 1) and the Wigner function of the rotated
  state is marginalized numerically.
* :func:`born_quadrature_pdf_oracle` uses the Born rule directly: Gaussian
  moments pushed forward to a normal law, or position wavefunctions of number
  states for the Fock backbone.

The Fock backbone supports labels with at most two active modes.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import ndtr

from . import _fock
from .errors import CoverageError, DimensionError, UnsupportedError
from .phase_space import LagrangianSubspace, SymplecticMap, phase_point, rotation_to_axis
from .states import FockDensityMatrix, GaussianState, StateHandle, reduce_modes, transform_state
from .wigner import SQRT_2PI, wigner_values

DEFAULT_EDGES = np.linspace(-8.0, 8.0, 202)
MIN_CAPTURED_MASS = 0.999
GL_NODES = 8
# composite quadrature: widest panel (in units of the outcome's natural scale)
PANEL_WIDTH = 0.25
# Hermite functions below cutoff 40 are negligible beyond this
ORACLE_SUPPORT = 13.0

# p-marginal table of the Wigner kernel: q grid and p quadrature
TABLE_Q = np.linspace(-12.0, 12.0, 601)
TABLE_P = np.linspace(-13.0, 13.0, 131)


def default_edges() -> np.ndarray:
    return DEFAULT_EDGES.copy()


# -- labels and binned distributions -------------------------------------------------


def format_quadrature(vector) -> str:
    """Human-readable form such as ``q1 + 2*p1 + 5*q2`` (round-trips through the parser)."""
    x = phase_point(vector)
    M = x.size // 2
    terms = []
    for k in range(M):
        for kind, c in (("q", x[k]), ("p", x[M + k])):
            if c != 0.0:
                terms.append((c, f"{kind}{k + 1}"))
    if not terms:
        return "0"
    out = []
    for i, (c, name) in enumerate(terms):
        mag = abs(c)
        body = name if mag == 1.0 else f"{mag:.17g}*{name}"
        if i == 0:
            out.append(("-" if c < 0 else "") + body)
        else:
            out.append(("- " if c < 0 else "+ ") + body)
    return " ".join(out)


@dataclass(frozen=True, eq=False)
class QuadratureLabel:
    """A nonzero phase-space vector ``x`` naming the observable ``sum x_qk q_k + x_pk p_k``."""

    vector: np.ndarray

    def __post_init__(self):
        x = phase_point(self.vector)
        if not np.any(x):
            raise ValueError("a quadrature label must be nonzero")
        x.setflags(write=False)
        object.__setattr__(self, "vector", x)

    @property
    def modes(self) -> int:
        return self.vector.size // 2

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    def __str__(self):
        return format_quadrature(self.vector)


def as_label(x) -> QuadratureLabel:
    return x if isinstance(x, QuadratureLabel) else QuadratureLabel(x)


def _edges(edges) -> np.ndarray:
    e = DEFAULT_EDGES if edges is None else np.asarray(edges, dtype=float).reshape(-1)
    if e.size < 2 or not np.all(np.diff(e) > 0) or not np.all(np.isfinite(e)):
        raise ValueError("bin edges must be finite and strictly increasing")
    return e


@dataclass(frozen=True, eq=False)
class BinnedPdf:
    """Probabilities of the half-open bins ``[edges[i], edges[i+1])``."""

    edges: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        e = _edges(self.edges)
        m = np.asarray(self.masses, dtype=float).reshape(-1)
        if m.size != e.size - 1:
            raise DimensionError(f"{e.size} edges need {e.size - 1} masses, got {m.size}")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise ValueError("bin masses must be finite and nonnegative")
        if m.sum() > 1.0 + 1e-9:
            raise ValueError(f"bin masses sum to {m.sum():.12g} > 1")
        e = e.copy()
        e.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "masses", m)

    @classmethod
    def from_raw(cls, edges, masses) -> "BinnedPdf":
        """Clip quadrature round-off (tiny negatives, sums a hair above 1) before validating."""
        m = np.maximum(np.asarray(masses, dtype=float), 0.0)
        total = m.sum()
        if 1.0 < total <= 1.0 + 1e-6:
            m = m / total
        return cls(edges, m)

    @classmethod
    def histogram(cls, samples, edges) -> "BinnedPdf":
        """Empirical masses of ``samples``; an empty sample gives all-zero masses."""
        e = _edges(edges)
        s = np.asarray(samples, dtype=float).reshape(-1)
        if s.size == 0:
            return cls(e, np.zeros(e.size - 1))
        counts, _ = np.histogram(s, bins=e)
        return cls(e, counts / s.size)

    @property
    def total(self) -> float:
        return float(self.masses.sum())

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    def density(self) -> np.ndarray:
        return self.masses / self.widths

    def mean(self) -> float:
        return float(self.centers @ self.masses / self.total)

    def cdf(self, t) -> np.ndarray:
        """Piecewise-linear CDF (uniform within each bin; 0 below the first edge)."""
        knots = np.concatenate([[0.0], np.cumsum(self.masses)])
        return np.interp(t, self.edges, knots, left=0.0, right=knots[-1])

    def tv(self, other: "BinnedPdf") -> float:
        """Total-variation distance; mass outside the edges counts as one extra bin."""
        if self.edges.shape != other.edges.shape or np.max(np.abs(self.edges - other.edges)) > 1e-12:
            raise ValueError("total variation needs identical bin edges")
        inside = np.sum(np.abs(self.masses - other.masses))
        outside = abs((1.0 - self.total) - (1.0 - other.total))
        return 0.5 * float(inside + outside)

    def ks(self, samples) -> float:
        """Kolmogorov-Smirnov distance between ``samples`` and :meth:`cdf`."""
        s = np.sort(np.asarray(samples, dtype=float).reshape(-1))
        n = s.size
        if n == 0:
            raise ValueError("KS distance needs at least one sample")
        F = self.cdf(s)
        i = np.arange(n)
        return float(max(np.max((i + 1) / n - F), np.max(F - i / n)))

    def scaled(self, c: float) -> "BinnedPdf":
        """Pushforward under ``t -> c t`` (``c != 0``)."""
        if c == 0:
            raise ValueError("scale factor must be nonzero")
        if c > 0:
            return BinnedPdf(self.edges * c, self.masses)
        return BinnedPdf(self.edges[::-1] * c, self.masses[::-1])


def _check_capture(pdf: BinnedPdf, what: str) -> BinnedPdf:
    if pdf.total < MIN_CAPTURED_MASS:
        raise CoverageError(
            f"{what}: bins capture only {pdf.total:.6f} of the probability; widen the edges",
            captured_mass=pdf.total,
        )
    return pdf


def _gl_nodes(edges: np.ndarray, n: int = GL_NODES):
    """Gauss-Legendre nodes and weights for every bin: arrays of shape ``(bins, n)``."""
    x, w = np.polynomial.legendre.leggauss(n)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    return lo + half * (x[None, :] + 1.0), half * w[None, :]


def _panels(edges: np.ndarray, support: tuple, width: float):
    """Split bins into panels no wider than ``width`` inside ``support``.

    Returns ``(panel_edges, starts)``; per-bin sums of per-panel values are
    ``np.add.reduceat(values, starts)``. The density is taken to vanish outside
    ``support``, so bins are clipped to it before splitting.
    """
    clipped = np.clip(edges, support[0], support[1])
    counts = np.maximum(1, np.ceil(np.diff(clipped) / width).astype(int))
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    if np.all(counts == 1):
        return clipped, starts
    pieces = [np.linspace(a, b, k + 1)[:-1] for a, b, k in zip(clipped[:-1], clipped[1:], counts)]
    return np.concatenate(pieces + [clipped[-1:]]), starts


def _composite_masses(edges: np.ndarray, density, support: tuple, width: float, n: int = GL_NODES):
    """Bin integrals of ``density`` (vectorized over node arrays) by composite Gauss-Legendre."""
    fine, starts = _panels(edges, support, width)
    nodes, weights = _gl_nodes(fine, n)
    return np.add.reduceat(np.sum(density(nodes) * weights, axis=1), starts)


# -- Wigner-route helpers ----------------------------------------------------------------

_table_lock = threading.Lock()
_table_cache: dict = {}


def _p_marginal_table(cutoff: int) -> np.ndarray:
    """``H[m, n](q) = (2 pi)^{-1/2} int K[m, n](q, p) dp`` on ``TABLE_Q``.

    ``K`` is the displaced-parity Wigner kernel, so the marginal density of a
    single-mode state is ``Re sum rho[m, n] H[m, n](q)``. The p integral is a
    plain trapezoid sum over ``TABLE_P``. Tables are cached; a table for a
    larger cutoff serves smaller ones.
    """
    with _table_lock:
        for c, H in _table_cache.items():
            if c >= cutoff:
                return H[:cutoff, :cutoff]
        Q, P = np.meshgrid(TABLE_Q, TABLE_P, indexing="ij")
        q, p = Q.reshape(-1), P.reshape(-1)
        rows = TABLE_P.size
        per_chunk = max(1, _fock.POINT_CHUNK // rows) * rows
        wp = np.full(rows, TABLE_P[1] - TABLE_P[0])
        wp[[0, -1]] *= 0.5
        parts = []
        for s in range(0, q.size, per_chunk):
            K = _fock.wigner_kernel(q[s : s + per_chunk], p[s : s + per_chunk], cutoff)
            K = K.reshape(cutoff, cutoff, -1, rows)
            parts.append(K @ wp)
        H = np.concatenate(parts, axis=2) / SQRT_2PI
        _table_cache.clear()
        _table_cache[cutoff] = H
        return H


def _active_modes(x: np.ndarray) -> list[int]:
    M = x.size // 2
    return [k for k in range(M) if x[k] != 0.0 or x[M + k] != 0.0]


def _align_fock(state: FockDensityMatrix, x: np.ndarray):
    """Reduce to the active modes of ``x`` and rotate each so it reads a position quadrature.

    Returns ``(sigma, radii)`` with ``x . y`` distributed as ``sum r_k u_k`` where
    ``u`` are the positions of ``sigma``.
    """
    M = x.size // 2
    active = _active_modes(x)
    if len(active) > 2:
        raise UnsupportedError("Fock-backbone quadratures support at most two active modes")
    sub = reduce_modes(state, [k + 1 for k in active])
    m = len(active)
    S = np.eye(2 * m)
    radii = []
    for i, k in enumerate(active):
        a, b = x[k], x[M + k]
        r = math.hypot(a, b)
        c, s = a / r, b / r
        S[i, i], S[i, m + i], S[m + i, i], S[m + i, m + i] = c, -s, s, c
        radii.append(r)
    sigma = transform_state(sub, SymplecticMap(S, check=False))
    return sigma, np.array(radii)


def _fock_position_marginal(sigma: FockDensityMatrix) -> np.ndarray:
    """Joint position density of ``sigma`` on ``TABLE_Q`` (1 or 2 modes) from the Wigner table."""
    cuts = sigma.cutoffs
    Hs = [_p_marginal_table(c) for c in cuts]
    if len(cuts) == 1:
        f = np.einsum("mn,mnq->q", sigma.matrix, Hs[0])
    else:
        t = _fock.as_tensor(sigma.matrix, cuts)
        f = np.einsum("abcd,acq,bdr->qr", t, Hs[0], Hs[1], optimize=True)
    return f.real


def _spline_bin_masses(q: np.ndarray, f: np.ndarray, edges: np.ndarray) -> np.ndarray:
    spl = CubicSpline(q, f)
    return _composite_masses(edges, spl, (q[0], q[-1]), PANEL_WIDTH)


def _line_bin_masses(q: np.ndarray, f: np.ndarray, r1: float, r2: float, edges: np.ndarray) -> np.ndarray:
    """Masses of ``r1 u1 + r2 u2`` over bins for a density tabulated on ``q x q``."""
    if r2 < 0:
        f, r2 = f[:, ::-1], -r2
        q2 = -q[::-1]
    else:
        q2 = q
    h = q2[1] - q2[0]
    # cumulative integral along u2 (trapezoid)
    F = np.concatenate([np.zeros((f.shape[0], 1)), np.cumsum(0.5 * h * (f[:, 1:] + f[:, :-1]), axis=1)], axis=1)
    u2 = (edges[None, :] - r1 * q[:, None]) / r2  # (n_u1, n_edges)
    pos = np.clip((u2 - q2[0]) / h, 0.0, q2.size - 1.0)
    i0 = np.minimum(pos.astype(int), q2.size - 2)
    frac = pos - i0
    rows = np.arange(q.size)[:, None]
    Fe = F[rows, i0] * (1.0 - frac) + F[rows, i0 + 1] * frac
    cdf_edges = np.trapezoid(Fe, q, axis=0)
    return np.diff(cdf_edges)


def _gaussian_line_marginal(state: GaussianState, x: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Wigner route for Gaussian states.

    M = 1: the rotated Wigner function is integrated numerically across the
    orthogonal axis. M >= 2: the marginal of the rotated Gaussian along the
    first axis is read off its rotated moments.
    """
    nrm = float(np.linalg.norm(x))
    S = rotation_to_axis(x)
    sigma = transform_state(state, S)
    M = state.modes
    if M >= 2:
        mu, var = sigma.mean[0], sigma.cov[0, 0]
        z = (edges / nrm - mu) / math.sqrt(var)
        return np.diff(ndtr(z))
    mu, sd = sigma.mean, np.sqrt(np.diagonal(sigma.cov))
    u2 = np.linspace(mu[1] - 12 * sd[1], mu[1] + 12 * sd[1], 801)

    def density(nodes):
        pts = np.stack(np.broadcast_arrays(nodes[..., None], u2), axis=-1)
        return np.trapezoid(wigner_values(sigma, pts), u2, axis=-1) / SQRT_2PI

    support = (mu[0] - 12 * sd[0], mu[0] + 12 * sd[0])
    return _composite_masses(edges / nrm, density, support, PANEL_WIDTH * sd[0])


def quadrature_pdf(state: StateHandle, x, edges=None) -> BinnedPdf:
    """Outcome distribution of the quadrature ``x`` by marginalizing the Wigner function.

    Bin masses are ``(2 pi)^{-M/2} int_{y . x in bin} W(y) dy``. Raises
    :class:`CoverageError` when the bins hold less than 0.999 of the mass.
    """
    label = as_label(x)
    e = _edges(edges)
    xv = label.vector
    if xv.size != 2 * state.modes:
        raise DimensionError(f"label has {label.modes} modes, state has {state.modes}")
    if isinstance(state, GaussianState):
        masses = _gaussian_line_marginal(state, xv, e)
    else:
        sigma, radii = _align_fock(state, xv)
        f = _fock_position_marginal(sigma)
        if radii.size == 1:
            masses = _spline_bin_masses(TABLE_Q, f, e / radii[0])
        else:
            masses = _line_bin_masses(TABLE_Q, f, radii[0], radii[1], e)
    return _check_capture(BinnedPdf.from_raw(e, masses), "quadrature_pdf")


# -- Born-rule oracle ------------------------------------------------------------------


def _rotated_amplitudes(t: np.ndarray, cutoff: int, phi: float) -> np.ndarray:
    """``<n| t_phi>``-type factors ``exp(i phi n) psi_n(t)``, shape ``(cutoff, len(t))``."""
    return np.exp(1j * phi * np.arange(cutoff))[:, None] * _fock.hermite_functions(t, cutoff)


def born_quadrature_pdf_oracle(state: StateHandle, x, edges=None) -> BinnedPdf:
    """Outcome distribution of ``x`` from the Born rule, without Wigner functions.

    Gaussian: ``N(x . mean, x^T cov x)``. Fock: the eigenbasis of the rotated
    quadrature ``cos(phi) q + sin(phi) p`` has amplitudes ``exp(i phi n) psi_n(t)``
    in the number basis; one or two active modes are supported.
    """
    label = as_label(x)
    e = _edges(edges)
    xv = label.vector
    if xv.size != 2 * state.modes:
        raise DimensionError(f"label has {label.modes} modes, state has {state.modes}")
    if isinstance(state, GaussianState):
        z = (e - xv @ state.mean) / math.sqrt(xv @ state.cov @ xv)
        return _check_capture(BinnedPdf.from_raw(e, np.diff(ndtr(z))), "born oracle")
    M = state.modes
    active = _active_modes(xv)
    if len(active) > 2:
        raise UnsupportedError("the Born oracle supports at most two active modes on the Fock backbone")
    sub = reduce_modes(state, [k + 1 for k in active])
    rs = [math.hypot(xv[k], xv[M + k]) for k in active]
    phis = [math.atan2(xv[M + k], xv[k]) for k in active]
    cuts = sub.cutoffs
    if len(active) == 1:

        def density(nodes):
            A = _rotated_amplitudes(nodes.reshape(-1), cuts[0], phis[0])
            return np.einsum("mt,mn,nt->t", A.conj(), sub.matrix, A).real.reshape(nodes.shape)

        masses = _composite_masses(e / rs[0], density, (-ORACLE_SUPPORT, ORACLE_SUPPORT), PANEL_WIDTH)
    else:
        # integrate over t1 on a fine grid; t2 = (u - r1 t1) / r2 at Gauss-Legendre nodes in u
        t1 = np.linspace(-12.0, 12.0, 481)
        support = ORACLE_SUPPORT * (rs[0] + rs[1])
        fine, starts = _panels(e, (-support, support), PANEL_WIDTH * min(rs))
        nodes, weights = _gl_nodes(fine)
        A1 = _rotated_amplitudes(t1, cuts[0], phis[0])
        t = _fock.as_tensor(sub.matrix, cuts)
        # B[b, d, i] = sum_ac conj(A1[a,i]) t[a,b,c,d] A1[c,i]
        B = np.einsum("ai,abcd,ci->bdi", A1.conj(), t, A1, optimize=True)
        masses = np.zeros(fine.size - 1)
        for i in range(t1.size):
            t2 = (nodes.reshape(-1) - rs[0] * t1[i]) / rs[1]
            A2 = _rotated_amplitudes(t2, cuts[1], phis[1])
            d = np.einsum("bt,bd,dt->t", A2.conj(), B[:, :, i], A2).real / rs[1]
            row = np.sum(d.reshape(nodes.shape) * weights, axis=1)
            w1 = (t1[1] - t1[0]) * (0.5 if i in (0, t1.size - 1) else 1.0)
            masses += w1 * row
        masses = np.add.reduceat(masses, starts)
    return _check_capture(BinnedPdf.from_raw(e, masses), "born oracle")


# -- contexts -------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GaussianJoint:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise DimensionError("joint covariance shape mismatch")
        if np.max(np.abs(cov - cov.T)) > 1e-10 * max(1.0, float(np.max(np.abs(cov)))):
            raise ValueError("joint covariance is not symmetric")
        if np.linalg.eigvalsh(0.5 * (cov + cov.T))[0] < -1e-10:
            raise ValueError("joint covariance is not positive semidefinite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", 0.5 * (cov + cov.T))


@dataclass(frozen=True, eq=False)
class GridJoint:
    edges: tuple
    masses: np.ndarray

    def __post_init__(self):
        edges = tuple(_edges(e) for e in self.edges)
        m = np.asarray(self.masses, dtype=float)
        if m.shape != tuple(e.size - 1 for e in edges):
            raise DimensionError("joint masses do not match the bin edges")
        if np.any(m < 0) or m.sum() > 1.0 + 1e-9:
            raise ValueError("joint masses must be nonnegative with total <= 1")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "masses", m)


@dataclass(frozen=True, eq=False)
class EmpiricalContextModel:
    """Joint law of the basis quadratures of ``context`` (one outcome per basis row)."""

    context: LagrangianSubspace
    representation: Union[GaussianJoint, GridJoint]

    @property
    def modes(self) -> int:
        return self.context.modes

    def joint_masses(self, edges: Sequence) -> np.ndarray:
        """Probabilities of the product bins given by ``edges`` (one edge array per basis row)."""
        edges = [_edges(e) for e in edges]
        rep = self.representation
        if isinstance(rep, GridJoint):
            if len(edges) != len(rep.edges) or any(
                a.shape != b.shape or np.max(np.abs(a - b)) > 1e-12 for a, b in zip(edges, rep.edges)
            ):
                raise ValueError("grid joint is only available on its own edges")
            return rep.masses
        return gaussian_box_masses(rep.mean, rep.cov, edges)

    def marginal(self, row: int, edges=None) -> BinnedPdf:
        """Distribution of the ``row``-th basis quadrature."""
        rep = self.representation
        if isinstance(rep, GridJoint):
            axes = tuple(a for a in range(rep.masses.ndim) if a != row)
            return BinnedPdf.from_raw(rep.edges[row], rep.masses.sum(axis=axes))
        e = _edges(edges)
        z = (e - rep.mean[row]) / math.sqrt(rep.cov[row, row])
        return BinnedPdf.from_raw(e, np.diff(ndtr(z)))


def gaussian_box_masses(mean, cov, edges: Sequence[np.ndarray]) -> np.ndarray:
    """Probabilities of product bins under ``N(mean, cov)`` for one or two dimensions.

    Two dimensions integrate the first coordinate with Gauss-Legendre nodes per
    bin and use the exact conditional normal law for the second.
    """
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    if mean.size == 1:
        return np.diff(ndtr((edges[0] - mean[0]) / math.sqrt(cov[0, 0])))
    if mean.size != 2:
        raise UnsupportedError("Gaussian box probabilities are implemented for 1 or 2 dimensions")
    s1 = math.sqrt(cov[0, 0])
    fine, starts = _panels(edges[0], (mean[0] - 12 * s1, mean[0] + 12 * s1), PANEL_WIDTH * s1)
    nodes, weights = _gl_nodes(fine, 24)
    dens1 = np.exp(-0.5 * ((nodes - mean[0]) / s1) ** 2) / (s1 * math.sqrt(2 * math.pi))
    beta = cov[0, 1] / cov[0, 0]
    s2 = math.sqrt(max(cov[1, 1] - beta * cov[0, 1], 0.0))
    cond_mean = mean[1] + beta * (nodes - mean[0])
    if s2 == 0.0:
        cdf = (edges[1][None, None, :] >= cond_mean[..., None]).astype(float)
    else:
        cdf = ndtr((edges[1][None, None, :] - cond_mean[..., None]) / s2)
    inner = np.diff(cdf, axis=-1)  # (panels, nodes, bins2)
    return np.add.reduceat(np.einsum("an,anb->ab", dens1 * weights, inner), starts, axis=0)


def joint_tv(a: np.ndarray, b: np.ndarray) -> float:
    """Total variation between two joint histograms (outside mass as one extra cell)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("histogram shapes differ")
    return 0.5 * float(np.sum(np.abs(a - b)) + abs(a.sum() - b.sum()))


def as_context(L) -> LagrangianSubspace:
    return L if isinstance(L, LagrangianSubspace) else LagrangianSubspace(np.atleast_2d(L))


def context_distribution(state: StateHandle, L, edges=None) -> EmpiricalContextModel:
    """Joint law of the M commuting basis quadratures of the Lagrangian ``L``.

    Gaussian: exact moment pushforward. Fock: the Wigner function is
    marginalized over the momenta of the per-mode rotated frames; this needs
    every basis row to live on a single mode and M <= 2. ``edges`` is a single
    edge array (broadcast) or one per basis row; it is ignored for Gaussian
    states.
    """
    L = as_context(L)
    if L.modes != state.modes:
        raise DimensionError(f"context has {L.modes} modes, state has {state.modes}")
    B = L.basis
    if isinstance(state, GaussianState):
        return EmpiricalContextModel(L, GaussianJoint(B @ state.mean, B @ state.cov @ B.T))
    M = state.modes
    if M > 2:
        raise UnsupportedError("Fock-backbone contexts are implemented for M <= 2")
    if edges is None or np.ndim(edges[0]) == 0:
        edges = [edges] * M
    edges = [_edges(e) for e in edges]
    if len(edges) != M:
        raise DimensionError(f"need {M} edge arrays")
    modes_of_row = []
    for row in B:
        act = _active_modes(row)
        if len(act) != 1:
            raise UnsupportedError("Fock-backbone contexts need every basis row on a single mode")
        modes_of_row.append(act[0])
    # rotate each mode so its basis row reads a position quadrature
    S = np.eye(2 * M)
    radii = np.zeros(M)
    for i, k in enumerate(modes_of_row):
        a, b = B[i, k], B[i, M + k]
        r = math.hypot(a, b)
        c, s = a / r, b / r
        S[k, k], S[k, M + k], S[M + k, k], S[M + k, M + k] = c, -s, s, c
        radii[i] = r
    sigma = transform_state(state, SymplecticMap(S, check=False))
    if M == 1:
        f = _fock_position_marginal(sigma)
        masses = _spline_bin_masses(TABLE_Q, f, edges[0] / radii[0])
    else:
        # per-mode bin integrals of the kernel marginals, then contract with rho
        cuts = sigma.cutoffs
        A = [None, None]  # indexed by mode
        for i, k in enumerate(modes_of_row):
            H = _p_marginal_table(cuts[k])
            fine, starts = _panels(edges[i] / radii[i], (TABLE_Q[0], TABLE_Q[-1]), PANEL_WIDTH)
            nodes, weights = _gl_nodes(fine)
            vals = CubicSpline(TABLE_Q, H, axis=2)(nodes)
            A[k] = np.add.reduceat(np.sum(vals * weights, axis=-1), starts, axis=-1)  # (c, c, bins of row i)
        t = _fock.as_tensor(sigma.matrix, cuts)
        joint = np.einsum("abcd,acx,bdy->xy", t, A[0], A[1], optimize=True).real
        # axis order follows the basis rows
        masses = joint if modes_of_row[0] == 0 else joint.T
    masses = np.maximum(masses, 0.0)
    if masses.sum() > 1.0:
        masses = masses / masses.sum()
    if masses.sum() < MIN_CAPTURED_MASS:
        raise CoverageError(f"context bins capture only {masses.sum():.6f}", captured_mass=float(masses.sum()))
    return EmpiricalContextModel(L, GridJoint(tuple(edges), masses))


# -- displacement operator as a measurement ----------------------------------------------


def displacement_pvm_distribution(state: StateHandle, q, p, circle_bins: int = 64,
                                  extent: float = 14.0) -> BinnedPdf:
    """Spectral distribution of ``D(q, p)`` over phases in ``[0, 2 pi)``.

    ``D(x) = exp(i r (u . R))`` with ``r = |x|`` and unit label ``u = J x / r``,
    so the eigenvalue phase is ``r t mod 2 pi`` where ``t`` is the outcome of the
    quadrature ``u``. The label pdf is evaluated on the preimages of the phase
    bins within ``|t| <= extent`` and summed per phase bin. ``q`` and ``p`` are
    scalars for one mode or per-mode sequences.
    """
    if circle_bins < 2:
        raise ValueError("need at least two circle bins")
    M = state.modes
    qv = np.broadcast_to(np.asarray(q, dtype=float), (M,)) if np.ndim(q) == 0 else np.asarray(q, dtype=float)
    pv = np.broadcast_to(np.asarray(p, dtype=float), (M,)) if np.ndim(p) == 0 else np.asarray(p, dtype=float)
    if np.ndim(q) == 0 and M > 1:
        raise DimensionError("scalar displacements need a single-mode state")
    x = phase_point(np.concatenate([qv, pv]), M)
    edges = np.linspace(0.0, 2.0 * math.pi, circle_bins + 1)
    r = float(np.linalg.norm(x))
    masses = np.zeros(circle_bins)
    if r == 0.0:
        masses[0] = 1.0
        return BinnedPdf(edges, masses)
    label = np.concatenate([x[M:], -x[:M]]) / r
    nmax = int(math.ceil(r * extent / (2.0 * math.pi))) + 1
    shifts = 2.0 * math.pi * np.arange(-nmax, nmax)
    pre = (edges[None, :-1] + shifts[:, None]).reshape(-1) / r
    pre = np.append(pre, (2.0 * math.pi * nmax) / r)
    pdf = quadrature_pdf(state, label, pre)
    masses = pdf.masses.reshape(2 * nmax, circle_bins).sum(axis=0)
    return _check_capture(BinnedPdf.from_raw(edges, masses), "displacement PVM")
