"""Characteristic and Wigner functions, grids and negativity.

Normalization: ``W`` integrates to ``(2 pi)^{M/2}`` over phase space, so that
the position marginal satisfies

    (2 pi)^{-M/2} int W(q, p) dp = |psi(q)|^2.

In terms of the textbook Wigner function (unit mass), ``W = (2 pi)^{M/2} W_std``
and the vacuum takes the value ``sqrt(2 pi) / pi`` at the origin. The Fourier
convention used by the slow oracle is

    W(x) = (2 pi)^{M/2} (2 pi)^{-2M} int exp(i omega(x, y)) Phi(y) dy,

with ``Phi(y) = Tr(rho D(-y))``; the constants are pinned by the marginal law,
and :func:`check_normalization` re-derives them numerically at import time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _fock, _parallel
from .errors import ConvergenceError, CoverageError, DimensionError
from .phase_space import SymplecticMap, omega_matrix, phase_point
from .states import FockDensityMatrix, GaussianState, StateHandle, transform_state

SQRT_2PI = math.sqrt(2.0 * math.pi)
NEGATIVITY_RELATIVE_TOL = 1e-6
COVERAGE_TOL = 1e-2
STANDARD_COUNTS = {1: 241, 2: 61, 3: 15, 4: 9}


def convention_mass(modes: int) -> float:
    return SQRT_2PI**modes


# -- grids -------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Rectangular grid: one ``(min, max, count)`` triple per phase-space axis."""

    axes: tuple

    def __post_init__(self):
        axes = tuple((float(lo), float(hi), int(n)) for lo, hi, n in self.axes)
        if not axes or len(axes) % 2:
            raise DimensionError(f"a grid needs 2M axes, got {len(axes)}")
        for lo, hi, n in axes:
            if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
                raise ValueError(f"grid axis needs min < max, got {lo}:{hi}")
            if n < 2:
                raise ValueError(f"grid axis needs at least 2 points, got {n}")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def uniform(cls, lo: float, hi: float, count: int, modes: int) -> "GridSpec":
        return cls(((lo, hi, count),) * (2 * modes))

    @classmethod
    def parse(cls, text, modes: int) -> "GridSpec":
        """Build from ``"min:max:count"`` strings, one per axis or one broadcast to all."""
        items = [text] if isinstance(text, str) else list(text)
        axes = []
        for item in items:
            parts = item.split(":")
            if len(parts) != 3:
                raise ValueError(f"grid axis must look like min:max:count, got {item!r}")
            try:
                lo, hi = float(parts[0]), float(parts[1])
                n = int(parts[2])
            except ValueError:
                raise ValueError(f"grid axis must look like min:max:count, got {item!r}") from None
            axes.append((lo, hi, n))
        if len(axes) == 1:
            axes = axes * (2 * modes)
        if len(axes) != 2 * modes:
            raise DimensionError(f"need 1 or {2 * modes} grid axes for M={modes}, got {len(axes)}")
        return cls(tuple(axes))

    @property
    def modes(self) -> int:
        return len(self.axes) // 2

    @property
    def shape(self) -> tuple:
        return tuple(n for _, _, n in self.axes)

    def points(self, axis: int) -> np.ndarray:
        lo, hi, n = self.axes[axis]
        return np.linspace(lo, hi, n)

    def to_dict(self) -> dict:
        return {"axes": [{"min": lo, "max": hi, "count": n} for lo, hi, n in self.axes]}

    def __str__(self):
        return " ".join(f"{lo:g}:{hi:g}:{n}" for lo, hi, n in self.axes)


def standard_grid(modes: int) -> GridSpec:
    """``[-6, 6]`` on every axis with a point count that keeps the grid desk-sized."""
    if modes not in STANDARD_COUNTS:
        raise DimensionError(f"no standard grid for M={modes}")
    return GridSpec.uniform(-6.0, 6.0, STANDARD_COUNTS[modes], modes)


def trapezoid_nd(values: np.ndarray, spec: GridSpec) -> float:
    """Trapezoid-rule integral over every axis, reduced in a fixed axis order."""
    out = values
    for axis in range(len(spec.axes) - 1, -1, -1):
        out = np.trapezoid(out, spec.points(axis), axis=axis)
    return float(out)


@dataclass(frozen=True, eq=False)
class WignerGrid:
    """Wigner function sampled on ``spec``; ``values`` has shape ``spec.shape``."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.spec.shape:
            raise DimensionError(f"values shape {v.shape} does not match grid {self.spec.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("Wigner grid has non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def modes(self) -> int:
        return self.spec.modes

    @property
    def convention_mass(self) -> float:
        return convention_mass(self.modes)

    def integral(self) -> float:
        return trapezoid_nd(self.values, self.spec)

    def normalized_mass(self) -> float:
        return self.integral() / self.convention_mass

    def point(self, flat_index: int) -> np.ndarray:
        idx = np.unravel_index(flat_index, self.spec.shape)
        return np.array([self.spec.points(a)[i] for a, i in enumerate(idx)])

    def p_marginal(self) -> np.ndarray:
        """``(2 pi)^{-M/2} int W dp``, shape ``(n_q1, ..., n_qM)``."""
        out = self.values
        M = self.modes
        for axis in range(2 * M - 1, M - 1, -1):
            out = np.trapezoid(out, self.spec.points(axis), axis=axis)
        return out / self.convention_mass


@dataclass(frozen=True, eq=False)
class NegativityReport:
    """Summary of the negative part of a Wigner grid.

    ``negativity_volume`` and ``total_mass`` are divided by ``(2 pi)^{M/2}``
    (so ``total_mass`` is 1 for a covered state).
    """

    min_value: float
    argmin: np.ndarray
    negativity_volume: float
    total_mass: float
    max_abs: float

    @property
    def tolerance(self) -> float:
        return NEGATIVITY_RELATIVE_TOL * self.max_abs

    @property
    def nonnegative(self) -> bool:
        return self.min_value >= -self.tolerance

    def to_dict(self) -> dict:
        return {
            "min_wigner": self.min_value,
            "argmin": [float(v) for v in self.argmin],
            "negativity_volume": self.negativity_volume,
            "total_mass": self.total_mass,
        }


# -- point evaluation --------------------------------------------------------------


def _check_dims(state: StateHandle, x: np.ndarray):
    if x.shape[-1] != 2 * state.modes:
        raise DimensionError(f"points need {2 * state.modes} coordinates, got {x.shape[-1]}")


def characteristic_function(state: StateHandle, x) -> complex:
    """``Phi(x) = Tr(rho D(-x))``.

    Gaussian: closed form ``exp(-i (Jx).mean - (Jx)^T cov (Jx) / 2)``. Fock: the
    trace against analytic displacement matrix elements. Those elements are
    exact for every level below the cutoff, so the trace carries no truncation
    error beyond the state's own truncation; the documented working range is
    ``|x| <= 6`` at cutoff 40.
    """
    x = phase_point(x, state.modes)
    if isinstance(state, GaussianState):
        k = omega_matrix(state.modes) @ x
        return complex(np.exp(-1j * k @ state.mean - 0.5 * k @ state.cov @ k))
    M = state.modes
    kernels = []
    for k, c in enumerate(state.cutoffs):
        D = _fock.displacement_matrix(-x[k], -x[M + k], c)
        kernels.append(D.T[:, :, None])
    return complex(_fock.contract_points(state.matrix, state.cutoffs, kernels)[0])


def _gaussian_wigner(state: GaussianState, X: np.ndarray) -> np.ndarray:
    M = state.modes
    inv = np.linalg.inv(state.cov)
    _, logdet = np.linalg.slogdet(state.cov)
    d = X - state.mean
    quad = np.einsum("...i,ij,...j->...", d, inv, d)
    return np.exp(-0.5 * quad - 0.5 * logdet) * (SQRT_2PI / (2.0 * math.pi)) ** M


def _fock_wigner_complex(state: FockDensityMatrix, X: np.ndarray, chunk: int = _fock.POINT_CHUNK):
    M = state.modes
    X = X.reshape(-1, 2 * M)
    parts = []
    for s in range(0, X.shape[0], chunk):
        Y = X[s : s + chunk]
        kernels = [_fock.wigner_kernel(Y[:, k], Y[:, M + k], c) for k, c in enumerate(state.cutoffs)]
        parts.append(_fock.contract_points(state.matrix, state.cutoffs, kernels))
    return np.concatenate(parts) if parts else np.zeros(0, dtype=complex)


def wigner_values(state: StateHandle, points) -> np.ndarray:
    """Wigner function at each row of ``points`` (shape ``(..., 2M)``)."""
    X = np.asarray(points, dtype=float)
    _check_dims(state, X)
    if isinstance(state, GaussianState):
        return _gaussian_wigner(state, X)
    W = _fock_wigner_complex(state, X)
    return W.real.reshape(X.shape[:-1])


def wigner_point(state: StateHandle, x) -> float:
    """Wigner function at one phase-space point (displaced parity on the Fock backbone)."""
    x = phase_point(x, state.modes)
    return float(wigner_values(state, x[None, :])[0])


def wigner_imaginary_residue(state: FockDensityMatrix, points) -> float:
    """Largest imaginary part left by the Fock-basis contraction at ``points``."""
    X = np.asarray(points, dtype=float)
    _check_dims(state, X)
    return float(np.max(np.abs(_fock_wigner_complex(state, X).imag)))


# -- grid evaluation ---------------------------------------------------------------


def _gaussian_grid(state: GaussianState, spec: GridSpec, pool) -> np.ndarray:
    axes = [spec.points(a) for a in range(len(spec.axes))]
    first = axes[0]
    rest = np.stack(np.meshgrid(*axes[1:], indexing="ij"), axis=-1)

    def block(i):
        X = np.concatenate([np.full(rest.shape[:-1] + (1,), first[i]), rest], axis=-1)
        return _gaussian_wigner(state, X)[None]

    idx = range(first.size)
    parts = list(pool.map(block, idx)) if pool is not None else [block(i) for i in idx]
    return np.concatenate(parts, axis=0)


def _fock_grid(state: FockDensityMatrix, spec: GridSpec, pool) -> np.ndarray:
    M = state.modes
    cuts = state.cutoffs
    planes = []
    for k in range(M):
        Q, P = np.meshgrid(spec.points(k), spec.points(M + k), indexing="ij")
        planes.append((Q.reshape(-1), P.reshape(-1)))

    def kernel_fn(k, start, stop):
        q, p = planes[k]
        return _fock.wigner_kernel(q[start:stop], p[start:stop], cuts[k])

    counts = [planes[k][0].size for k in range(M)]
    W = _fock.contract_grid(state.matrix, cuts, kernel_fn, counts, executor=pool).real
    # (q1 p1, q2 p2, ...) -> (q1..qM, p1..pM)
    shape = []
    for k in range(M):
        shape += [spec.axes[k][2], spec.axes[M + k][2]]
    W = W.reshape(shape)
    order = [2 * k for k in range(M)] + [2 * k + 1 for k in range(M)]
    return np.ascontiguousarray(np.transpose(W, order))


def wigner_grid(state: StateHandle, spec: GridSpec, threads: int | None = None,
                check_coverage: bool = True) -> WignerGrid:
    """Wigner function on every point of ``spec``.

    With ``check_coverage`` the trapezoid mass must be within 1% of the
    convention mass, otherwise :class:`CoverageError` is raised.
    """
    if spec.modes != state.modes:
        raise DimensionError(f"grid has {spec.modes} modes, state has {state.modes}")
    with _parallel.executor(threads) as pool:
        if isinstance(state, GaussianState):
            values = _gaussian_grid(state, spec, pool)
        else:
            values = _fock_grid(state, spec, pool)
    grid = WignerGrid(spec, values)
    if check_coverage:
        mass = grid.normalized_mass()
        if abs(mass - 1.0) > COVERAGE_TOL:
            raise CoverageError(
                f"grid {spec} captures normalized Wigner mass {mass:.6f}; widen or refine it",
                captured_mass=mass,
            )
    return grid


def negativity_report(grid: WignerGrid) -> NegativityReport:
    v = grid.values
    i = int(np.argmin(v))
    neg = trapezoid_nd(np.maximum(-v, 0.0), grid.spec) / grid.convention_mass
    return NegativityReport(
        min_value=float(v.reshape(-1)[i]),
        argmin=grid.point(i),
        negativity_volume=float(neg),
        total_mass=grid.normalized_mass(),
        max_abs=float(np.max(np.abs(v))),
    )


def symplectic_covariance_check(state: StateHandle, S: SymplecticMap, sample_points) -> float:
    """``max |W_{tau(S) rho tau(S)^*}(x) - W_rho(S x)|`` over ``sample_points``.

    Gaussian states accept any affine symplectic ``S``; Fock states accept
    per-mode rotations (with optional displacement), realized by gates.
    """
    X = np.atleast_2d(np.asarray(sample_points, dtype=float))
    _check_dims(state, X)
    moved = transform_state(state, S)
    lhs = wigner_values(moved, X)
    rhs = wigner_values(state, S(X))
    return float(np.max(np.abs(lhs - rhs)))


# -- slow oracle and self-test -----------------------------------------------------


def characteristic_grid(state: StateHandle, axes: Sequence[np.ndarray]) -> np.ndarray:
    """``Phi`` on the tensor grid ``axes`` (one array per phase-space axis)."""
    M = state.modes
    if len(axes) != 2 * M:
        raise DimensionError(f"need {2 * M} axes")
    if isinstance(state, GaussianState):
        Y = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        k = Y @ omega_matrix(M).T
        return np.exp(-1j * k @ state.mean - 0.5 * np.einsum("...i,ij,...j->...", k, state.cov, k))
    planes = []
    for k in range(M):
        Q, P = np.meshgrid(axes[k], axes[M + k], indexing="ij")
        planes.append((Q.reshape(-1), P.reshape(-1)))

    def kernel_fn(k, start, stop):
        q, p = planes[k]
        D = _fock.displacement_elements(-(q[start:stop] + 1j * p[start:stop]) / math.sqrt(2.0), state.cutoffs[k])
        return np.swapaxes(D, 0, 1)

    counts = [planes[k][0].size for k in range(M)]
    phi = _fock.contract_grid(state.matrix, state.cutoffs, kernel_fn, counts)
    shape = []
    for k in range(M):
        shape += [axes[k].size, axes[M + k].size]
    order = [2 * k for k in range(M)] + [2 * k + 1 for k in range(M)]
    return np.transpose(phi.reshape(shape), order)


def wigner_fourier_oracle(state: StateHandle, spec: GridSpec, extent: float = 14.0,
                          step: float = 0.2) -> WignerGrid:
    """Wigner grid from the symplectic Fourier transform of ``Phi`` by direct quadrature.

    Independent of the displaced-parity kernel. ``Phi`` is tabulated on
    ``[-extent, extent]^{2M}`` with spacing ``step``; the transform separates
    into one dense matrix product per axis. Cost grows as ``(2 extent/step)^{2M}``
    so this is meant for M = 1 (M = 2 at coarse settings).
    """
    M = state.modes
    n = int(round(2 * extent / step)) + 1
    y = np.linspace(-extent, extent, n)
    w = np.full(n, y[1] - y[0])
    w[[0, -1]] *= 0.5
    phi = characteristic_grid(state, [y] * (2 * M))
    # omega(x, y) = sum_k x_qk y_pk - x_pk y_qk; pair output axis a with input axis a +- M
    out = phi
    for a in range(2 * M):
        xa = spec.points(a)
        src = a + M if a < M else a - M
        sign = 1.0 if a < M else -1.0
        E = np.exp(1j * sign * np.outer(xa, y)) * w[None, :]
        # contract input axis ``src`` and put the new axis at position ``a``
        out = np.moveaxis(np.tensordot(E, out, axes=([1], [src])), 0, src)
    # axes are now indexed by source position; permute to output order
    order = [a + M if a < M else a - M for a in range(2 * M)]
    out = np.transpose(out, order)
    W = out * SQRT_2PI**M / (2.0 * math.pi) ** (2 * M)
    residue = float(np.max(np.abs(W.imag)))
    if residue > 1e-6 * max(1.0, float(np.max(np.abs(W.real)))):
        raise ConvergenceError(
            "Fourier oracle left an imaginary residue; enlarge the extent or refine the step",
            diagnostics={"imag_residue": residue, "extent": extent, "step": step},
        )
    return WignerGrid(spec, W.real)


def check_normalization(points: int = 201, extent: float = 7.0) -> float:
    """Max deviation of the vacuum and one-photon p-marginals from ``|psi_n(q)|^2``.

    The kernel constant is accepted only if this is tiny; it is evaluated once at
    import time.
    """
    spec = GridSpec.uniform(-extent, extent, points, 1)
    q = spec.points(0)
    psi = _fock.hermite_functions(q, 2)
    err = 0.0
    for n in range(2):
        rho = np.zeros((2, 2))
        rho[n, n] = 1.0
        g = wigner_grid(FockDensityMatrix((2,), rho), spec, threads=1, check_coverage=False)
        err = max(err, float(np.max(np.abs(g.p_marginal() - psi[n] ** 2))))
    return err


_SELF_TEST = check_normalization()
if _SELF_TEST > 1e-8:
    raise RuntimeError(f"Wigner normalization self-test failed (marginal error {_SELF_TEST:.3g})")
