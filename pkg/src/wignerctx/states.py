"""Quantum states in two representations.

* :class:`GaussianState` -- mean vector and covariance matrix (hbar = 1, vacuum
  variance 1/2 per quadrature).
* :class:`FockDensityMatrix` -- truncated multimode density matrix.

``StateHandle`` is the union of the two; functions dispatch on the type.
Gates used on the Fock backbone (and by the measurement compiler) are the
small frozen dataclasses :class:`Rot`, :class:`Disp` and :class:`CZ`; all mode
indices are 1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.special import gammaln

from . import _fock
from .errors import DimensionError, PhysicalityError, TruncationError, UnsupportedError
from .phase_space import (
    SymplecticMap,
    omega_matrix,
    phase_point,
    squeezing,
    two_mode_squeezing,
)

TRUNCATION_BUDGET = 1e-6


@dataclass(frozen=True, eq=False)
class GaussianState:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = phase_point(self.mean)
        cov = np.array(self.cov, dtype=float)
        n = mean.size
        if cov.shape != (n, n):
            raise DimensionError(f"covariance must be {n}x{n}, got {cov.shape}")
        if not np.all(np.isfinite(cov)):
            raise PhysicalityError("covariance has non-finite entries")
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.max(np.abs(cov - cov.T)) > 1e-12 * scale:
            raise PhysicalityError("covariance matrix is not symmetric")
        cov = 0.5 * (cov + cov.T)
        lam = np.linalg.eigvalsh(cov + 0.5j * omega_matrix(n // 2))
        if lam[0] < -1e-9 * scale:
            raise PhysicalityError(
                f"covariance violates the uncertainty principle (eigenvalue {lam[0]:.3g})"
            )
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def modes(self) -> int:
        return self.mean.size // 2


@dataclass(frozen=True, eq=False)
class FockDensityMatrix:
    cutoffs: tuple
    matrix: np.ndarray

    def __post_init__(self):
        cutoffs = tuple(int(c) for c in np.atleast_1d(self.cutoffs))
        if not cutoffs or min(cutoffs) < 1:
            raise DimensionError("cutoffs must be positive integers")
        rho = np.array(self.matrix, dtype=complex)
        d = int(np.prod(cutoffs))
        if rho.shape != (d, d):
            raise DimensionError(f"density matrix must be {d}x{d} for cutoffs {cutoffs}")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
            raise PhysicalityError("density matrix is not Hermitian")
        rho = 0.5 * (rho + rho.conj().T)
        tr = np.trace(rho).real
        if abs(tr - 1.0) > 1e-9:
            raise PhysicalityError(f"density matrix has trace {tr:.12g}")
        if np.linalg.eigvalsh(rho)[0] < -1e-8:
            raise PhysicalityError("density matrix is not positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "cutoffs", cutoffs)
        object.__setattr__(self, "matrix", rho)

    @property
    def modes(self) -> int:
        return len(self.cutoffs)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


StateHandle = Union[GaussianState, FockDensityMatrix]


# -- gates -----------------------------------------------------------------------


@dataclass(frozen=True)
class Rot:
    """Phase shift ``exp(i theta (n + 1/2))`` on ``mode``."""

    mode: int
    theta: float


@dataclass(frozen=True)
class Disp:
    """Displacement ``D(q, p)`` on ``mode``."""

    mode: int
    q: float
    p: float


@dataclass(frozen=True)
class CZ:
    """``exp(i g q_k q_l)``."""

    k: int
    l: int
    g: float


Gate = Union[Rot, Disp, CZ]


# -- constructors ----------------------------------------------------------------


def make_gaussian(mean, cov) -> GaussianState:
    return GaussianState(mean, cov)


def vacuum(modes: int = 1) -> GaussianState:
    return GaussianState(np.zeros(2 * modes), 0.5 * np.eye(2 * modes))


def coherent(q: float, p: float) -> GaussianState:
    return GaussianState([q, p], 0.5 * np.eye(2))


def thermal(nbar: float, modes: int = 1) -> GaussianState:
    return GaussianState(np.zeros(2 * modes), (nbar + 0.5) * np.eye(2 * modes))


def squeezed_vacuum(r: float) -> GaussianState:
    """Position-squeezed vacuum, ``cov = diag(e^{-2r}, e^{2r}) / 2``."""
    return apply_symplectic_gaussian(vacuum(1), squeezing(r, 1, 1))


def two_mode_squeezed_vacuum(r: float) -> GaussianState:
    return apply_symplectic_gaussian(vacuum(2), two_mode_squeezing(r, 1, 2, 2))


def _cutoff_list(cutoffs, modes: int) -> tuple:
    cuts = np.atleast_1d(cutoffs).astype(int)
    if cuts.size == 1:
        cuts = np.repeat(cuts, modes)
    if cuts.size != modes:
        raise DimensionError(f"need {modes} cutoffs, got {cuts.size}")
    return tuple(int(c) for c in cuts)


def _pure(vector, cutoffs) -> FockDensityMatrix:
    v = np.asarray(vector, dtype=complex)
    return FockDensityMatrix(cutoffs, np.outer(v, v.conj()))


def make_fock(occupations, cutoffs) -> FockDensityMatrix:
    """Projector onto the product number state ``|n_1, ..., n_M>``."""
    occ = [int(n) for n in np.atleast_1d(occupations)]
    cuts = _cutoff_list(cutoffs, len(occ))
    for n, c in zip(occ, cuts):
        if n < 0 or n >= c:
            raise DimensionError(f"occupation {n} does not fit below cutoff {c}")
    v = np.zeros(int(np.prod(cuts)), dtype=complex)
    v[np.ravel_multi_index(occ, cuts)] = 1.0
    return _pure(v, cuts)


def _check_tail(norm2_truncated: float, what: str, cutoff: int):
    if norm2_truncated < 1.0 - 1e-8:
        raise TruncationError(
            f"cutoff {cutoff} keeps only {norm2_truncated:.10f} of the {what} norm",
            trace_loss=1.0 - norm2_truncated,
        )


def make_cat(alpha: float, parity: str = "even", cutoff: int = 30) -> FockDensityMatrix:
    """Normalized ``|alpha> + |-alpha>`` (even) or ``|alpha> - |-alpha>`` (odd), alpha real."""
    if parity not in ("even", "odd"):
        raise ValueError("parity must be 'even' or 'odd'")
    sgn = 1.0 if parity == "even" else -1.0
    alpha = float(alpha)
    if alpha == 0.0 and sgn < 0:
        raise ValueError("the odd cat vanishes at alpha = 0")
    n = np.arange(cutoff)
    with np.errstate(divide="ignore"):
        log_abs = -0.5 * alpha**2 + n * math.log(abs(alpha) if alpha else 1.0) - 0.5 * gammaln(n + 1)
    coef = np.exp(log_abs) * (np.sign(alpha) ** n if alpha else (n == 0).astype(float))
    coef = coef * (1.0 + sgn * (-1.0) ** n)
    full_norm2 = 2.0 * (1.0 + sgn * math.exp(-2.0 * alpha**2))
    if alpha == 0.0:
        full_norm2 = 4.0
    _check_tail(float(np.sum(coef**2)) / full_norm2, "cat state", cutoff)
    coef = coef / np.linalg.norm(coef)
    return _pure(coef, (cutoff,))


def coherent_fock(q: float, p: float, cutoff: int) -> FockDensityMatrix:
    v = _fock.displacement_matrix(q, p, cutoff)[:, 0]
    _check_tail(float(np.sum(np.abs(v) ** 2)), "coherent state", cutoff)
    return _pure(v / np.linalg.norm(v), (cutoff,))


def squeezed_vacuum_fock(r: float, cutoff: int) -> FockDensityMatrix:
    """Fock expansion of :func:`squeezed_vacuum` (position quadrature squeezed for ``r > 0``)."""
    v = np.zeros(cutoff)
    t = math.tanh(r)
    for j in range((cutoff + 1) // 2):
        n = 2 * j
        log_mag = 0.5 * gammaln(n + 1) - j * math.log(2.0) - gammaln(j + 1)
        v[n] = (-t) ** j * math.exp(log_mag) / math.sqrt(math.cosh(r))
    _check_tail(float(np.sum(v**2)), "squeezed vacuum", cutoff)
    return _pure(v / np.linalg.norm(v), (cutoff,))


def thermal_fock(nbar: float, cutoff: int) -> FockDensityMatrix:
    """Geometric mixture of number states, renormalized after truncation."""
    n = np.arange(cutoff)
    w = nbar**n / (nbar + 1.0) ** (n + 1)
    _check_tail(float(np.sum(w)), "thermal", cutoff)
    w = w / w.sum()
    return mix([make_fock([k], cutoff) for k in range(cutoff)], w)


def mix(states: Sequence[StateHandle], weights) -> FockDensityMatrix:
    """Convex combination of Fock-backbone states with identical cutoffs."""
    states = list(states)
    w = np.asarray(weights, dtype=float)
    if len(states) == 0 or w.shape != (len(states),):
        raise ValueError("need one weight per state")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError(f"weights must be nonnegative and sum to 1 (sum {w.sum():.15g})")
    if not all(isinstance(s, FockDensityMatrix) for s in states):
        raise UnsupportedError("mixtures are only available on the Fock backbone")
    cuts = states[0].cutoffs
    if any(s.cutoffs != cuts for s in states):
        raise DimensionError("all mixed states must share cutoffs")
    rho = sum(wi * s.matrix for wi, s in zip(w, states))
    return FockDensityMatrix(cuts, rho)


def tensor(*states: StateHandle) -> StateHandle:
    """Tensor product of states from the same backbone (modes concatenated in order)."""
    if not states:
        raise ValueError("tensor of nothing")
    if all(isinstance(s, GaussianState) for s in states):
        qs = [s.mean[: s.modes] for s in states]
        ps = [s.mean[s.modes :] for s in states]
        n = sum(s.modes for s in states)
        cov = np.zeros((2 * n, 2 * n))
        idx = 0
        for s in states:
            m = s.modes
            sel = np.r_[idx : idx + m, n + idx : n + idx + m]
            cov[np.ix_(sel, sel)] = s.cov
            idx += m
        return GaussianState(np.concatenate(qs + ps), cov)
    if all(isinstance(s, FockDensityMatrix) for s in states):
        rho = states[0].matrix
        cuts = list(states[0].cutoffs)
        for s in states[1:]:
            rho = np.kron(rho, s.matrix)
            cuts += list(s.cutoffs)
        return FockDensityMatrix(tuple(cuts), rho)
    raise UnsupportedError("cannot tensor states from different backbones")


def reduce_modes(state: StateHandle, keep: Sequence[int]) -> StateHandle:
    """Reduced state on the 1-based modes in ``keep``."""
    keep0 = [k - 1 for k in keep]
    if any(k < 0 or k >= state.modes for k in keep0) or len(set(keep0)) != len(keep0):
        raise DimensionError(f"invalid modes {list(keep)} for M={state.modes}")
    if isinstance(state, GaussianState):
        m = state.modes
        sel = np.r_[keep0, [m + k for k in keep0]].astype(int)
        return GaussianState(state.mean[sel], state.cov[np.ix_(sel, sel)])
    rho = _fock.partial_trace(state.matrix, state.cutoffs, keep0)
    return FockDensityMatrix(tuple(state.cutoffs[k] for k in keep0), rho)


def mean_photon_number(state: StateHandle) -> float:
    """Total mean photon number summed over modes."""
    if isinstance(state, GaussianState):
        return float(0.5 * (np.trace(state.cov) + state.mean @ state.mean) - 0.5 * state.modes)
    diag = np.diagonal(state.matrix).real.reshape(state.cutoffs)
    total = 0.0
    for k, c in enumerate(state.cutoffs):
        shape = [1] * state.modes
        shape[k] = c
        total += float(np.sum(diag * np.arange(c).reshape(shape)))
    return total


# -- transformations ---------------------------------------------------------------


def apply_symplectic_gaussian(state: GaussianState, S: SymplecticMap) -> GaussianState:
    """Moments under ``x -> S x + d``: mean to ``S mean + d``, cov to ``S cov S^T``."""
    if S.modes != state.modes:
        raise DimensionError(f"map acts on {S.modes} modes, state has {state.modes}")
    mean = S.matrix @ state.mean + S.shift
    cov = S.matrix @ state.cov @ S.matrix.T
    return GaussianState(mean, 0.5 * (cov + cov.T))


def cz_unitary(g: float, cutoff_k: int, cutoff_l: int) -> np.ndarray:
    """``exp(i g q x q)`` built at truncation from the truncated position operators.

    Exactly unitary on the ``cutoff_k * cutoff_l`` space (Hermitian generator).
    """
    xk, Vk = np.linalg.eigh(_fock.position_operator(cutoff_k))
    xl, Vl = np.linalg.eigh(_fock.position_operator(cutoff_l))
    V = np.kron(Vk, Vl)
    phase = np.exp(1j * g * np.kron(xk, xl))
    return (V * phase) @ V.T


def _cz_retained(g: float, ck: int, cl: int, pad: int) -> np.ndarray:
    """Matrix of ``exp(i g q q)`` on the retained ``ck x cl`` block, computed in a padded space.

    The generator is diagonalized at cutoffs ``ck + pad`` / ``cl + pad`` and only
    the rows and columns below the original cutoffs are kept.
    """
    xk, Vk = np.linalg.eigh(_fock.position_operator(ck + pad))
    xl, Vl = np.linalg.eigh(_fock.position_operator(cl + pad))
    Vk, Vl = Vk[:ck], Vl[:cl]
    phase = np.exp(1j * g * np.outer(xk, xl))  # (a, b)
    # E[a, j, l] = sum_b Vl[j, b] Vl[l, b] phase[a, b]
    E = np.einsum("jb,lb,ab->ajl", Vl, Vl, phase, optimize=True)
    U = np.einsum("ia,ka,ajl->ijkl", Vk, Vk, E, optimize=True)
    return U.reshape(ck * cl, ck * cl)


def apply_gate_fock(state: FockDensityMatrix, gate: Gate, pad: int = 30) -> FockDensityMatrix:
    """``U rho U^dag`` at truncation.

    Rotations are exact. Displacements use the analytic truncated Glauber matrix,
    CZ gates the retained block of the padded exponential; both check the trace
    that leaks above the cutoff against a 1e-6 budget and renormalize.
    """
    if not isinstance(state, FockDensityMatrix):
        raise UnsupportedError("apply_gate_fock needs a Fock-backbone state")
    M = state.modes
    cuts = state.cutoffs

    def check_mode(k):
        if not 1 <= k <= M:
            raise DimensionError(f"gate mode {k} outside 1..{M}")
        return k - 1

    if isinstance(gate, Rot):
        k = check_mode(gate.mode)
        rho = _fock.phase_rotate(state.matrix, cuts, k, gate.theta)
        return FockDensityMatrix(cuts, rho)
    if isinstance(gate, Disp):
        k = check_mode(gate.mode)
        D = _fock.displacement_matrix(gate.q, gate.p, cuts[k])
        rho = _fock.apply_local(state.matrix, cuts, k, D)
    elif isinstance(gate, CZ):
        k, l = check_mode(gate.k), check_mode(gate.l)
        if k == l:
            raise DimensionError("CZ needs two distinct modes")
        U = _cz_retained(gate.g, cuts[k], cuts[l], pad).reshape(cuts[k], cuts[l], cuts[k], cuts[l])
        t = _fock.as_tensor(state.matrix, cuts)
        # act on the row indices of modes k, l then on the column indices
        t = np.moveaxis(np.tensordot(U, t, axes=([2, 3], [k, l])), [0, 1], [k, l])
        t = np.moveaxis(
            np.tensordot(t, U.conj(), axes=([M + k, M + l], [2, 3])), [-2, -1], [M + k, M + l]
        )
        rho = _fock.from_tensor(t)
    else:
        raise TypeError(f"unknown gate {gate!r}")
    tr = float(np.trace(rho).real)
    if 1.0 - tr > TRUNCATION_BUDGET:
        raise TruncationError(
            f"{type(gate).__name__} leaked {1.0 - tr:.3g} of the trace above the cutoff",
            trace_loss=1.0 - tr,
        )
    return FockDensityMatrix(cuts, rho / tr)


def rotation_gates(S: SymplecticMap) -> list:
    """Fock gates realizing ``tau(S)`` for a per-mode rotation plus displacement.

    The gates produce ``rho'`` with ``W_rho'(x) = W_rho(S x + d)``. Only maps whose
    linear part is a rotation in each (q_k, p_k) plane are realizable on the
    Fock backbone; anything else raises :class:`UnsupportedError`.
    """
    from .phase_space import symplectic_to_unitary

    U = symplectic_to_unitary(S.matrix)
    if U is None or np.max(np.abs(U - np.diag(np.diagonal(U)))) > 1e-10:
        raise UnsupportedError("only per-mode rotations and displacements act on the Fock backbone")
    M = S.modes
    gates: list = []
    d = S.shift
    for k in range(M):
        if d[k] != 0.0 or d[M + k] != 0.0:
            gates.append(Disp(k + 1, -d[k], -d[M + k]))
    for k, u in enumerate(np.diagonal(U)):
        theta = float(np.angle(u))
        if theta != 0.0:
            gates.append(Rot(k + 1, -theta))
    return gates


def transform_state(state: StateHandle, S: SymplecticMap) -> StateHandle:
    """``tau(S) rho tau(S)^*``, normalized so that ``W_out(x) = W_in(S x + d)``."""
    if isinstance(state, GaussianState):
        return apply_symplectic_gaussian(state, S.inverse())
    if S.modes != state.modes:
        raise DimensionError(f"map acts on {S.modes} modes, state has {state.modes}")
    for gate in rotation_gates(S):
        state = apply_gate_fock(state, gate)
    return state
