"""Symplectic linear algebra on the phase space R^{2M}.

Coordinates are always ordered ``(q_1, ..., q_M, p_1, ..., p_M)`` so that the
symplectic form is ``omega(x, y) = x . J y`` with ``J = [[0, I], [-I, 0]]``.
Phase-space points are plain 1-D numpy arrays; :func:`phase_point` validates
them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError

STRUCTURE_TOL = 1e-10
SUBSPACE_TOL = 1e-9


def phase_point(coords, modes: int | None = None) -> np.ndarray:
    """Validate ``coords`` as a point of R^{2M} and return it as a float array."""
    x = np.array(coords, dtype=float).reshape(-1)
    if x.size == 0 or x.size % 2:
        raise DimensionError(f"phase-space points need 2M coordinates, got {x.size}")
    if modes is not None and x.size != 2 * modes:
        raise DimensionError(f"expected {2 * modes} coordinates for M={modes}, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("phase-space coordinates must be finite")
    return x


def num_modes(x) -> int:
    return phase_point(x).size // 2


def basis_vector(kind: str, mode: int, modes: int) -> np.ndarray:
    """``e_k`` (kind ``"q"``) or ``f_k`` (kind ``"p"``), 1-based mode index."""
    if not 1 <= mode <= modes:
        raise DimensionError(f"mode {mode} outside 1..{modes}")
    v = np.zeros(2 * modes)
    v[mode - 1 if kind == "q" else modes + mode - 1] = 1.0
    return v


def omega_matrix(modes: int) -> np.ndarray:
    """The block matrix J of the symplectic form for ``modes`` qumodes."""
    if modes < 1:
        raise DimensionError("need at least one mode")
    eye = np.eye(modes)
    zero = np.zeros((modes, modes))
    return np.block([[zero, eye], [-eye, zero]])


def symplectic_form(x, y) -> float:
    """``omega(x, y) = x . J y``; antisymmetric and bilinear."""
    x = phase_point(x)
    y = phase_point(y)
    if x.size != y.size:
        raise DimensionError(f"dimension mismatch: {x.size} vs {y.size}")
    m = x.size // 2
    return float(x[:m] @ y[m:] - x[m:] @ y[:m])


def symplectic_residual(S) -> float:
    """Max-abs entry of ``S^T J S - J``."""
    S = np.asarray(S, dtype=float)
    J = omega_matrix(S.shape[0] // 2)
    return float(np.max(np.abs(S.T @ J @ S - J)))


@dataclass(frozen=True, eq=False)
class SymplecticMap:
    """Affine symplectic map ``x -> S x + d``.

    ``displacement`` is ``None`` for a linear map.
    """

    matrix: np.ndarray
    displacement: np.ndarray | None = None
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        S = np.array(self.matrix, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] % 2:
            raise DimensionError(f"symplectic matrix must be 2M x 2M, got {S.shape}")
        if self.check:
            res = symplectic_residual(S)
            if res > STRUCTURE_TOL * max(1.0, float(np.max(np.abs(S))) ** 2):
                raise ValueError(f"matrix is not symplectic (residual {res:.3g})")
        S.setflags(write=False)
        object.__setattr__(self, "matrix", S)
        if self.displacement is not None:
            d = phase_point(self.displacement, S.shape[0] // 2)
            d.setflags(write=False)
            object.__setattr__(self, "displacement", d)

    @property
    def modes(self) -> int:
        return self.matrix.shape[0] // 2

    @property
    def shift(self) -> np.ndarray:
        if self.displacement is None:
            return np.zeros(2 * self.modes)
        return self.displacement

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = x @ self.matrix.T
        if self.displacement is not None:
            out = out + self.displacement
        return out

    def __matmul__(self, other: "SymplecticMap") -> "SymplecticMap":
        """Composition ``self o other``."""
        if other.modes != self.modes:
            raise DimensionError("cannot compose maps on different mode counts")
        d = None
        if self.displacement is not None or other.displacement is not None:
            d = self.matrix @ other.shift + self.shift
        return SymplecticMap(self.matrix @ other.matrix, d, check=False)

    def inverse(self) -> "SymplecticMap":
        # S^{-1} = -J S^T J for symplectic S
        J = omega_matrix(self.modes)
        inv = -J @ self.matrix.T @ J
        d = None if self.displacement is None else -inv @ self.displacement
        return SymplecticMap(inv, d, check=False)

    @classmethod
    def identity(cls, modes: int) -> "SymplecticMap":
        return cls(np.eye(2 * modes), check=False)


# -- canonical symplectic maps -------------------------------------------------


def rotation(theta: float, mode: int, modes: int) -> SymplecticMap:
    """Phase-space rotation by ``theta`` (counterclockwise in the (q_k, p_k) plane)."""
    S = np.eye(2 * modes)
    i, j = mode - 1, modes + mode - 1
    c, s = np.cos(theta), np.sin(theta)
    S[i, i], S[i, j], S[j, i], S[j, j] = c, -s, s, c
    return SymplecticMap(S, check=False)


def squeezing(r: float, mode: int, modes: int) -> SymplecticMap:
    """``diag(e^{-r}, e^{r})`` on mode ``mode``."""
    S = np.eye(2 * modes)
    S[mode - 1, mode - 1] = np.exp(-r)
    S[modes + mode - 1, modes + mode - 1] = np.exp(r)
    return SymplecticMap(S, check=False)


def two_mode_squeezing(r: float, k: int, l: int, modes: int) -> SymplecticMap:
    """Two-mode squeezer correlating ``q_k`` with ``q_l`` and anticorrelating momenta."""
    S = np.eye(2 * modes)
    ch, sh = np.cosh(r), np.sinh(r)
    qk, ql, pk, pl = k - 1, l - 1, modes + k - 1, modes + l - 1
    S[qk, qk] = S[ql, ql] = S[pk, pk] = S[pl, pl] = ch
    S[qk, ql] = S[ql, qk] = sh
    S[pk, pl] = S[pl, pk] = -sh
    return SymplecticMap(S, check=False)


def cz_map(k: int, l: int, g: float, modes: int) -> SymplecticMap:
    """Heisenberg action of ``exp(i g q_k q_l)``: ``p_k += g q_l``, ``p_l += g q_k``."""
    if k == l:
        raise DimensionError("CZ needs two distinct modes")
    S = np.eye(2 * modes)
    S[modes + k - 1, l - 1] += g
    S[modes + l - 1, k - 1] += g
    return SymplecticMap(S, check=False)


def displacement_map(d) -> SymplecticMap:
    d = phase_point(d)
    return SymplecticMap(np.eye(d.size), d, check=False)


def unitary_to_symplectic(U) -> np.ndarray:
    """Real orthogonal-symplectic matrix ``[[X, -Y], [Y, X]]`` for ``U = X + iY``."""
    U = np.asarray(U, dtype=complex)
    X, Y = U.real, U.imag
    return np.block([[X, -Y], [Y, X]])


def symplectic_to_unitary(S) -> np.ndarray | None:
    """Inverse of :func:`unitary_to_symplectic`, or ``None`` if ``S`` is not of that form."""
    S = np.asarray(S, dtype=float)
    m = S.shape[0] // 2
    X, Y = S[:m, :m], S[m:, :m]
    if not (np.allclose(S[:m, m:], -Y, atol=STRUCTURE_TOL) and np.allclose(S[m:, m:], X, atol=STRUCTURE_TOL)):
        return None
    U = X + 1j * Y
    if np.max(np.abs(U.conj().T @ U - np.eye(m))) > STRUCTURE_TOL:
        return None
    return U


# -- rotations onto an axis and Lagrangian completion --------------------------


def _complete_unitary(u0: np.ndarray) -> np.ndarray:
    """Unitary matrix whose first column is the unit vector ``u0``.

    Remaining columns come from Gram-Schmidt over the canonical basis vectors of
    C^M taken in index order, skipping nearly dependent candidates.
    """
    m = u0.size
    cols = [u0]
    for j in range(m):
        if len(cols) == m:
            break
        v = np.zeros(m, dtype=complex)
        v[j] = 1.0
        for _ in range(2):
            for c in cols:
                v = v - (c.conj() @ v) * c
        nv = np.linalg.norm(v)
        if nv > 1e-6:
            cols.append(v / nv)
    return np.column_stack(cols)


def rotation_to_axis(x) -> SymplecticMap:
    """Orthogonal symplectic ``S`` with ``|x| S e_1 = x``.

    The orthogonal symplectic group is the unitary group U(M) acting on
    ``q + i p``; ``S e_1`` is the first column of that unitary, which is fixed
    to ``(x_q + i x_p) / |x|`` and completed deterministically.
    """
    x = phase_point(x)
    nrm = np.linalg.norm(x)
    if nrm == 0:
        raise ValueError("cannot rotate the zero vector onto an axis")
    m = x.size // 2
    u0 = (x[:m] + 1j * x[m:]) / nrm
    u0 = u0 / np.linalg.norm(u0)
    return SymplecticMap(unitary_to_symplectic(_complete_unitary(u0)), check=False)


def rref(B, tol: float = 1e-12) -> np.ndarray:
    """Reduced row-echelon form with unit pivots (rows of zeros are dropped)."""
    A = np.array(B, dtype=float, copy=True)
    rows, cols = A.shape
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    r = 0
    for c in range(cols):
        if r == rows:
            break
        piv = r + int(np.argmax(np.abs(A[r:, c])))
        if abs(A[piv, c]) <= tol * scale:
            A[r:, c] = 0.0
            continue
        A[[r, piv]] = A[[piv, r]]
        A[r] = A[r] / A[r, c]
        for i in range(rows):
            if i != r and A[i, c] != 0.0:
                A[i] = A[i] - A[i, c] * A[r]
        A[r, c] = 1.0
        r += 1
    return A[:r]


def is_lagrangian(B) -> bool:
    """True iff the ``M x 2M`` matrix ``B`` has rank M and omega vanishes on its rows."""
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[1] != 2 * B.shape[0]:
        raise DimensionError(f"expected an M x 2M matrix, got shape {B.shape}")
    m = B.shape[0]
    if m == 0:
        return False
    sv = np.linalg.svd(B, compute_uv=False)
    if sv[-1] <= STRUCTURE_TOL * max(1.0, sv[0]):
        return False
    gram = B @ omega_matrix(m) @ B.T
    norms = np.linalg.norm(B, axis=1)
    return bool(np.max(np.abs(gram)) <= STRUCTURE_TOL * max(1.0, float(np.max(norms)) ** 2))


@dataclass(frozen=True, eq=False)
class LagrangianSubspace:
    """A measurement context: an M-dimensional isotropic subspace of R^{2M}.

    ``basis`` holds the canonical (RREF) spanning rows; two subspaces compare
    equal when their canonical forms agree within 1e-9.
    """

    basis: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float)
        if B.ndim != 2 or B.shape[1] % 2:
            raise DimensionError(f"basis must be a k x 2M matrix, got {np.shape(B)}")
        m = B.shape[1] // 2
        canon = rref(B)
        if canon.shape[0] != m or not is_lagrangian(canon):
            raise ValueError("rows do not span a Lagrangian subspace")
        canon.setflags(write=False)
        object.__setattr__(self, "basis", canon)

    @property
    def modes(self) -> int:
        return self.basis.shape[1] // 2

    def contains(self, x, tol: float = STRUCTURE_TOL) -> bool:
        return self.residual(x) <= tol * max(1.0, float(np.linalg.norm(x)))

    def residual(self, x) -> float:
        """Distance from ``x`` to the subspace."""
        x = phase_point(x, self.modes)
        coef, *_ = np.linalg.lstsq(self.basis.T, x, rcond=None)
        return float(np.linalg.norm(self.basis.T @ coef - x))

    def __eq__(self, other):
        if not isinstance(other, LagrangianSubspace):
            return NotImplemented
        return self.basis.shape == other.basis.shape and bool(
            np.max(np.abs(self.basis - other.basis)) <= SUBSPACE_TOL
        )

    __hash__ = None

    @classmethod
    def positions(cls, modes: int) -> "LagrangianSubspace":
        return cls(np.eye(modes, 2 * modes))


def complete_to_lagrangian(x) -> LagrangianSubspace:
    """A Lagrangian subspace containing ``x``: the image of the position plane
    under :func:`rotation_to_axis`."""
    x = phase_point(x)
    if not np.any(x):
        raise ValueError("the zero vector does not determine a context")
    S = rotation_to_axis(x).matrix
    m = x.size // 2
    return LagrangianSubspace(S[:, :m].T)


def random_symplectic(modes: int, seed: int) -> SymplecticMap:
    """Random symplectic matrix ``O1 Z O2`` (Bloch-Messiah form) from a seeded generator.

    Orthogonal factors come from Haar-like random unitaries; squeezing
    parameters are drawn from [-0.6, 0.6].
    """
    if modes < 1:
        raise ValueError("random_symplectic needs M >= 1")
    rng = np.random.default_rng(seed)

    def haar_unitary():
        z = rng.standard_normal((modes, modes)) + 1j * rng.standard_normal((modes, modes))
        q, r = np.linalg.qr(z)
        return q * (np.diagonal(r) / np.abs(np.diagonal(r)))

    r = rng.uniform(-0.6, 0.6, size=modes)
    Z = np.diag(np.concatenate([np.exp(-r), np.exp(r)]))
    S = unitary_to_symplectic(haar_unitary()) @ Z @ unitary_to_symplectic(haar_unitary())
    return SymplecticMap(S)
