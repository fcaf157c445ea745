"""Fock-basis numerics: displacement matrix elements, Hermite functions, and
contractions of multimode density matrices against per-mode kernels.

Multimode density matrices are stored as ``(d, d)`` arrays with
``d = prod(cutoffs)`` and mode 1 as the most significant index (``np.kron``
order).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

SQRT_2PI = math.sqrt(2.0 * math.pi)
POINT_CHUNK = 2048


def _laguerre_table(x: np.ndarray, cutoff: int) -> np.ndarray:
    """``L_j^{(k)}(x)`` for all ``j, k < cutoff``, shape ``(c, c, P)``, by the three-term recurrence."""
    c = cutoff
    k = np.arange(c, dtype=float)[:, None]
    table = np.empty((c, c, x.size))
    prev = np.ones((c, x.size))
    table[0] = prev
    if c > 1:
        cur = 1.0 + k - x[None, :]
        table[1] = cur
        for j in range(1, c - 1):
            nxt = ((2 * j + 1 + k - x[None, :]) * cur - (j + k) * prev) / (j + 1)
            table[j + 1] = nxt
            prev, cur = cur, nxt
    return table


def displacement_elements(beta, cutoff: int) -> np.ndarray:
    """``<m|D(beta)|n>`` for ``m, n < cutoff`` and every entry of ``beta``.

    Closed Laguerre form ``sqrt(lo!/hi!) |beta|^k e^{-|beta|^2/2} L_lo^{(k)}(|beta|^2)``
    times a phase. The prefactor is exponentiated from log space before the
    product, so nothing overflows for ``|beta|`` far beyond the truncation
    (unlike the usual two-term recursion). Output shape ``(cutoff, cutoff) + beta.shape``.
    """
    beta = np.asarray(beta, dtype=complex)
    shape = beta.shape
    b = beta.reshape(-1)
    r = np.abs(b)
    x = r * r
    c = cutoff
    j = np.arange(c)[:, None]
    k = np.arange(c)[None, :]
    with np.errstate(divide="ignore"):
        log_r = np.log(r)
    log_pow = np.where(k[..., None] == 0, 0.0, k[..., None] * np.where(r > 0, log_r, 0.0))
    log_pow = np.where((k[..., None] > 0) & (r == 0), -np.inf, log_pow)
    log_pre = (0.5 * (gammaln(j + 1) - gammaln(j + k + 1)))[..., None] + log_pow - 0.5 * x
    table = np.exp(log_pre) * _laguerre_table(x, c)  # indexed by (lo, hi - lo)
    m = np.arange(c)[:, None]
    n = np.arange(c)[None, :]
    mag = table[np.minimum(m, n), np.abs(m - n)]
    # phase e^{i (m - n) arg beta} as powers of the unit phasor
    u = np.where(r > 0, b / np.where(r > 0, r, 1.0), 1.0)
    powers = np.empty((2 * c - 1, b.size), dtype=complex)
    powers[c - 1] = 1.0
    for d in range(1, c):
        powers[c - 1 + d] = powers[c - 2 + d] * u
        powers[c - 1 - d] = np.conj(powers[c - 1 + d])
    sign = np.where(m < n, (-1.0) ** (n - m), 1.0)
    out = (sign[..., None] * mag) * powers[(m - n) + c - 1]
    return out.reshape((c, c) + shape)


def displacement_matrix(q: float, p: float, cutoff: int) -> np.ndarray:
    """Truncated Glauber matrix of ``D(q, p)`` with ``alpha = (q + i p)/sqrt(2)``."""
    return displacement_elements(complex(q, p) / math.sqrt(2.0), cutoff)


def annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), 1)


def position_operator(cutoff: int) -> np.ndarray:
    a = annihilation(cutoff)
    return (a + a.T) / math.sqrt(2.0)


def momentum_operator(cutoff: int) -> np.ndarray:
    a = annihilation(cutoff)
    return (a - a.T) / (1j * math.sqrt(2.0))


def hermite_functions(q, cutoff: int) -> np.ndarray:
    """Position wavefunctions ``psi_n(q)`` of the number states, shape ``(cutoff, len(q))``."""
    q = np.asarray(q, dtype=float).reshape(-1)
    out = np.empty((cutoff, q.size))
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * q * q)
    if cutoff > 1:
        out[1] = math.sqrt(2.0) * q * out[0]
    for n in range(1, cutoff - 1):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * q * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def wigner_kernel(q, p, cutoff: int) -> np.ndarray:
    """Single-mode kernel ``K[m, n](q, p)`` with ``W_rho = sum_mn rho_mn K[m, n]``.

    Displaced-parity form: ``W(x) = c Tr(rho D(x) P D(x)^dag)`` and
    ``D(x) P D(x)^dag = D(2x) P``, so ``K[m, n] = c (-1)^m <n|D(2x)|m>``.
    ``c = sqrt(2 pi)/pi`` puts the total mass at ``sqrt(2 pi)`` per mode, which
    is what the marginal law ``(2 pi)^{-1/2} int W dp = |psi(q)|^2`` demands;
    :func:`wignerctx.wigner.check_normalization` verifies it numerically.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    beta = math.sqrt(2.0) * (q + 1j * p)
    D = displacement_elements(beta, cutoff)
    parity = (-1.0) ** np.arange(cutoff)
    K = np.swapaxes(D, 0, 1) * parity.reshape((cutoff, 1) + (1,) * beta.ndim)
    return (SQRT_2PI / math.pi) * K


# -- multimode bookkeeping -------------------------------------------------------


def as_tensor(matrix: np.ndarray, cutoffs) -> np.ndarray:
    """View a ``(d, d)`` density matrix as ``(c_1..c_M, c_1..c_M)``."""
    cutoffs = tuple(cutoffs)
    return matrix.reshape(cutoffs + cutoffs)


def from_tensor(tensor: np.ndarray) -> np.ndarray:
    d = int(np.prod(tensor.shape[: tensor.ndim // 2]))
    return tensor.reshape(d, d)


def paired(matrix: np.ndarray, cutoffs) -> np.ndarray:
    """Reorder to ``(m_1 n_1, m_2 n_2, ...)`` with each pair flattened: shape ``(c_1^2, ..., c_M^2)``."""
    cutoffs = tuple(cutoffs)
    M = len(cutoffs)
    t = as_tensor(matrix, cutoffs)
    order = [ax for k in range(M) for ax in (k, M + k)]
    t = np.transpose(t, order)
    return t.reshape(tuple(c * c for c in cutoffs))


def active_pairs(pairs: np.ndarray) -> list[np.ndarray]:
    """For each mode, the flattened (m, n) pair indices carrying nonzero weight."""
    out = []
    mag = np.abs(pairs)
    for k in range(pairs.ndim):
        other = tuple(ax for ax in range(pairs.ndim) if ax != k)
        used = np.max(mag, axis=other) if other else mag
        out.append(np.flatnonzero(used > 0))
    return out


def contract_grid(matrix, cutoffs, kernel_fn, counts, chunk: int = POINT_CHUNK, executor=None) -> np.ndarray:
    """``sum rho[m, n] prod_k K_k[m_k, n_k, i_k]`` on a tensor product of per-mode point sets.

    ``kernel_fn(k, start, stop)`` returns the kernel of 0-based mode ``k`` for
    points ``start:stop`` with shape ``(c_k, c_k, stop - start)``; ``counts[k]``
    is the number of points of mode ``k``. The result has shape ``counts`` and is
    complex. Zero rows of the pair tensor are pruned first. The first mode is
    processed in fixed-size chunks (kernels built per chunk), so memory stays
    bounded and the result does not depend on how many workers ``executor`` has.
    """
    cutoffs = tuple(cutoffs)
    M = len(cutoffs)
    T = paired(matrix, cutoffs)
    use = active_pairs(T)
    T = T[np.ix_(*use)]
    for k in range(M - 1, 0, -1):
        flat = kernel_fn(k, 0, counts[k]).reshape(cutoffs[k] ** 2, -1)[use[k]]
        # contract mode k; its point axis goes to the end
        T = np.tensordot(T, flat, axes=([k], [0]))
    # T has shape (a_1, P_M, ..., P_2); contract the first mode chunk by chunk
    rest = T.shape[1:]
    T2 = T.reshape(T.shape[0], -1)
    starts = list(range(0, counts[0], chunk))

    def block(s):
        stop = min(s + chunk, counts[0])
        flat = kernel_fn(0, s, stop).reshape(cutoffs[0] ** 2, -1)[use[0]]
        return flat.T @ T2

    parts = list(executor.map(block, starts)) if executor is not None else [block(s) for s in starts]
    out = np.concatenate(parts, axis=0).reshape((counts[0],) + rest)
    # reorder (P_1, P_M, ..., P_2) -> (P_1, P_2, ..., P_M)
    if M > 2:
        out = np.transpose(out, [0] + list(range(M - 1, 0, -1)))
    return out


def contract_points(matrix, cutoffs, kernels) -> np.ndarray:
    """Like :func:`contract_grid` but all modes share one list of points.

    ``kernels[k]`` has shape ``(c_k, c_k, P)``; returns shape ``(P,)``.
    """
    cutoffs = tuple(cutoffs)
    M = len(cutoffs)
    T = paired(matrix, cutoffs)
    use = active_pairs(T)
    T = T[np.ix_(*use)]
    flat = [kernels[k].reshape(cutoffs[k] ** 2, -1)[use[k]] for k in range(M)]
    T = np.tensordot(T, flat[M - 1], axes=([M - 1], [0]))
    for k in range(M - 2, -1, -1):
        T = np.einsum("...ap,ap->...p", T, flat[k])
    return T


def partial_trace(matrix, cutoffs, keep) -> np.ndarray:
    """Reduced density matrix on the 0-based modes in ``keep`` (kept in order)."""
    cutoffs = tuple(cutoffs)
    M = len(cutoffs)
    keep = list(keep)
    drop = [k for k in range(M) if k not in keep]
    t = as_tensor(matrix, cutoffs)
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = [letters[k] for k in range(M)]
    cols = [letters[k].upper() for k in range(M)]
    for k in drop:
        cols[k] = rows[k]
    out = "".join(rows[k] for k in keep) + "".join(cols[k] for k in keep)
    t = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    d = int(np.prod([cutoffs[k] for k in keep]))
    return t.reshape(d, d)


def apply_local(matrix, cutoffs, mode: int, U) -> np.ndarray:
    """``U rho U^dag`` for a single-mode matrix ``U`` acting on 0-based ``mode``."""
    cutoffs = tuple(cutoffs)
    M = len(cutoffs)
    t = as_tensor(matrix, cutoffs)
    t = np.moveaxis(np.tensordot(U, t, axes=([1], [mode])), 0, mode)
    t = np.moveaxis(np.tensordot(t, U.conj(), axes=([M + mode], [1])), -1, M + mode)
    return from_tensor(t)


def phase_rotate(matrix, cutoffs, mode: int, theta: float) -> np.ndarray:
    """``R(theta) rho R(theta)^dag`` with ``R = exp(i theta n)`` on 0-based ``mode`` (exact)."""
    c = cutoffs[mode]
    return apply_local(matrix, cutoffs, mode, np.diag(np.exp(1j * theta * np.arange(c))))
