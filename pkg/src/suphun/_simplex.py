"""Dense two-phase simplex (Bland's rule) for discrete Chebyshev problems.

Solves ``min_c max_k (G_k . c - g_k)`` with ``c`` free. The same source runs
under numba or as plain numpy, see ``_jit``.
"""
import numpy as np

from ._jit import maybe_njit

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2
INFEASIBLE = 3


@maybe_njit
def _pivot(T, row, col):
    piv = T[row, :] / T[row, col]
    colv = T[:, col].copy()
    T -= np.outer(colv, piv)
    T[row, :] = piv


@maybe_njit
def _run_phase(T, basis, n_enter, eps, max_iter):
    m = T.shape[0] - 1
    last = T.shape[1] - 1
    for _ in range(max_iter):
        col = -1
        for j in range(n_enter):
            if T[m, j] < -eps:
                col = j
                break
        if col < 0:
            return OPTIMAL
        row = -1
        best = np.inf
        for i in range(m):
            a = T[i, col]
            if a > eps:
                ratio = T[i, last] / a
                if row < 0 or ratio < best - 1e-12 * (1.0 + abs(best)):
                    row = i
                    best = ratio
                elif abs(ratio - best) <= 1e-12 * (1.0 + abs(best)) and basis[i] < basis[row]:
                    row = i
                    best = ratio
        if row < 0:
            return UNBOUNDED
        _pivot(T, row, col)
        basis[row] = col
    return ITERATION_LIMIT


@maybe_njit
def minimax_lp(G, g, eps):
    """Vertex solution of ``min t s.t. G c - g <= t``; returns ``(c, t, status)``."""
    M, D = G.shape
    nv = 2 * D + 2 + M
    n_art = 0
    for k in range(M):
        if g[k] < 0.0:
            n_art += 1
    ncol = nv + n_art
    T = np.zeros((M + 1, ncol + 1))
    basis = np.empty(M, dtype=np.int64)
    a_col = nv
    for k in range(M):
        sgn = 1.0 if g[k] >= 0.0 else -1.0
        T[k, :D] = sgn * G[k, :]
        T[k, D : 2 * D] = -sgn * G[k, :]
        T[k, 2 * D] = -sgn
        T[k, 2 * D + 1] = sgn
        T[k, 2 * D + 2 + k] = sgn
        T[k, ncol] = sgn * g[k]
        if sgn > 0.0:
            basis[k] = 2 * D + 2 + k
        else:
            T[k, a_col] = 1.0
            basis[k] = a_col
            a_col += 1
    # phase 1: minimize the sum of artificials
    for k in range(M):
        if basis[k] >= nv:
            T[M, :] -= T[k, :]
    for j in range(nv, ncol):
        T[M, j] = 0.0
    max_iter = 50 * (M + ncol) + 1000
    status = _run_phase(T, basis, nv, eps, max_iter)
    if status != OPTIMAL:
        return np.zeros(D), np.inf, status
    scale = 1.0
    for k in range(M):
        scale = max(scale, abs(g[k]))
    if -T[M, ncol] > 1e-7 * scale:
        return np.zeros(D), np.inf, INFEASIBLE
    # drive zero-level artificials out of the basis
    for k in range(M):
        if basis[k] >= nv:
            for j in range(nv):
                if abs(T[k, j]) > eps:
                    _pivot(T, k, j)
                    basis[k] = j
                    break
    # phase 2: minimize t = t_plus - t_minus
    cost = np.zeros(nv)
    cost[2 * D] = 1.0
    cost[2 * D + 1] = -1.0
    T[M, :] = 0.0
    for j in range(nv):
        T[M, j] = cost[j]
    for k in range(M):
        b = basis[k]
        if b < nv and cost[b] != 0.0:
            T[M, :] -= cost[b] * T[k, :]
    for j in range(nv, ncol):
        T[M, j] = 0.0
    status = _run_phase(T, basis, nv, eps, max_iter)
    if status != OPTIMAL:
        return np.zeros(D), np.inf, status
    vals = np.zeros(nv)
    for k in range(M):
        if basis[k] < nv:
            vals[basis[k]] = T[k, ncol]
    c = vals[:D] - vals[D : 2 * D]
    t = vals[2 * D] - vals[2 * D + 1]
    return c, t, OPTIMAL


@maybe_njit
def min_norm_polish(G, g, c):
    """Minimum-norm point of the active face at ``c``, kept only if still optimal."""
    resid = G @ c - g
    t = resid.max()
    scale = 1.0
    for k in range(g.shape[0]):
        scale = max(scale, abs(g[k]))
    tol = 1e-9 * max(scale, abs(t))
    n_act = 0
    for k in range(resid.shape[0]):
        if resid[k] >= t - tol:
            n_act += 1
    Ga = np.empty((n_act, G.shape[1]))
    ga = np.empty(n_act)
    i = 0
    for k in range(resid.shape[0]):
        if resid[k] >= t - tol:
            Ga[i, :] = G[k, :]
            ga[i] = g[k] + t
            i += 1
    c0 = np.linalg.lstsq(Ga, ga, rcond=1e-12)[0]
    t0 = (G @ c0 - g).max()
    if t0 <= t + tol and np.sum(c0 * c0) <= np.sum(c * c) + tol:
        return c0, t0
    return c, t


@maybe_njit
def fit_counts_batch(A, N, eps):
    """Per-row minimizers of ``max_s |N[i, s] - (A c)_s|``.

    Rows with no counts get ``c = 0``. Returns ``(C, F, status)``.
    """
    m, S = N.shape
    D = A.shape[1]
    C = np.zeros((m, D))
    F = np.zeros(m)
    status = np.zeros(m, dtype=np.int64)
    G = np.empty((2 * S, D))
    G[:S, :] = -A
    G[S:, :] = A
    g = np.empty(2 * S)
    for i in range(m):
        if N[i, :].max() <= 0.0:
            continue
        g[:S] = -N[i, :]
        g[S:] = N[i, :]
        c, t, st = minimax_lp(G, g, eps)
        status[i] = st
        if st != OPTIMAL:
            F[i] = np.inf
            continue
        c, t = min_norm_polish(G, g, c)
        C[i, :] = c
        F[i] = t
    return C, F, status
