"""Pure-numpy reference versions of the hot kernels.

Every function here has a twin in ``_numba`` with the same signature and
semantics. Rows of 2-D inputs are flattened tensor slices.
"""

import math

import numpy as np

_REORTH = 1.0 / math.sqrt(2.0)


def mgs_qr(rows, rank_tol):
    """Modified Gram-Schmidt with one conditional reorthogonalization pass.

    Returns ``(Q, R, bad)``; ``bad`` is the index of the first dependent row,
    or -1 when the factorization completed.
    """
    m, n = rows.shape
    Q = np.zeros((m, n))
    R = np.zeros((m, m))
    for i in range(m):
        u = rows[i].copy()
        norm0 = math.sqrt(u @ u)
        if norm0 == 0.0:
            return Q, R, i
        for j in range(i):
            r = Q[j] @ u
            R[j, i] = r
            u -= r * Q[j]
        nrm = math.sqrt(u @ u)
        if nrm < _REORTH * norm0:
            for j in range(i):
                s = Q[j] @ u
                R[j, i] += s
                u -= s * Q[j]
            nrm = math.sqrt(u @ u)
        if nrm <= rank_tol * norm0:
            return Q, R, i
        R[i, i] = nrm
        Q[i] = u / nrm
    return Q, R, -1


def arnoldi_orth(rows, breakdown_tol):
    """Orthogonalize rows[1:] one at a time against the growing basis.

    Returns ``(V, H, k, breakdown)`` where ``H[:, c]`` holds the coordinates
    of ``rows[c + 1]`` in the basis and ``k`` is the number of processed
    columns. On breakdown only ``k`` basis rows are valid.
    """
    m, n = rows.shape
    width = m - 1
    V = np.zeros((m, n))
    H = np.zeros((m, width))
    beta = math.sqrt(rows[0] @ rows[0])
    V[0] = rows[0] / beta
    for k in range(1, m):
        y = rows[k].copy()
        norm0 = math.sqrt(y @ y)
        for j in range(k):
            h = V[j] @ y
            H[j, k - 1] = h
            y -= h * V[j]
        nrm = math.sqrt(y @ y)
        if nrm < _REORTH * norm0:
            for j in range(k):
                s = V[j] @ y
                H[j, k - 1] += s
                y -= s * V[j]
            nrm = math.sqrt(y @ y)
        H[k, k - 1] = nrm
        if nrm <= breakdown_tol * beta:
            return V, H, k, True
        V[k] = y / nrm
    return V, H, width, False


def cp_sym_eval(V):
    n = V.shape[0]
    full = np.einsum("ia,ja,la->ijl", V, V, V)
    # gather from the canonical sorted index so all permutations are bitwise equal
    grid = np.indices((n, n, n)).reshape(3, -1)
    srt = np.sort(grid, axis=0)
    return full[srt[0], srt[1], srt[2]].reshape(n, n, n)


def completion_loss_grad(V, idx, vals):
    """Loss and gradient of the masked symmetric CP fit over observed entries.

    ``idx`` is an (nnz, 3) integer array of observed positions and ``vals``
    the observed values there.
    """
    i, j, l = idx[:, 0], idx[:, 1], idx[:, 2]
    vi, vj, vl = V[i], V[j], V[l]
    e = np.einsum("pa,pa,pa->p", vi, vj, vl) - vals
    loss = float(e @ e)
    grad = np.zeros_like(V)
    two_e = 2.0 * e[:, None]
    np.add.at(grad, i, two_e * vj * vl)
    np.add.at(grad, j, two_e * vi * vl)
    np.add.at(grad, l, two_e * vi * vj)
    return loss, grad
