"""numba-compiled versions of the hot kernels; see ``_numpy`` for semantics."""

import math

import numpy as np
from numba import njit

_REORTH = 1.0 / math.sqrt(2.0)


@njit(cache=True)
def _dot(a, b):
    s = 0.0
    for t in range(a.shape[0]):
        s += a[t] * b[t]
    return s


@njit(cache=True)
def _axpy(alpha, x, y):
    for t in range(y.shape[0]):
        y[t] -= alpha * x[t]


@njit(cache=True)
def mgs_qr(rows, rank_tol):
    m, n = rows.shape
    Q = np.zeros((m, n))
    R = np.zeros((m, m))
    u = np.empty(n)
    for i in range(m):
        u[:] = rows[i]
        norm0 = math.sqrt(_dot(u, u))
        if norm0 == 0.0:
            return Q, R, i
        for j in range(i):
            r = _dot(Q[j], u)
            R[j, i] = r
            _axpy(r, Q[j], u)
        nrm = math.sqrt(_dot(u, u))
        if nrm < _REORTH * norm0:
            for j in range(i):
                s = _dot(Q[j], u)
                R[j, i] += s
                _axpy(s, Q[j], u)
            nrm = math.sqrt(_dot(u, u))
        if nrm <= rank_tol * norm0:
            return Q, R, i
        R[i, i] = nrm
        for t in range(n):
            Q[i, t] = u[t] / nrm
    return Q, R, -1


@njit(cache=True)
def arnoldi_orth(rows, breakdown_tol):
    m, n = rows.shape
    width = m - 1
    V = np.zeros((m, n))
    H = np.zeros((m, width))
    beta = math.sqrt(_dot(rows[0], rows[0]))
    for t in range(n):
        V[0, t] = rows[0, t] / beta
    y = np.empty(n)
    for k in range(1, m):
        y[:] = rows[k]
        norm0 = math.sqrt(_dot(y, y))
        for j in range(k):
            h = _dot(V[j], y)
            H[j, k - 1] = h
            _axpy(h, V[j], y)
        nrm = math.sqrt(_dot(y, y))
        if nrm < _REORTH * norm0:
            for j in range(k):
                s = _dot(V[j], y)
                H[j, k - 1] += s
                _axpy(s, V[j], y)
            nrm = math.sqrt(_dot(y, y))
        H[k, k - 1] = nrm
        if nrm <= breakdown_tol * beta:
            return V, H, k, True
        for t in range(n):
            V[k, t] = y[t] / nrm
    return V, H, width, False


@njit(cache=True)
def cp_sym_eval(V):
    n, r = V.shape
    T = np.empty((n, n, n))
    for i in range(n):
        for j in range(i, n):
            for l in range(j, n):
                s = 0.0
                for a in range(r):
                    s += V[i, a] * V[j, a] * V[l, a]
                T[i, j, l] = s
                T[i, l, j] = s
                T[j, i, l] = s
                T[j, l, i] = s
                T[l, i, j] = s
                T[l, j, i] = s
    return T


@njit(cache=True)
def completion_loss_grad(V, idx, vals):
    n, r = V.shape
    grad = np.zeros((n, r))
    loss = 0.0
    for p in range(idx.shape[0]):
        i = idx[p, 0]
        j = idx[p, 1]
        l = idx[p, 2]
        s = 0.0
        for a in range(r):
            s += V[i, a] * V[j, a] * V[l, a]
        e = s - vals[p]
        loss += e * e
        e2 = 2.0 * e
        for a in range(r):
            grad[i, a] += e2 * V[j, a] * V[l, a]
            grad[j, a] += e2 * V[i, a] * V[l, a]
            grad[l, a] += e2 * V[i, a] * V[j, a]
    return loss, grad
