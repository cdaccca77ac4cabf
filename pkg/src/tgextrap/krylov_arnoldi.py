"""Arnoldi-based TG-MPE / TG-RRE working only with the difference tensors.

The differences ``D_n, ..., D_{n+w}`` are orthonormalized one after another
into ``V_1, V_2, ...``. The raw coefficients ``R`` satisfy
``[D_n .. D_{n+w}] = V x_{N+1} R^T`` with ``R`` upper triangular and
``R[0, 0] = beta = ||D_n||``. With ``R_D`` the leading ``k x k`` block and
``Hraw = R[:, 1:]`` the coordinates of ``D_{n+1} .. D_{n+k}``, the Hessenberg
``H_hat = Hraw R_D^{-1}`` satisfies ``M V_k = V_{k+1} H_hat`` whenever the
sequence comes from ``X -> M *_N X + B``. The extrapolation solves with the
residual-map Hessenberg ``I_hat - H_hat``:

* MPE: ``(I - H_k) y = beta e_1`` (Galerkin),
* RRE: ``min ||(I_hat - H_hat) y - beta e_1||`` (minimal residual, Givens),

and returns ``T = X_n + V_k y``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _kernels
from .block_linalg import _rows, stack
from .exceptions import RankDeficiencyError, SingularOperatorError, TensorShapeError
from .extrapolation import ExtrapResult, Method, Window, _finish, differences, mu_to_delta, snap_mu

BREAKDOWN_TOL = 1e-12
SOLVE_TOL = 1e-14


@dataclass(frozen=True)
class ArnoldiData:
    V: np.ndarray  # block of k+1 (k on breakdown) orthonormal slices
    H_hat: np.ndarray  # (k+1) x k upper Hessenberg
    R: np.ndarray  # (k+1) x (k+1) raw coordinates of D_n..D_{n+k}
    beta: float
    k: int
    breakdown: bool


def arnoldi_build(D, breakdown_tol: float = BREAKDOWN_TOL) -> ArnoldiData:
    """Orthogonalize the differences by modified Gram-Schmidt.

    A subdiagonal entry below ``breakdown_tol * beta`` is a happy breakdown:
    the run stops there and keeps the ``k`` columns processed so far.
    """
    if len(D) < 2:
        raise ValueError("need at least two differences")
    block = stack(D)
    rows = _rows(block)
    beta = float(np.linalg.norm(rows[0]))
    if beta == 0.0:
        raise RankDeficiencyError(0, "first difference vanishes")
    v_rows, hraw, k, breakdown = _kernels.arnoldi_orth(rows, breakdown_tol)
    nv = k if breakdown else k + 1
    V = np.ascontiguousarray(v_rows[:nv].T).reshape(block.shape[:-1] + (nv,))
    R = np.zeros((k + 1, k + 1))
    R[0, 0] = beta
    R[:, 1:] = hraw[:k + 1, :k]
    R_D = R[:k, :k]
    H_hat = scipy.linalg.solve_triangular(R_D, R[:, 1:].T, trans="T", lower=False).T
    H_hat = np.triu(H_hat, -1)
    return ArnoldiData(V=V, H_hat=H_hat, R=R, beta=beta, k=k, breakdown=bool(breakdown))


def mpe_from_hessenberg(H, beta: float, tol: float = SOLVE_TOL) -> np.ndarray:
    """Solve ``H_k y = beta e_1`` for the square part of a Hessenberg matrix.

    Gaussian elimination with partial pivoting restricted to the single
    subdiagonal.
    """
    H = np.array(H, dtype=np.float64, ndmin=2)
    k = H.shape[1]
    A = H[:k, :k].copy()
    b = np.zeros(k)
    b[0] = beta
    scale = max(float(np.max(np.abs(A))), np.finfo(float).tiny)
    for j in range(k - 1):
        if abs(A[j + 1, j]) > abs(A[j, j]):
            A[[j, j + 1], j:] = A[[j + 1, j], j:]
            b[[j, j + 1]] = b[[j + 1, j]]
        if abs(A[j, j]) <= tol * scale:
            raise SingularOperatorError(f"Hessenberg pivot {j} vanishes")
        f = A[j + 1, j] / A[j, j]
        A[j + 1, j:] -= f * A[j, j:]
        b[j + 1] -= f * b[j]
    if abs(A[k - 1, k - 1]) <= tol * scale:
        raise SingularOperatorError(f"Hessenberg pivot {k - 1} vanishes")
    return scipy.linalg.solve_triangular(np.triu(A), b, lower=False)


def rre_from_hessenberg(H_hat, beta: float, tol: float = SOLVE_TOL) -> np.ndarray:
    """Least-squares ``min ||H_hat y - beta e_1||`` by Givens rotations."""
    H = np.array(H_hat, dtype=np.float64, ndmin=2)
    k = H.shape[1]
    if H.shape[0] != k + 1:
        raise TensorShapeError(f"expected a {k + 1} x {k} Hessenberg matrix, got {H.shape}")
    A = H.copy()
    g = np.zeros(k + 1)
    g[0] = beta
    for j in range(k):
        a, b = A[j, j], A[j + 1, j]
        r = np.hypot(a, b)
        if r == 0.0:
            raise RankDeficiencyError(j, f"Hessenberg column {j} vanishes")
        c, s = a / r, b / r
        rot = np.array([[c, s], [-s, c]])
        A[j:j + 2, j:] = rot @ A[j:j + 2, j:]
        g[j:j + 2] = rot @ g[j:j + 2]
    scale = max(float(np.max(np.abs(H))), np.finfo(float).tiny)
    if np.min(np.abs(np.diag(A[:k, :k]))) <= tol * scale:
        raise RankDeficiencyError(int(np.argmin(np.abs(np.diag(A[:k, :k])))), "Hessenberg matrix is rank deficient")
    return scipy.linalg.solve_triangular(np.triu(A[:k, :k]), g[:k], lower=False)


def extrapolate_arnoldi(window: Window, method) -> ExtrapResult:
    """Arnoldi form of TG-MPE (``method="mpe"``) or TG-RRE (``"rre"``).

    On happy breakdown after ``k < width`` columns the weights of the unused
    trailing terms are zero.
    """
    method = Method({"mpe": "arnoldi-mpe", "rre": "arnoldi-rre"}.get(method, method))
    D = differences(window)
    data = arnoldi_build(D)
    k = data.k
    G = np.eye(k + 1, k) - data.H_hat
    if method is Method.ARNOLDI_MPE:
        y = mpe_from_hessenberg(G, data.beta)
    else:
        y = rre_from_hessenberg(G, data.beta)
    t = window.terms[0] + data.V[..., :k] @ y
    # back to coefficients on D_n..D_{n+k-1}
    mu_k = scipy.linalg.solve_triangular(data.R[:k, :k], y, lower=False)
    mu = np.zeros(window.width)
    mu[:k] = mu_k
    mu = snap_mu(mu)
    delta = mu_to_delta(mu)
    return _finish(window, D, delta, mu, t, method)
