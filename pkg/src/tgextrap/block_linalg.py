"""Blocks of same-shape tensors and the global tensor QR.

A block is an ndarray whose last axis indexes its ``m`` slices, i.e. the
mode-(N+1) stack ``[A_1, ..., A_m]``. The global QR orthonormalizes the
slices under the Frobenius inner product and returns a scalar upper
triangular ``R`` with ``A = Q x_{N+1} R^T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _kernels
from .exceptions import NonFiniteError, RankDeficiencyError, SingularOperatorError, TensorShapeError
from .tensor_core import format_tensor

RANK_TOL = 1e-12


def stack(tensors) -> np.ndarray:
    tensors = [np.asarray(t, dtype=np.float64) for t in tensors]
    if not tensors:
        raise TensorShapeError("cannot stack an empty list")
    shape = tensors[0].shape
    for t in tensors[1:]:
        if t.shape != shape:
            raise TensorShapeError(f"slice shape {t.shape} differs from {shape}")
    return np.stack(tensors, axis=-1)


def width(B: np.ndarray) -> int:
    return B.shape[-1]


def slices(B: np.ndarray) -> list[np.ndarray]:
    return [B[..., j] for j in range(B.shape[-1])]


def _rows(B: np.ndarray) -> np.ndarray:
    # (m, I) contiguous copy: each row is one flattened slice
    return np.ascontiguousarray(B.reshape(-1, B.shape[-1]).T)


def block_apply(B: np.ndarray, x) -> np.ndarray:
    """Sum of ``x_j * slice_j`` (mode-(N+1) vector product)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (B.shape[-1],):
        raise TensorShapeError(f"coefficient vector of length {x.size} for block of width {B.shape[-1]}")
    return B @ x


def block_gram(B: np.ndarray) -> np.ndarray:
    rows = _rows(B)
    return rows @ rows.T


def block_dot_rhs(B: np.ndarray, C: np.ndarray) -> np.ndarray:
    if np.shape(C) != B.shape[:-1]:
        raise TensorShapeError(f"tensor shape {np.shape(C)} does not match slice shape {B.shape[:-1]}")
    return _rows(B) @ np.ravel(C)


@dataclass(frozen=True)
class GlobalQR:
    Q: np.ndarray  # block of orthonormal slices
    R: np.ndarray  # m x m upper triangular, nonnegative diagonal

    def reconstruct(self) -> np.ndarray:
        return self.Q @ self.R


def global_qr(A: np.ndarray, rank_tol: float = RANK_TOL) -> GlobalQR:
    """Modified Gram-Schmidt over the slices of ``A``.

    A reorthogonalization pass runs whenever orthogonalization shrinks a slice
    by more than ``1/sqrt(2)``. Raises ``RankDeficiencyError`` when a slice
    keeps less than ``rank_tol`` of its norm.
    """
    q_rows, R, bad = _kernels.mgs_qr(_rows(A), rank_tol)
    if bad >= 0:
        raise RankDeficiencyError(bad)
    Q = np.ascontiguousarray(q_rows.T).reshape(A.shape)
    return GlobalQR(Q, R)


def lsq_normal_eq(A: np.ndarray, C: np.ndarray, sign: int = 1, qr: GlobalQR | None = None) -> np.ndarray:
    """Minimize ``||A x̄ x - sign*C||_F`` through ``R^T R x = sign * (A ⊡ C)``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if qr is None:
        qr = global_qr(A)
    R = qr.R
    if np.any(np.diag(R) == 0.0):
        raise SingularOperatorError("triangular factor has a zero pivot")
    b = sign * block_dot_rhs(A, C)
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(R))):
        raise NonFiniteError("least-squares data overflowed")
    y = scipy.linalg.solve_triangular(R, b, trans="T", lower=False)
    return scipy.linalg.solve_triangular(R, y, lower=False)


def format_block(B: np.ndarray) -> str:
    """Block text: a width line, then the slice shape in tensor text format
    and all slices' values back to back."""
    m = B.shape[-1]
    stacked = np.moveaxis(B, -1, 0).reshape((m * int(np.prod(B.shape[:-1])),))
    body = format_tensor(B[..., 0]).splitlines()[:2]
    return f"{m}\n" + "\n".join(body) + "\n" + " ".join(f"{v:.17g}" for v in stacked) + "\n"


def parse_block(text: str) -> np.ndarray:
    tokens = text.split()
    m = int(tokens[0])
    order = int(tokens[1])
    shape = tuple(int(t) for t in tokens[2:2 + order])
    values = np.array([float(t) for t in tokens[2 + order:]])
    if values.size != m * int(np.prod(shape)):
        raise TensorShapeError("block text has the wrong number of values")
    return np.moveaxis(values.reshape((m,) + shape), 0, -1)
