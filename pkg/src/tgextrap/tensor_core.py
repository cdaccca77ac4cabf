"""Dense tensors and the Einstein-product algebra.

Tensors are plain float64 ``numpy.ndarray`` objects stored in row-major
(C) order, so the last index varies fastest. With that layout the
matricization ``flatten`` is a reshape: for 1-based indices the row of entry
``(i_1, ..., i_N)`` is ``p = i_N + sum_{k<N} (i_k - 1) * prod_{m>k} I_m``.
Mode arguments in this module are 0-based axes; ``phi_index`` works with the
1-based convention when a hand-checkable index is wanted.

A square operator ("EinsteinOp") is a tensor of shape ``s + s`` acting on
tensors of shape ``s`` through ``einstein_product(op, x, len(s))``.
"""

from __future__ import annotations

import math
import warnings
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .exceptions import NonFiniteError, SingularOperatorError, TensorShapeError

ALGEBRA_TOL = 1e-12
ITERATIVE_TOL = 1e-8


def _as_shape(shape) -> tuple[int, ...]:
    if isinstance(shape, (int, np.integer)):
        shape = (int(shape),)
    shape = tuple(int(s) for s in shape)
    if len(shape) == 0 or any(s < 1 for s in shape):
        raise TensorShapeError(f"invalid shape {shape}: need order >= 1 and extents >= 1")
    return shape


def make_tensor(shape, data) -> np.ndarray:
    """Build a read-only tensor from row-major ``data``.

    >>> make_tensor((2, 2), [1, 2, 3, 4])[0, 1]
    2.0
    """
    shape = _as_shape(shape)
    arr = np.array(data, dtype=np.float64).ravel()
    if arr.size != math.prod(shape):
        raise TensorShapeError(f"data has {arr.size} entries, shape {shape} needs {math.prod(shape)}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("tensor entries must be finite")
    out = arr.reshape(shape)
    out.flags.writeable = False
    return out


def square_modes(op: np.ndarray) -> tuple[int, ...]:
    """Return ``s`` for a square operator of shape ``s + s``."""
    if op.ndim % 2 or op.ndim == 0:
        raise TensorShapeError(f"operator of order {op.ndim} is not square")
    half = op.ndim // 2
    if op.shape[:half] != op.shape[half:]:
        raise TensorShapeError(f"row modes {op.shape[:half]} differ from column modes {op.shape[half:]}")
    return op.shape[:half]


def identity_op(modes) -> np.ndarray:
    modes = _as_shape(modes)
    size = math.prod(modes)
    return np.eye(size).reshape(modes + modes)


def einstein_product(A: np.ndarray, B: np.ndarray, n_modes: int) -> np.ndarray:
    """Contract the trailing ``n_modes`` modes of A with the leading ones of B."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if n_modes < 0 or n_modes > A.ndim or n_modes > B.ndim:
        raise TensorShapeError(f"cannot contract {n_modes} modes of shapes {A.shape}, {B.shape}")
    shared_a = A.shape[A.ndim - n_modes:]
    shared_b = B.shape[:n_modes]
    if shared_a != shared_b:
        raise TensorShapeError(f"trailing modes {shared_a} do not match leading modes {shared_b}")
    return np.tensordot(A, B, axes=n_modes)


def transpose(A: np.ndarray, split: int) -> np.ndarray:
    """Swap the mode blocks ``A.shape[:split]`` and ``A.shape[split:]``."""
    if not 0 < split < A.ndim:
        raise TensorShapeError(f"split {split} invalid for order {A.ndim}")
    axes = tuple(range(split, A.ndim)) + tuple(range(split))
    return np.transpose(A, axes)


def trace(A: np.ndarray) -> float:
    modes = square_modes(A)
    size = math.prod(modes)
    return float(np.trace(A.reshape(size, size)))


def inner(A: np.ndarray, B: np.ndarray) -> float:
    if np.shape(A) != np.shape(B):
        raise TensorShapeError(f"shape mismatch {np.shape(A)} vs {np.shape(B)}")
    return float(np.vdot(A, B))


def fro_norm(A: np.ndarray) -> float:
    return float(np.linalg.norm(np.ravel(A)))


def mode_n_matrix_product(A: np.ndarray, M: np.ndarray, n: int) -> np.ndarray:
    """``A x_n M``: contract axis ``n`` of A with the columns of M (J_n x I_n)."""
    M = np.asarray(M, dtype=np.float64)
    if not 0 <= n < A.ndim:
        raise TensorShapeError(f"mode {n} out of range for order {A.ndim}")
    if M.ndim != 2 or M.shape[1] != A.shape[n]:
        raise TensorShapeError(f"matrix of shape {M.shape} cannot act on mode of extent {A.shape[n]}")
    out = np.tensordot(M, A, axes=([1], [n]))
    return np.moveaxis(out, 0, n)


def mode_n_vector_product(A: np.ndarray, w, n: int) -> np.ndarray:
    """``A x̄_n w``: contract axis ``n`` with a vector, removing that mode."""
    w = np.asarray(w, dtype=np.float64)
    if not 0 <= n < A.ndim:
        raise TensorShapeError(f"mode {n} out of range for order {A.ndim}")
    if w.shape != (A.shape[n],):
        raise TensorShapeError(f"vector of length {w.size} cannot act on mode of extent {A.shape[n]}")
    return np.tensordot(A, w, axes=([n], [0]))


def flatten(A: np.ndarray, split: int) -> np.ndarray:
    """Matricize: rows index modes ``[:split]``, columns the rest.

    ``split == A.ndim`` gives a column vector and ``split == 0`` a row.
    """
    A = np.asarray(A)
    if not 0 <= split <= A.ndim:
        raise TensorShapeError(f"split {split} invalid for order {A.ndim}")
    rows = math.prod(A.shape[:split])
    return A.reshape(rows, -1)


def unflatten(M: np.ndarray, row_shape, col_shape) -> np.ndarray:
    row_shape = tuple(row_shape)
    col_shape = tuple(col_shape)
    M = np.asarray(M)
    if M.shape != (math.prod(row_shape), math.prod(col_shape)):
        raise TensorShapeError(f"matrix {M.shape} does not match shapes {row_shape} x {col_shape}")
    return M.reshape(row_shape + col_shape)


def phi_index(index: Sequence[int], dims: Sequence[int]) -> int:
    """1-based linear position of a 1-based multi-index under ``flatten``."""
    if len(index) != len(dims):
        raise TensorShapeError("index and dims differ in length")
    p = index[-1]
    for k in range(len(dims) - 1):
        p += (index[k] - 1) * math.prod(dims[k + 1:])
    return p


class SpectralRadius(NamedTuple):
    value: float
    converged: bool
    iterations: int

    def __float__(self):
        return self.value


def _ritz_radius(x, ax, matvec):
    """Largest |Ritz value| of the operator on span{x, Ax}; x has unit norm."""
    a11 = x @ ax
    w = ax - a11 * x
    nw = np.linalg.norm(w)
    if nw <= 1e-14 * max(np.linalg.norm(ax), 1e-300):
        return abs(a11)
    q = w / nw
    aq = matvec(q)
    h = np.array([[a11, x @ aq], [q @ ax, q @ aq]])
    return float(np.max(np.abs(np.linalg.eigvals(h))))


def spectral_radius(M: np.ndarray, tol: float = ITERATIVE_TOL, max_iters: int = 10_000,
                    seed: int = 0) -> SpectralRadius:
    """Estimate max |lambda| of a square operator by power iteration.

    Each step refines the iterate and takes Ritz values on the two-dimensional
    space spanned by it and its image, which resolves a dominant real pair
    ``±lambda`` and a dominant complex-conjugate pair alike. Stops when two
    consecutive estimates agree to relative ``tol``.
    """
    modes = square_modes(M)
    size = math.prod(modes)
    mat = M.reshape(size, size)
    matvec = mat.__matmul__
    x = np.random.default_rng(seed).standard_normal(size)
    x /= np.linalg.norm(x)
    prev = None
    for it in range(1, max_iters + 1):
        ax = matvec(x)
        nax = np.linalg.norm(ax)
        if nax == 0.0:
            return SpectralRadius(0.0, True, it)
        est = _ritz_radius(x, ax, matvec)
        if prev is not None and abs(est - prev) <= tol * max(est, 1e-300):
            return SpectralRadius(est, True, it)
        prev = est
        x = ax / nax
    return SpectralRadius(prev, False, max_iters)


def solve_flattened_oracle(M: np.ndarray, rhs: np.ndarray, pivot_tol: float = 1e-13) -> np.ndarray:
    """Dense solve of ``M *_N X = rhs`` through an LU factorization of flatten(M).

    Meant for test oracles and reference limits, not for production solves.
    """
    modes = square_modes(M)
    if rhs.shape != modes:
        raise TensorShapeError(f"rhs shape {rhs.shape} does not match operator modes {modes}")
    size = math.prod(modes)
    mat = M.reshape(size, size)
    with warnings.catch_warnings():
        # singularity is reported below with our own tolerance
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(mat, check_finite=True)
    scale = max(np.max(np.abs(mat)), 1e-300)
    if np.min(np.abs(np.diag(lu))) <= pivot_tol * scale:
        raise SingularOperatorError("flattened operator is singular to tolerance")
    return scipy.linalg.lu_solve((lu, piv), rhs.ravel()).reshape(modes)


# Tensor text format: line 1 = order, line 2 = extents, then row-major values.

def format_tensor(A: np.ndarray) -> str:
    A = np.asarray(A, dtype=np.float64)
    lines = [str(A.ndim), " ".join(str(s) for s in A.shape)]
    lines.append(" ".join(f"{v:.17g}" for v in A.ravel()))
    return "\n".join(lines) + "\n"


def parse_tensor(text: str) -> np.ndarray:
    tokens = text.split()
    if not tokens:
        raise TensorShapeError("empty tensor text")
    order = int(tokens[0])
    shape = tuple(int(t) for t in tokens[1:1 + order])
    values = [float(t) for t in tokens[1 + order:]]
    return make_tensor(shape, values)


def write_tensor(path, A: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write(format_tensor(A))


def read_tensor(path) -> np.ndarray:
    with open(path) as fh:
        return parse_tensor(fh.read())
