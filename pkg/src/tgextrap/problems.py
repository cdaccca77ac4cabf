"""Sequence generators: linear Einstein-product processes, a gradient solver
for ``A *_M X *_N B = C``, symmetric tensor completion, and the sine map.

All generators take explicit seeds and never touch global random state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels
from .exceptions import TensorShapeError
from .tensor_core import (
    einstein_product,
    identity_op,
    solve_flattened_oracle,
    spectral_radius,
    square_modes,
    unflatten,
)


# ---------------------------------------------------------------------------
# Linear processes X_{k+1} = M *_N X_k + B

@dataclass(frozen=True)
class LinearProcess:
    M: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        if square_modes(self.M) != self.B.shape:
            raise TensorShapeError(f"operator modes {square_modes(self.M)} do not match B {self.B.shape}")

    def require_convergent(self) -> "LinearProcess":
        rho = spectral_radius(self.M, tol=1e-10).value
        if rho >= 1.0:
            raise ValueError(f"spectral radius {rho:.6g} >= 1: the process diverges")
        return self

    def limit(self) -> np.ndarray:
        """Fixed point from ``(I - M) *_N X = B`` by a dense solve."""
        modes = self.B.shape
        return solve_flattened_oracle(identity_op(modes) - self.M, self.B)

    def __call__(self, x, k=0):
        return linear_step(self, x)


def linear_step(p: LinearProcess, x: np.ndarray) -> np.ndarray:
    if x.shape != p.B.shape:
        raise TensorShapeError(f"iterate shape {x.shape} does not match {p.B.shape}")
    return einstein_product(p.M, x, x.ndim) + p.B


def make_contractive_op(shape, rho_target: float, seed: int) -> np.ndarray:
    """Seeded Gaussian operator rescaled to spectral radius ``0.95 * rho_target``."""
    if not 0.0 < rho_target < 1.0:
        raise ValueError("rho_target must lie in (0, 1)")
    shape = tuple(shape)
    size = math.prod(shape)
    mat = np.random.default_rng(seed).standard_normal((size, size))
    rho = float(np.max(np.abs(np.linalg.eigvals(mat))))
    mat *= 0.95 * rho_target / rho
    return unflatten(mat, shape, shape)


class MinpolyInstance(NamedTuple):
    M: np.ndarray
    x0: np.ndarray
    limit: np.ndarray

    @property
    def B(self) -> np.ndarray:
        return self.limit - einstein_product(self.M, self.limit, self.limit.ndim)

    @property
    def process(self) -> LinearProcess:
        return LinearProcess(self.M, self.B)


def make_finite_minpoly_op(shape, degree: int, seed: int) -> MinpolyInstance:
    """Operator whose minimal polynomial w.r.t. the first difference has
    exactly ``degree`` roots.

    The flattened operator is ``Q diag(lam) Q^T`` with orthogonal ``Q``.
    The initial error lives in the span of the first ``degree`` eigenvectors,
    whose eigenvalues are distinct and spread over (0.1, 0.9); the remaining
    eigenvalues never act on the sequence.
    """
    shape = tuple(shape)
    size = math.prod(shape)
    if not 1 <= degree <= size:
        raise ValueError(f"degree {degree} impossible for a space of dimension {size}")
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((size, size)))
    active = np.linspace(0.1, 0.9, degree) if degree > 1 else np.array([0.5])
    active = active + rng.uniform(-0.04, 0.04, degree)
    idle = rng.uniform(0.0, 0.9, size - degree)
    lam = np.concatenate([active, idle])
    mat = (Q * lam) @ Q.T
    coeffs = rng.uniform(0.5, 1.5, degree) * rng.choice([-1.0, 1.0], degree)
    err0 = Q[:, :degree] @ coeffs
    limit = rng.standard_normal(size)
    M = unflatten(mat, shape, shape)
    return MinpolyInstance(M, (limit + err0).reshape(shape), limit.reshape(shape))


# ---------------------------------------------------------------------------
# Steepest descent for A *_M X *_N B = C

@dataclass(frozen=True)
class SylvesterLikeProblem:
    """``A *_M X *_N Bt = C`` for X of shape ``x_left + x_right``.

    ``A`` has shape ``out_left + x_left`` and ``Bt`` has shape
    ``x_right + out_right``; ``Bt=None`` (with ``x_right == ()``) gives the
    one-sided equation ``A *_M X = C``.
    """

    A: np.ndarray
    Bt: Optional[np.ndarray]
    C: np.ndarray
    x_left: tuple
    x_right: tuple = ()
    step_size: float = 0.0
    x_exact: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "x_left", tuple(self.x_left))
        object.__setattr__(self, "x_right", tuple(self.x_right))
        xl, xr = self.x_left, self.x_right
        if self.A.shape[self.A.ndim - len(xl):] != xl:
            raise TensorShapeError(f"A {self.A.shape} does not end in {xl}")
        if self.Bt is None and xr:
            raise TensorShapeError("a one-sided problem has no right modes")
        if self.Bt is not None and self.Bt.shape[:len(xr)] != xr:
            raise TensorShapeError(f"Bt {self.Bt.shape} does not start with {xr}")
        out = self.A.shape[:self.A.ndim - len(xl)]
        if self.Bt is not None:
            out = out + self.Bt.shape[len(xr):]
        if self.C.shape != out:
            raise TensorShapeError(f"C has shape {self.C.shape}, expected {out}")

    @property
    def x_shape(self) -> tuple:
        return self.x_left + self.x_right

    @property
    def m_modes(self) -> int:
        return len(self.x_left)

    @property
    def n_modes(self) -> int:
        return len(self.x_right)

    def apply(self, X: np.ndarray) -> np.ndarray:
        out = einstein_product(self.A, X, self.m_modes)
        if self.Bt is not None:
            out = einstein_product(out, self.Bt, self.n_modes)
        return out

    def adjoint(self, Y: np.ndarray) -> np.ndarray:
        n_out = self.A.ndim - self.m_modes
        out = np.tensordot(self.A, Y, axes=(list(range(n_out)), list(range(n_out))))
        if self.Bt is not None:
            # out has shape x_left + out_right; contract out_right with Bt's tail
            k = self.Bt.ndim - self.n_modes
            out = np.tensordot(out, self.Bt, axes=(list(range(self.m_modes, self.m_modes + k)),
                                                   list(range(self.n_modes, self.n_modes + k))))
        return out

    def residual(self, X: np.ndarray) -> np.ndarray:
        return self.apply(X) - self.C

    def rel_residual(self, X: np.ndarray) -> float:
        return float(np.linalg.norm(self.residual(X)) / np.linalg.norm(self.C))

    def rel_error(self, X: np.ndarray, reference: Optional[np.ndarray] = None) -> float:
        ref = self.x_exact if reference is None else reference
        return float(np.linalg.norm(X - ref) / np.linalg.norm(ref))

    def normal_operator(self) -> np.ndarray:
        """Dense ``A^T A`` acting on iterates, shape ``x_shape + x_shape``."""
        n = math.prod(self.x_shape)
        cols = [self.adjoint(self.apply(e.reshape(self.x_shape))).ravel() for e in np.eye(n)]
        return np.array(cols).T.reshape(self.x_shape + self.x_shape)

    def oracle_limit(self) -> np.ndarray:
        """Fixed point of the gradient iteration from a dense solve."""
        return solve_flattened_oracle(self.normal_operator(), self.adjoint(self.C))


def _orthonormal(rng, rows, cols):
    q, _ = np.linalg.qr(rng.uniform(-1.0, 1.0, (rows, cols)))
    return q


def _conditioned_factor(rng, out_shape, in_shape, cond):
    """Orthonormal factors (from uniform random matrices) around log-spaced
    singular values in [1, cond]."""
    m, n = math.prod(out_shape), math.prod(in_shape)
    k = min(m, n)
    s = np.logspace(0.0, math.log10(cond), k)
    U = _orthonormal(rng, m, k)
    V = _orthonormal(rng, n, k)
    return unflatten((U * s) @ V.T, out_shape, in_shape)


def estimate_step_size(p: SylvesterLikeProblem, iters: int = 500, seed: int = 0) -> float:
    """``1 / lambda_max`` of the normal operator, by power iteration."""
    x = np.random.default_rng(seed).standard_normal(p.x_shape)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(iters):
        y = p.adjoint(p.apply(x))
        lam_new = float(np.vdot(x, y))
        x = y / np.linalg.norm(y)
        converged = abs(lam_new - lam) <= 1e-10 * lam_new
        lam = lam_new
        if converged:
            break
    return 1.0 / lam


def make_sylvester_problem(out_left, x_left, x_right=(), out_right=None, *, seed: int,
                           cond: float = 10.0) -> SylvesterLikeProblem:
    """Random well-conditioned instance whose exact solution is all ones.

    ``out_right=None`` builds the one-sided equation. ``cond`` is the
    condition number of the combined operator, split evenly between the two
    factors when both exist.
    """
    rng = np.random.default_rng(seed)
    out_left, x_left, x_right = tuple(out_left), tuple(x_left), tuple(x_right)
    if out_right is None:
        A = _conditioned_factor(rng, out_left, x_left, cond)
        Bt = None
    else:
        c = math.sqrt(cond)
        A = _conditioned_factor(rng, out_left, x_left, c)
        Bt = _conditioned_factor(rng, x_right, tuple(out_right), c)
    x_exact = np.ones(x_left + x_right)
    p = SylvesterLikeProblem(A, Bt, np.zeros(out_left + (tuple(out_right) if Bt is not None else ())),
                             x_left, x_right)
    C = p.apply(x_exact)
    p = SylvesterLikeProblem(A, Bt, C, x_left, x_right, 0.0, x_exact)
    omega = estimate_step_size(p, seed=seed)
    return SylvesterLikeProblem(A, Bt, C, x_left, x_right, omega, x_exact)


def gradient_iteration_step(p: SylvesterLikeProblem, x: np.ndarray) -> np.ndarray:
    """``X - omega * A^T *(A*X*B - C)* B^T``: steepest descent on the residual."""
    if x.shape != p.x_shape:
        raise TensorShapeError(f"iterate shape {x.shape} does not match {p.x_shape}")
    return x - p.step_size * p.adjoint(p.residual(x))


# ---------------------------------------------------------------------------
# Nonlinear sine sequence

def sin_step(x: np.ndarray, n: int) -> np.ndarray:
    return np.sin((1.0 + 1.0 / (n + 1) ** 2) * x)


# ---------------------------------------------------------------------------
# Symmetric tensor completion

def _sorted_gather(base: np.ndarray) -> np.ndarray:
    n = base.shape[0]
    grid = np.sort(np.indices((n, n, n)).reshape(3, -1), axis=0)
    return base[grid[0], grid[1], grid[2]].reshape(n, n, n)


@dataclass(frozen=True)
class CompletionProblem:
    N: int
    r: int
    omega: np.ndarray  # (nnz, 3) observed index triples, 0-based
    v_obs: np.ndarray  # N x N x N, zero outside omega
    eta: float = 0.0
    v_true: Optional[np.ndarray] = None  # ground-truth factors, N x r

    def __post_init__(self):
        if self.omega.shape[0] == 0:
            raise ValueError("observation set is empty")
        if self.v_obs.shape != (self.N,) * 3:
            raise TensorShapeError("observed tensor must be N x N x N")
        object.__setattr__(self, "omega", np.ascontiguousarray(self.omega, dtype=np.int64))
        mask = np.zeros(self.v_obs.shape, dtype=bool)
        mask[tuple(self.omega.T)] = True
        if np.any(self.v_obs[~mask]):
            raise ValueError("observed tensor must vanish outside omega")
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "obs_values", np.ascontiguousarray(self.v_obs[tuple(self.omega.T)]))


def project_omega(p: CompletionProblem, t: np.ndarray) -> np.ndarray:
    if t.shape != p.v_obs.shape:
        raise TensorShapeError(f"tensor shape {t.shape} does not match {p.v_obs.shape}")
    return np.where(p.mask, t, 0.0)


def cp_sym_eval(v: np.ndarray) -> np.ndarray:
    """``sum_k v_k (x) v_k (x) v_k``, exactly symmetric under index permutation."""
    v = np.ascontiguousarray(v, dtype=np.float64)
    if v.ndim == 1:
        v = v[:, None]
    return _kernels.cp_sym_eval(v)


def _check_factors(p, v):
    if v.shape != (p.N, p.r):
        raise TensorShapeError(f"factor matrix shape {v.shape}, expected {(p.N, p.r)}")


def completion_loss(p: CompletionProblem, v: np.ndarray) -> float:
    _check_factors(p, v)
    e = project_omega(p, cp_sym_eval(v) - p.v_obs)
    return float(np.vdot(e, e))


def completion_gradient(p: CompletionProblem, v: np.ndarray) -> np.ndarray:
    _check_factors(p, v)
    _, grad = _kernels.completion_loss_grad(np.ascontiguousarray(v, dtype=np.float64), p.omega, p.obs_values)
    return grad


def completion_gd_step(p: CompletionProblem, v: np.ndarray) -> np.ndarray:
    return v - p.eta * completion_gradient(p, v)


def estimate_curvature(p: CompletionProblem, v: np.ndarray, iters: int = 30, h: float = 1e-6,
                       seed: int = 0) -> float:
    """Dominant Hessian eigenvalue at ``v`` from finite-difference
    Hessian-vector products and power iteration."""
    z = np.random.default_rng(seed).standard_normal(v.shape)
    z /= np.linalg.norm(z)
    lam = 0.0
    for _ in range(iters):
        hz = (completion_gradient(p, v + h * z) - completion_gradient(p, v - h * z)) / (2 * h)
        lam = abs(float(np.vdot(z, hz)))
        nz = np.linalg.norm(hz)
        if nz == 0.0:
            break
        z = hz / nz
    return lam


def initial_factors(N: int, r: int, seed: int) -> np.ndarray:
    v = np.random.default_rng(seed).standard_normal((N, r))
    return v / np.linalg.norm(v, axis=0)


def make_completion_problem(N: int, r: int, p_obs: float = 0.3, noise: float = 1e-3,
                            seed: int = 0) -> tuple[CompletionProblem, np.ndarray]:
    """Random instance plus the seeded starting factors.

    The ground-truth factors have orthonormal columns. Observations are drawn
    per permutation orbit of index triples, so the observed set is symmetric
    with density ``p_obs``; the noise is uniform in
    ``[-noise, noise]``, one draw per orbit. The step size is
    ``1 / (10 L)`` with ``L`` the Hessian curvature estimate at the start.
    """
    rng = np.random.default_rng(seed)
    v_true, _ = np.linalg.qr(rng.standard_normal((N, r)))
    mask = _sorted_gather(rng.uniform(size=(N, N, N))) < p_obs
    if not mask.any():
        mask[0, 0, 0] = True
    noise_t = _sorted_gather(rng.uniform(-noise, noise, (N, N, N)))
    v_obs = np.where(mask, cp_sym_eval(v_true) + noise_t, 0.0)
    omega = np.argwhere(mask)
    v0 = initial_factors(N, r, seed + 1)
    p = CompletionProblem(N, r, omega, v_obs, 0.0, v_true)
    eta = 1.0 / (10.0 * estimate_curvature(p, v0, seed=seed))
    return CompletionProblem(N, r, omega, v_obs, eta, v_true), v0
