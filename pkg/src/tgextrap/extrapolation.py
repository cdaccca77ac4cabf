"""TG-MPE and TG-RRE over a window of tensor iterates, plus a restarted driver.

A window holds ``width + 2`` consecutive terms ``X_n, ..., X_{n+width+1}``.
Both methods return weights ``delta`` summing to one and the extrapolant
``T = sum_i delta_i X_{n+i}``; ``mu`` are the tail sums of ``delta``, so that
also ``T = X_n + sum_j mu_j D_{n+j}``.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .block_linalg import block_apply, lsq_normal_eq, stack
from .exceptions import (
    CoefficientSumError,
    NonFiniteError,
    RankDeficiencyError,
    SingularOperatorError,
    TensorShapeError,
    VanishingSumError,
)
from .tensor_core import fro_norm


class Method(str, enum.Enum):
    MPE = "mpe"
    RRE = "rre"
    ARNOLDI_MPE = "arnoldi-mpe"
    ARNOLDI_RRE = "arnoldi-rre"


@dataclass(frozen=True)
class Window:
    terms: tuple
    skip: int = 0

    def __post_init__(self):
        terms = tuple(np.asarray(t, dtype=np.float64) for t in self.terms)
        if len(terms) < 3:
            raise ValueError("a window needs at least 3 terms (width >= 1)")
        shape = terms[0].shape
        if any(t.shape != shape for t in terms):
            raise TensorShapeError("window terms must share one shape")
        object.__setattr__(self, "terms", terms)

    @property
    def width(self) -> int:
        return len(self.terms) - 2

    @classmethod
    def from_sequence(cls, seq, skip: int, width: int) -> "Window":
        seq = list(seq)
        if len(seq) < skip + width + 2:
            raise ValueError(f"need {skip + width + 2} terms, got {len(seq)}")
        return cls(tuple(seq[skip:skip + width + 2]), skip)


@dataclass(frozen=True)
class ExtrapResult:
    t: np.ndarray
    delta: np.ndarray
    mu: np.ndarray
    gen_residual_norm: float
    method: Method
    theta: Optional[np.ndarray] = None
    # relative gap between the delta- and mu-forms of the combination
    combination_gap: float = 0.0


def differences(window: Window) -> list[np.ndarray]:
    x = window.terms
    return [x[i + 1] - x[i] for i in range(len(x) - 1)]


def second_differences(D) -> list[np.ndarray]:
    if len(D) < 2:
        raise ValueError("need at least two differences")
    return [D[j + 1] - D[j] for j in range(len(D) - 1)]


def _absorb_rounding(delta: np.ndarray) -> np.ndarray:
    # push the sum's rounding error into the smallest weight, where
    # 1 - sum(rest) is computed with an error of at most ulp(1)
    k = int(np.argmin(np.abs(delta)))
    delta[k] = 1.0 - math.fsum(np.delete(delta, k))
    return delta


def snap_mu(mu) -> np.ndarray:
    """Round ``mu`` onto the binary grid of twice its largest magnitude.

    On that grid every difference ``mu_{j-1} - mu_j`` and every tail sum is
    exact in float64, so the weights from ``mu_to_delta`` sum to exactly one
    and convert back to the same ``mu``. The change is below the rounding
    already present in coefficients of that size.
    """
    mu = np.asarray(mu, dtype=np.float64)
    scale = max(1.0, float(np.max(np.abs(mu))) if mu.size else 1.0)
    grid = 2.0 ** (math.frexp(2.0 * scale)[1] - 53)
    return np.round(mu / grid) * grid


def theta_to_delta(theta_partial) -> np.ndarray:
    """Append the leading coefficient 1 and normalize to unit sum."""
    x = np.append(np.asarray(theta_partial, dtype=np.float64), 1.0)
    s = math.fsum(x)
    if abs(s) <= 1e-13 * (1.0 + np.sum(np.abs(x[:-1]))):
        raise VanishingSumError("coefficients sum to zero; extrapolation undefined")
    return _absorb_rounding(x / s)


def mu_to_delta(mu) -> np.ndarray:
    mu = np.asarray(mu, dtype=np.float64)
    delta = np.empty(mu.size + 1)
    delta[0] = 1.0 - mu[0]
    delta[1:-1] = mu[:-1] - mu[1:]
    delta[-1] = mu[-1]
    return _absorb_rounding(delta)


def _check_sum(delta, tol=1e-10):
    delta = np.asarray(delta, dtype=np.float64)
    gap = abs(math.fsum(delta) - 1.0)
    if gap > tol * max(1.0, float(np.max(np.abs(delta)))):
        raise CoefficientSumError(f"weights sum to 1{gap:+.3e}, not 1")


def delta_to_mu(delta) -> np.ndarray:
    delta = np.asarray(delta, dtype=np.float64)
    _check_sum(delta)
    return np.array([math.fsum(delta[j + 1:]) for j in range(delta.size - 1)])


def generalized_residual(window: Window, delta) -> np.ndarray:
    """``sum_i delta_i D_{n+i}``; equals ``B - (I - M) *_N T`` on linear data."""
    _check_sum(delta)
    D = differences(window)
    return block_apply(stack(D), np.asarray(delta, dtype=np.float64))


def combine(terms, delta) -> np.ndarray:
    return block_apply(stack(terms[:len(delta)]), np.asarray(delta, dtype=np.float64))


def _finish(window, D, delta, mu, t, method, theta=None) -> ExtrapResult:
    t_delta = combine(window.terms, delta)
    t_mu = window.terms[0] + block_apply(stack(D[:mu.size]), mu)
    gap = fro_norm(t_delta - t_mu) / max(fro_norm(t), np.finfo(float).tiny)
    gres = fro_norm(block_apply(stack(D[:delta.size]), delta))
    return ExtrapResult(t=t, delta=delta, mu=mu, gen_residual_norm=gres, method=method,
                        theta=theta, combination_gap=gap)


def tg_mpe(window: Window) -> ExtrapResult:
    """Least-squares fit of the minimal-polynomial coefficients.

    Solves ``min ||[D_n..D_{n+w-1}] x̄ theta + D_{n+w}||`` by global QR and the
    normal equations, then normalizes ``(theta, 1)`` to unit sum.
    """
    D = differences(window)
    w = window.width
    block = stack(D[:w])
    theta_partial = lsq_normal_eq(block, D[w], sign=-1)
    mu = snap_mu(delta_to_mu(theta_to_delta(theta_partial)))
    delta = mu_to_delta(mu)
    t = combine(window.terms, delta)
    theta = np.append(theta_partial, 1.0)
    return _finish(window, D, delta, mu, t, Method.MPE, theta=theta)


def tg_rre(window: Window) -> ExtrapResult:
    """Minimize ``||sum delta_i D_{n+i}||`` subject to ``sum delta_i = 1``.

    Solved unconstrained in ``mu`` over second differences:
    ``min ||[W_n..W_{n+w-1}] x̄ mu + D_n||``.
    """
    D = differences(window)
    W = second_differences(D)
    mu = snap_mu(lsq_normal_eq(stack(W), D[0], sign=-1))
    delta = mu_to_delta(mu)
    t = window.terms[0] + block_apply(stack(D[:mu.size]), mu)
    return _finish(window, D, delta, mu, t, Method.RRE)


def extrapolate(window: Window, method) -> ExtrapResult:
    method = Method(method)
    if method is Method.MPE:
        return tg_mpe(window)
    if method is Method.RRE:
        return tg_rre(window)
    from .krylov_arnoldi import extrapolate_arnoldi

    return extrapolate_arnoldi(window, "mpe" if method is Method.ARNOLDI_MPE else "rre")


# ---------------------------------------------------------------------------
# Restarted driver

Step = Callable[[np.ndarray, int], np.ndarray]
Monitor = Callable[[np.ndarray], float]

METHOD_ERRORS = (RankDeficiencyError, VanishingSumError, SingularOperatorError)


@dataclass(frozen=True)
class CycleConfig:
    width: int = 3
    skip: int = 0
    max_cycles: int = 100
    tol: float = 1e-14
    method: Method = Method.RRE

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.width < 1 or self.max_cycles < 1 or self.skip < 0 or not self.tol > 0:
            raise ValueError(f"invalid cycle configuration {self}")

    @property
    def steps_per_cycle(self) -> int:
        return self.skip + self.width + 1


@dataclass
class TraceRecord:
    iteration: int
    rel_error: float
    rel_residual: float
    cpu_seconds: float
    gen_residual_norm: float = math.nan


@dataclass
class SequenceTrace:
    method: str
    records: list = field(default_factory=list)
    x: Optional[np.ndarray] = None
    status: str = "running"
    diagnostic: str = ""
    coefficients: list = field(default_factory=list)  # (delta, mu) per extrapolation

    @property
    def steps(self) -> int:
        return self.records[-1].iteration if self.records else 0


def _eval(fn, x):
    return float(fn(x)) if fn is not None else math.nan


def run_plain(step: Step, x0, max_steps: int, tol: float, *, error_fn: Monitor = None,
              residual_fn: Monitor = None) -> SequenceTrace:
    """Unaccelerated iteration, one record per step."""
    trace = SequenceTrace(method="none")
    x = np.asarray(x0, dtype=np.float64)
    elapsed = 0.0
    d0 = None
    for k in range(max_steps):
        tic = time.perf_counter()
        x_new = step(x, k)
        elapsed += time.perf_counter() - tic
        dnorm = fro_norm(x_new - x)
        d0 = dnorm if d0 is None else d0
        x = x_new
        err = _eval(error_fn, x)
        res = _eval(residual_fn, x) if residual_fn is not None else dnorm / max(d0, 1e-300)
        trace.records.append(TraceRecord(k + 1, err, res, elapsed))
        metric = err if error_fn is not None else res
        if metric <= tol:
            trace.status = "converged"
            break
    else:
        trace.status = "max_steps"
    trace.x = x
    return trace


def run_cycles(step: Step, x0, cfg: CycleConfig, *, error_fn: Monitor = None,
               residual_fn: Monitor = None, max_steps: Optional[int] = None,
               on_window: Optional[Callable[[int, Window], None]] = None) -> SequenceTrace:
    """Restarted extrapolation: each cycle extrapolates a fresh window.

    A cycle takes ``skip + width + 1`` base steps from the current seed and
    replaces the seed by the extrapolant. The run stops once ``error_fn``
    (when given) or the generalized residual relative to the first cycle's
    ``||D_n||`` drops to ``cfg.tol``, after ``cfg.max_cycles`` cycles, or
    when the next cycle would exceed ``max_steps`` base steps. A method
    failure or a non-finite value ends the run with status ``"error"``.
    ``on_window(cycle, window)`` sees every window before extrapolation.
    """
    trace = SequenceTrace(method=cfg.method.value)
    x = np.asarray(x0, dtype=np.float64)
    k = 0
    elapsed = 0.0
    ref = None
    for cycle in range(cfg.max_cycles):
        if max_steps is not None and k + cfg.steps_per_cycle > max_steps:
            trace.status = "max_steps"
            break
        tic = time.perf_counter()
        terms = [x]
        for _s in range(cfg.steps_per_cycle):
            terms.append(step(terms[-1], k))
            k += 1
        window = Window(tuple(terms[cfg.skip:]), cfg.skip)
        if on_window is not None:
            elapsed += time.perf_counter() - tic
            on_window(cycle, window)
            tic = time.perf_counter()
        try:
            if not all(np.all(np.isfinite(t)) for t in window.terms):
                raise NonFiniteError("base iteration produced non-finite values")
            res = extrapolate(window, cfg.method)
            if not np.all(np.isfinite(res.t)):
                raise NonFiniteError("extrapolant is not finite")
        except METHOD_ERRORS + (NonFiniteError,) as exc:
            elapsed += time.perf_counter() - tic
            D = differences(window)
            zero = next((i for i, d in enumerate(D) if not np.any(d)), None)
            if zero is not None:
                # the sequence sits on a fixed point
                x = window.terms[zero + 1]
                trace.status = "fixed_point"
                trace.diagnostic = f"degenerate window (difference {zero} vanishes): {exc}"
                trace.records.append(TraceRecord(k, _eval(error_fn, x), _eval(residual_fn, x), elapsed, 0.0))
            else:
                trace.status = "error"
                trace.diagnostic = f"{type(exc).__name__}: {exc}"
            break
        elapsed += time.perf_counter() - tic
        x = res.t
        if ref is None:
            ref = max(fro_norm(window.terms[1] - window.terms[0]), 1e-300)
        rel_gen = res.gen_residual_norm / ref
        err = _eval(error_fn, x)
        resid = _eval(residual_fn, x) if residual_fn is not None else rel_gen
        trace.records.append(TraceRecord(k, err, resid, elapsed, res.gen_residual_norm))
        trace.coefficients.append((res.delta, res.mu))
        metric = err if error_fn is not None else rel_gen
        if metric <= cfg.tol:
            trace.status = "converged"
            break
    else:
        trace.status = "max_cycles"
    trace.x = x
    return trace
