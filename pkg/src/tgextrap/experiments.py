"""Seeded builders for the four experiment families driven by the CLI."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .problems import (
    cp_sym_eval,
    completion_gd_step,
    completion_loss,
    gradient_iteration_step,
    make_completion_problem,
    make_sylvester_problem,
    sin_step,
)

EXPERIMENTS = ("linear1", "linear2", "completion", "nonlinear")
DEFAULT_DIMS = {
    "linear1": (7,),
    "linear2": (5, 4, 3, 3),
    "completion": (15,),
    "nonlinear": (5,),
}


@dataclass
class Experiment:
    name: str
    step: Callable[[np.ndarray, int], np.ndarray]
    x0: np.ndarray
    error_fn: Callable[[np.ndarray], float]
    residual_fn: Callable[[np.ndarray], float]
    problem: object = None


def _linear(name, p) -> Experiment:
    ref = p.oracle_limit()
    return Experiment(name, lambda x, k: gradient_iteration_step(p, x), np.zeros(p.x_shape),
                      lambda x: p.rel_error(x, ref), p.rel_residual, p)


def build_experiment(name: str, dims=None, seed: int = 0, *, rank: int = 3, p_obs: float = 0.3,
                     noise: float = 1e-3, cond: float = 10.0) -> Experiment:
    """Problem, base step and error/residual monitors for one experiment.

    * ``linear1``  -- ``A *_2 X = C`` with ``A`` of shape ``(d, d, d, d)``.
    * ``linear2``  -- ``A *_2 X *_2 B = C`` with dims ``(p, j1, j2, k)``:
      ``A`` is ``(p, p, j1, j2)``, ``X`` is ``(j1, j2, k, k)``, ``B`` is
      ``(k, k, p, p)``.
    * ``completion`` -- symmetric rank-``rank`` completion of an ``N^3`` tensor;
      the iterate is the ``N x rank`` factor matrix.
    * ``nonlinear`` -- the sine map on an ``N x N x N`` tensor, limit zero.
    """
    if name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}")
    dims = tuple(dims) if dims else DEFAULT_DIMS[name]
    if name == "linear1":
        (d,) = dims
        return _linear(name, make_sylvester_problem((d, d), (d, d), seed=seed, cond=cond))
    if name == "linear2":
        pd, j1, j2, kd = dims
        return _linear(name, make_sylvester_problem((pd, pd), (j1, j2), (kd, kd), (pd, pd),
                                                    seed=seed, cond=cond))
    if name == "completion":
        (n,) = dims
        p, v0 = make_completion_problem(n, rank, p_obs, noise, seed)
        truth = cp_sym_eval(p.v_true)
        tnorm = np.linalg.norm(truth)
        onorm = np.linalg.norm(p.v_obs)
        return Experiment(
            name,
            lambda v, k: completion_gd_step(p, v),
            v0,
            lambda v: float(np.linalg.norm(cp_sym_eval(v) - truth) / tnorm),
            lambda v: float(np.sqrt(completion_loss(p, v)) / onorm),
            p,
        )
    (n,) = dims
    x0 = np.random.default_rng(seed).uniform(-1.0, 1.0, (n, n, n))
    x0norm = np.linalg.norm(x0)
    return Experiment(
        name,
        sin_step,
        x0,
        lambda x: float(np.linalg.norm(x) / x0norm),
        lambda x: float(np.linalg.norm(np.sin(x) - x) / x0norm),
    )
