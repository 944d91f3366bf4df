"""Discrete DDPM noise schedule, the diffusion kernel, and its continuous-time extension.

Steps are 1-based: ``t`` in ``1..T`` indexes ``betas[t - 1]``; ``t = 0`` is
clean data and is never a valid target for :func:`perturb`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from dddm import _pykernels

DEFAULT_T = 1000
DEFAULT_BETA_MIN = 1e-4
DEFAULT_BETA_MAX = 0.02


@dataclass(frozen=True)
class Schedule:
    T: int
    beta_min: float
    beta_max: float
    betas: np.ndarray = field(repr=False)
    alpha_bars: np.ndarray = field(repr=False)

    def alpha_bar(self, t):
        """Discrete alpha-bar at 1-based step(s) ``t``."""
        t = _check_steps(t, self.T)
        return self.alpha_bars[t - 1]


def linear_schedule(T: int = DEFAULT_T, beta_min: float = DEFAULT_BETA_MIN,
                    beta_max: float = DEFAULT_BETA_MAX) -> Schedule:
    if int(T) != T or T < 1:
        raise ValueError(f"T must be a positive integer, got {T!r}")
    T = int(T)
    if not beta_min > 0:
        raise ValueError(f"beta_min must be positive, got {beta_min}")
    if not beta_max < 1:
        raise ValueError(f"beta_max must be below 1, got {beta_max}")
    if beta_min > beta_max:
        raise ValueError(f"beta_min {beta_min} exceeds beta_max {beta_max}")
    if T == 1:
        betas = np.array([float(beta_min)])
    else:
        betas = beta_min + np.arange(T) / (T - 1) * (beta_max - beta_min)
    alpha_bars = np.cumprod(1.0 - betas)
    betas.setflags(write=False)
    alpha_bars.setflags(write=False)
    return Schedule(T, float(beta_min), float(beta_max), betas, alpha_bars)


def _check_steps(t, T):
    arr = np.asarray(t)
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ValueError("step index must be an integer")
        arr = arr.astype(np.int64)
    if np.any(arr < 1) or np.any(arr > T):
        raise ValueError(f"step index out of range 1..{T}")
    return arr


def perturb(x0, t, eps, sched: Schedule) -> np.ndarray:
    """Sample the diffusion kernel by reparameterization: sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.

    ``x0`` and ``eps`` are a point ``(D,)`` or a batch ``(B, D)``; ``t`` is a
    scalar or one step per row.
    """
    x0 = np.asarray(x0, dtype=float)
    eps = np.asarray(eps, dtype=float)
    if x0.shape != eps.shape:
        raise ValueError(f"x0 shape {x0.shape} does not match eps shape {eps.shape}")
    abar = sched.alpha_bar(t)
    if x0.ndim == 2 and np.ndim(abar) == 1:
        if abar.shape[0] != x0.shape[0]:
            raise ValueError("one step index per row expected")
        abar = abar[:, None]
    return np.sqrt(abar) * x0 + np.sqrt(1.0 - abar) * eps


def continuous_beta(sched: Schedule, t):
    """Instantaneous rate used by the continuous process at real time ``t``.

    The ramp runs linearly from beta_min at t=0 to beta_max at t=T and is
    log-rescaled, -log(1 - beta(t)), so that exp(-integral) over a unit of
    time reproduces the discrete factor 1 - beta.
    """
    t = _check_time(t, sched.T)
    return _pykernels.rate(t, sched.beta_min, sched.beta_max, sched.T)


def continuous_alpha_bar(sched: Schedule, t):
    """exp(-integral_0^t rate(s) ds); exactly 1 at t = 0."""
    t = _check_time(t, sched.T)
    out = np.exp(-_pykernels.neg_log_alpha_bar(t, sched.beta_min, sched.beta_max, sched.T))
    return float(out) if np.ndim(out) == 0 else out


def _check_time(t, T):
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(arr > T) or np.any(np.isnan(arr)):
        raise ValueError(f"time outside [0, {T}]")
    return arr
