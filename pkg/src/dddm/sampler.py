"""Fixed-point generation: x <- x_T - F_theta(x, x_T, T), starting from noise."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dddm import micronet
from dddm.micronet import ModelParams
from dddm.rng import derive_rng


@dataclass
class SampleRun:
    steps: int = 1
    count: int = 4096
    seed: int = 0
    log_trajectory: bool = False

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("at least one sampling step is required")
        if self.count < 0:
            raise ValueError("count must be nonnegative")


def initial_noise(seed: int, count: int, dim: int):
    """(x0_init, x_T): two independent standard normal batches, in that draw order."""
    rng = derive_rng(seed, "sample")
    x_init = rng.standard_normal((count, dim))
    x_T = rng.standard_normal((count, dim))
    return x_init, x_T


def sample(params: ModelParams, run: SampleRun):
    """Returns ``(points, trajectory)``.

    ``trajectory`` is ``None`` unless requested, else an array of shape
    ``(steps, count, dim)`` holding iterates 1..steps.  ``x_T`` and the step
    index ``T`` stay fixed; only the conditioning estimate changes.
    """
    x, x_T = initial_noise(run.seed, run.count, params.dim)
    T = params.T
    traj = np.empty((run.steps, run.count, params.dim)) if run.log_trajectory else None
    for n in range(run.steps):
        x = x_T - micronet.forward(params, x, x_T, T)
        if traj is not None:
            traj[n] = x
    return x, traj
