"""Training with a per-sample estimate bank.

Each training point ``i`` carries the model's latest guess ``bank[i]`` of
its clean value.  An epoch visits every point once: noise it to a random
step, predict ``x_t - F_theta(bank[i], x_t, t)``, score the prediction
against the true point, take an Adam step on the batch, and write the
(pre-step) prediction back into the bank for the next epoch.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from dddm import micronet
from dddm.metrics import MetricSpec, loss_and_grad
from dddm.micronet import AdamState, EmaParams, ModelParams
from dddm.rng import derive_rng
from dddm.schedule import Schedule, perturb


class TrainingDivergedError(FloatingPointError):
    """Non-finite loss; ``snapshot`` holds enough context to reproduce the batch."""

    def __init__(self, message, snapshot):
        super().__init__(message)
        self.snapshot = snapshot


@dataclass
class EstimateBank:
    estimates: np.ndarray
    epoch: int = 0
    seed: int = 0

    @classmethod
    def initial(cls, n: int, dim: int, seed: int) -> EstimateBank:
        """Epoch-0 bank: standard normal draws from the seed's ``bank`` stream."""
        est = derive_rng(seed, "bank").standard_normal((n, dim))
        return cls(est, 0, seed)

    def __len__(self):
        return self.estimates.shape[0]


def bank_memory_bytes(bank_or_n, dim: int | None = None, bytes_per_scalar: int = 8) -> int:
    """Storage for the bank: N * D * bytes per scalar.

    Accepts an :class:`EstimateBank` (then ``dim`` comes from it) or a bare ``N``.
    """
    if isinstance(bank_or_n, EstimateBank):
        n, d = bank_or_n.estimates.shape
    else:
        n, d = int(bank_or_n), int(dim)
    return n * d * int(bytes_per_scalar)


@dataclass
class TrainConfig:
    T: int = 1000
    beta_min: float = 1e-4
    beta_max: float = 0.02
    epochs: int = 200
    batch_size: int = 256
    lr: float = 1e-3
    metric: MetricSpec = field(default_factory=MetricSpec)
    ema_decay: float = 0.995
    seed: int = 0
    checkpoint_every: int = 0

    def validate(self, n_data: int | None = None) -> None:
        for name in ("T", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        if self.lr < 0:
            raise ValueError("lr must be nonnegative")
        if n_data is not None and self.batch_size > n_data:
            raise ValueError(f"batch_size {self.batch_size} exceeds dataset size {n_data}")


@dataclass
class EpochRecord:
    epoch: int
    mean_loss: float
    mean_drift: float
    seconds: float
    bank_bytes: int
    # per-sample (t, eps) in dataset order; only kept when requested
    draws: tuple | None = field(default=None, repr=False)


@dataclass
class TrainState:
    params: ModelParams
    ema: EmaParams
    adam: AdamState
    bank: EstimateBank

    @classmethod
    def fresh(cls, n: int, dim: int, cfg: TrainConfig, *, hidden=micronet.DEFAULT_HIDDEN,
              embed_dim: int = micronet.DEFAULT_EMBED) -> TrainState:
        params = micronet.init_params(dim, derive_rng(cfg.seed, "init"), hidden=hidden,
                                      embed_dim=embed_dim, T=cfg.T)
        return cls(params, EmaParams.track(params, cfg.ema_decay), AdamState.zeros(params),
                   EstimateBank.initial(n, dim, cfg.seed))


def f_theta(params: ModelParams, x0_est, x_t, t):
    """The denoising map x_t - F_theta(x0_est, x_t, t)."""
    return np.asarray(x_t, dtype=float) - micronet.forward(params, x0_est, x_t, t)


def epoch_draws(seed: int, epoch: int, n: int, dim: int, T: int):
    """Visiting order, steps and noise for one epoch; a pure function of (seed, epoch)."""
    rng = derive_rng(seed, "train", epoch)
    order = rng.permutation(n)
    steps = rng.integers(1, T + 1, size=n)
    eps = rng.standard_normal((n, dim))
    return order, steps, eps


def train_epoch(state: TrainState, points: np.ndarray, sched: Schedule, cfg: TrainConfig, *,
                keep_draws: bool = False) -> EpochRecord:
    """One full shuffled pass; mutates ``state`` and returns the epoch's record.

    ``steps[i]`` and ``eps[i]`` belong to dataset row ``i`` regardless of the
    visiting order, so a sample's draw can be replayed from (seed, epoch).
    """
    points = np.asarray(points, dtype=float)
    n, dim = points.shape
    bank = state.bank
    if bank.estimates.shape != points.shape:
        raise ValueError("estimate bank is not aligned with the dataset")
    cfg.validate(n)
    start = time.perf_counter()
    order, steps, eps = epoch_draws(cfg.seed, bank.epoch, n, dim, sched.T)
    new_estimates = bank.estimates.copy()
    loss_sum = 0.0
    for lo in range(0, n, cfg.batch_size):
        idx = order[lo:lo + cfg.batch_size]
        x0 = points[idx]
        t = steps[idx]
        x_t = perturb(x0, t, eps[idx], sched)
        est = bank.estimates[idx]
        out, cache = micronet.forward(state.params, est, x_t, t, return_cache=True)
        pred = x_t - out
        loss, g_pred = loss_and_grad(cfg.metric, pred, x0)
        if not np.all(np.isfinite(loss)):
            raise TrainingDivergedError(
                f"non-finite loss at epoch {bank.epoch}, batch starting at {lo}",
                {"epoch": bank.epoch, "batch_start": lo, "indices": idx.copy(), "steps": t.copy(),
                 "loss": np.asarray(loss).copy(), "params_finite": bool(np.all(np.isfinite(state.params.flat)))},
            )
        loss_sum += float(np.sum(loss))
        # pred = x_t - F, so dL/dF = -dL/dpred; the batch loss is a mean
        grads = micronet.backward(state.params, est, x_t, t, -g_pred / len(idx), cache=cache)
        if cfg.lr > 0:
            micronet.adam_step(state.params, grads, cfg.lr, state.adam)
        micronet.ema_update(state.ema, state.params)
        new_estimates[idx] = pred
    drift = np.linalg.norm(new_estimates - bank.estimates, axis=1).mean()
    bank.estimates = new_estimates
    bank.epoch += 1
    return EpochRecord(
        epoch=bank.epoch,
        mean_loss=loss_sum / n,
        mean_drift=float(drift),
        seconds=time.perf_counter() - start,
        bank_bytes=bank_memory_bytes(bank),
        draws=(steps, eps) if keep_draws else None,
    )


def train(state: TrainState, points, sched: Schedule, cfg: TrainConfig, *, callback=None) -> list[EpochRecord]:
    """Run ``cfg.epochs`` epochs; ``callback(state, record)`` fires after each."""
    report = []
    for _ in range(cfg.epochs):
        rec = train_epoch(state, points, sched, cfg)
        report.append(rec)
        if callback is not None:
            callback(state, rec)
    return report
