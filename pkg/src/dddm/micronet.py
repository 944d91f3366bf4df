"""Small conditioned MLP ``F_theta(x0_est, x_t, t)`` with hand-written reverse mode.

Parameters live in one flat float64 vector so the optimizer, the EMA and the
checkpoint writer each touch a single contiguous buffer.  Layout, layer by
layer: ``W`` of shape ``(fan_in, fan_out)`` in row-major order, then ``b`` of
shape ``(fan_out,)``.

Network input is ``concat(x_t, x0_est, embed(t))`` of width ``2 D + E``; the
hidden layers use SiLU, the output layer is affine with width ``D``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from dddm import kernels

DEFAULT_HIDDEN = (128, 128, 128)
DEFAULT_EMBED = 32
LONG_EMA_DECAY = 0.9999


class NonFiniteGradientError(FloatingPointError):
    """Raised instead of applying an optimizer step with NaN/inf gradients."""


def time_embedding(t, E: int, T: int) -> np.ndarray:
    """Sinusoidal features of the 1-based step ``t``.

    Interleaved ``(sin(w_k t), cos(w_k t))`` pairs; the ``E/2`` periods
    ``2 pi / w_k`` are log-spaced from 4 to ``4 T``.  Scalar ``t`` gives a
    vector of length ``E``, an array of steps gives ``(len(t), E)``.
    """
    if E <= 0 or E % 2:
        raise ValueError(f"embedding width must be a positive even integer, got {E}")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 1) or np.any(t_arr > T):
        raise ValueError(f"step index out of range 1..{T}")
    half = E // 2
    if half == 1:
        periods = np.array([4.0])
    else:
        periods = 4.0 * float(T) ** (np.arange(half) / (half - 1))
    omega = 2.0 * np.pi / periods
    angles = t_arr[..., None] * omega
    out = np.empty(angles.shape[:-1] + (E,))
    out[..., 0::2] = np.sin(angles)
    out[..., 1::2] = np.cos(angles)
    return out


@dataclass
class ModelParams:
    """Weights of ``F_theta``; ``flat`` owns the storage, ``layers()`` returns views."""

    dim: int
    embed_dim: int
    hidden: tuple[int, ...]
    T: int
    flat: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        self.flat = np.ascontiguousarray(self.flat, dtype=np.float64)
        if self.flat.shape != (param_count(self.dim, self.embed_dim, self.hidden),):
            raise ValueError("flat parameter vector has the wrong length for this architecture")

    @property
    def widths(self) -> tuple[int, ...]:
        return (2 * self.dim + self.embed_dim,) + self.hidden + (self.dim,)

    def layers(self, flat=None):
        """``[(W, b), ...]`` as views into ``flat`` (default: the parameters)."""
        return _split(self.flat if flat is None else flat, self.widths)

    def copy(self) -> ModelParams:
        return ModelParams(self.dim, self.embed_dim, self.hidden, self.T, self.flat.copy())

    def zeros_like(self) -> ModelParams:
        return ModelParams(self.dim, self.embed_dim, self.hidden, self.T, np.zeros_like(self.flat))

    def same_shape(self, other: ModelParams) -> bool:
        return (self.dim, self.embed_dim, self.hidden, self.T) == (
            other.dim, other.embed_dim, other.hidden, other.T)


def param_count(dim: int, embed_dim: int, hidden) -> int:
    widths = (2 * dim + embed_dim,) + tuple(hidden) + (dim,)
    return sum(a * b + b for a, b in zip(widths[:-1], widths[1:]))


def _split(flat, widths):
    out = []
    pos = 0
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        W = flat[pos:pos + fan_in * fan_out].reshape(fan_in, fan_out)
        pos += fan_in * fan_out
        b = flat[pos:pos + fan_out]
        pos += fan_out
        out.append((W, b))
    return out


def init_params(dim: int, rng: np.random.Generator, *, hidden=DEFAULT_HIDDEN,
                embed_dim: int = DEFAULT_EMBED, T: int = 1000, final_scale: float = 0.1) -> ModelParams:
    """Uniform fan-in init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)); zero biases.

    The output layer is shrunk by ``final_scale`` so early outputs are small
    and ``x_t - F`` starts close to ``x_t``.
    """
    if embed_dim % 2:
        raise ValueError("embedding width must be even")
    params = ModelParams(dim, embed_dim, tuple(hidden), T, np.zeros(param_count(dim, embed_dim, hidden)))
    layers = params.layers()
    for i, (W, _) in enumerate(layers):
        bound = 1.0 / np.sqrt(W.shape[0])
        W[...] = rng.uniform(-bound, bound, size=W.shape)
        if i == len(layers) - 1:
            W *= final_scale
    return params


def _inputs(params: ModelParams, x0_est, x_t, t):
    x0_est = np.asarray(x0_est, dtype=float)
    x_t = np.asarray(x_t, dtype=float)
    single = x_t.ndim == 1
    x0_est = np.atleast_2d(x0_est)
    x_t = np.atleast_2d(x_t)
    if x0_est.shape != x_t.shape or x_t.shape[1] != params.dim:
        raise ValueError(
            f"expected x0_est and x_t of shape (B, {params.dim}), got {x0_est.shape} and {x_t.shape}")
    t = np.broadcast_to(np.asarray(t), (x_t.shape[0],))
    emb = time_embedding(t, params.embed_dim, params.T)
    return np.concatenate([x_t, x0_est, emb], axis=1), single


def forward(params: ModelParams, x0_est, x_t, t, *, return_cache: bool = False):
    """Evaluate ``F_theta``; accepts a single point or a batch of rows."""
    h, single = _inputs(params, x0_est, x_t, t)
    cache = [h]
    layers = params.layers()
    for W, b in layers[:-1]:
        z = h @ W + b
        h, sig = kernels.silu(z)
        cache.append((z, sig, h))
    W, b = layers[-1]
    out = h @ W + b
    if single:
        out = out[0]
    if return_cache:
        return out, cache
    return out


def backward(params: ModelParams, x0_est, x_t, t, upstream, cache=None) -> np.ndarray:
    """Gradient of ``sum(upstream * F_theta(...))`` w.r.t. every parameter, summed over the batch.

    Returns a flat vector in the parameter layout.  Nothing is propagated
    into ``x0_est``: the estimate is a constant input.
    """
    if cache is None:
        _, cache = forward(params, x0_est, x_t, t, return_cache=True)
    g_out = np.atleast_2d(np.asarray(upstream, dtype=float))
    if g_out.shape != (cache[0].shape[0], params.dim):
        raise ValueError(f"upstream gradient has shape {g_out.shape}, expected ({cache[0].shape[0]}, {params.dim})")
    grads = np.zeros_like(params.flat)
    glayers = params.layers(grads)
    layers = params.layers()
    n = len(layers)
    delta = g_out
    for i in range(n - 1, -1, -1):
        a_prev = cache[i] if i == 0 else cache[i][2]
        gW, gb = glayers[i]
        np.matmul(a_prev.T, delta, out=gW)
        gb[...] = delta.sum(axis=0)
        if i > 0:
            z, sig, _ = cache[i]
            delta = kernels.silu_backward(delta @ layers[i][0].T, z, sig)
    return grads


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, params: ModelParams, **kw) -> AdamState:
        return cls(np.zeros_like(params.flat), np.zeros_like(params.flat), **kw)


def adam_step(params: ModelParams, grads: np.ndarray, lr: float, state: AdamState) -> ModelParams:
    """Bias-corrected Adam, applied in place; moments persist in ``state``."""
    if not lr > 0:
        raise ValueError("learning rate must be positive")
    grads = np.ascontiguousarray(grads, dtype=np.float64)
    if grads.shape != params.flat.shape or state.m.shape != params.flat.shape:
        raise ValueError("gradient / optimizer state shape does not match the parameters")
    if not np.all(np.isfinite(grads)):
        bad = int(np.count_nonzero(~np.isfinite(grads)))
        raise NonFiniteGradientError(f"{bad} non-finite gradient entries; step refused")
    state.step += 1
    kernels.adam_update(params.flat, grads, state.m, state.v, lr, state.beta1, state.beta2,
                        state.eps, state.step)
    return params


@dataclass
class EmaParams:
    shadow: ModelParams
    decay: float = LONG_EMA_DECAY

    def __post_init__(self):
        if not 0.0 <= self.decay < 1.0:
            raise ValueError(f"EMA decay must lie in [0, 1), got {self.decay}")

    @classmethod
    def track(cls, params: ModelParams, decay: float = LONG_EMA_DECAY) -> EmaParams:
        return cls(params.copy(), decay)


def ema_update(ema: EmaParams, params: ModelParams) -> EmaParams:
    if not ema.shadow.same_shape(params):
        raise ValueError("EMA shadow and parameters have different architectures")
    kernels.ema_update(ema.shadow.flat, params.flat, ema.decay)
    return ema
