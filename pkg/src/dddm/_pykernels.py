"""Numpy reference versions of the hot kernels.

Signatures match ``_ckernels.pyx`` one for one; ``kernels`` picks a backend at
import time.  In-place kernels mutate their first array argument(s).
"""
from __future__ import annotations

import numpy as np

_SERIES_CUTOFF = 1e-2


def silu(z):
    """Return ``(z * sigmoid(z), sigmoid(z))``; the sigmoid is cached for backward."""
    sig = 1.0 / (1.0 + np.exp(-z))
    return z * sig, sig


def silu_backward(dout, z, sig):
    return dout * sig * (1.0 + z * (1.0 - sig))


def adam_update(p, g, m, v, lr, beta1, beta2, eps, step):
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    mhat = m / (1.0 - beta1**step)
    vhat = v / (1.0 - beta2**step)
    p -= lr * mhat / (np.sqrt(vhat) + eps)


def ema_update(shadow, p, decay):
    if decay == 0.0:
        shadow[...] = p
        return
    shadow += (1.0 - decay) * (p - shadow)


def ramp_beta(s, beta_min, beta_max, T):
    """Continuous per-unit-time beta: linear from beta_min at s=0 to beta_max at s=T."""
    return beta_min + np.asarray(s, dtype=float) * ((beta_max - beta_min) / T)


def rate(s, beta_min, beta_max, T):
    """Log-rescaled rate -log(1 - beta(s)); one unit of time multiplies the signal variance by 1 - beta."""
    return -np.log1p(-ramp_beta(s, beta_min, beta_max, T))


def neg_log_alpha_bar(t, beta_min, beta_max, T):
    """Integral of ``rate`` over [0, t], evaluated in closed form.

    With u = 1 - beta(s) linear in s, the mean of -log(u) over an interval
    with midpoint m and relative half-width r is -log(m) + S(r), where
    S(r) = -[(1+r)log(1+r) - (1-r)log(1-r) - 2r] / (2r).  For small r
    the bracket cancels badly, so S uses its even power series there.
    """
    t = np.asarray(t, dtype=float)
    k = (beta_max - beta_min) / T
    m = 1.0 - (beta_min + 0.5 * k * t)
    r = 0.5 * k * t / m
    r2 = r * r
    series = r2 * (1.0 / 6.0 + r2 * (1.0 / 20.0 + r2 * (1.0 / 42.0 + r2 * (1.0 / 72.0))))
    with np.errstate(divide="ignore", invalid="ignore"):
        closed = -((1.0 + r) * np.log1p(r) - (1.0 - r) * np.log1p(-r) - 2.0 * r) / (2.0 * r)
    s = np.where(r < _SERIES_CUTOFF, series, closed)
    return t * (-np.log(m) + s)


def _gaussian_drift(x, s, mu, sigma2, beta_min, beta_max, T):
    # x: (M, D); s: (M,)
    lam = rate(s, beta_min, beta_max, T)[:, None]
    abar = np.exp(-neg_log_alpha_bar(s, beta_min, beta_max, T))[:, None]
    var = abar * sigma2 + (1.0 - abar)
    score = -(x - np.sqrt(abar) * mu) / var
    return -0.5 * lam * (x + score)


def rk4_vp_gaussian(x, t_start, mu, sigma2, beta_min, beta_max, T, n_steps):
    """Integrate the Gaussian-data probability-flow ODE from ``t_start`` (per row) down to 0."""
    x = np.array(x, dtype=float, copy=True)
    t_start = np.asarray(t_start, dtype=float)
    mu = np.asarray(mu, dtype=float)
    h = -(t_start / n_steps)
    hc = h[:, None]
    s = t_start.copy()
    args = (mu, sigma2, beta_min, beta_max, T)
    for i in range(n_steps):
        k1 = _gaussian_drift(x, s, *args)
        k2 = _gaussian_drift(x + 0.5 * hc * k1, s + 0.5 * h, *args)
        k3 = _gaussian_drift(x + 0.5 * hc * k2, s + 0.5 * h, *args)
        # the last step lands on 0 exactly instead of accumulating round-off
        s_next = t_start * (1.0 - (i + 1) / n_steps)
        k4 = _gaussian_drift(x + hc * k3, s_next, *args)
        x += (hc / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        s = s_next
    return x
