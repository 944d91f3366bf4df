"""Base distances and the robust wrapper ``sqrt(d + c^2) - c`` used as the training loss.

Wrapping squared L2 gives the pseudo-Huber loss; wrapping the feature
distance is the point-data analogue of wrapping a perceptual distance.
All functions take a single point pair or row-aligned batches.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

IMAGE_SCALE_C = 0.000069


class Base(str, enum.Enum):
    L1 = "l1"
    SQUARED_L2 = "squared_l2"
    FEATURE = "feature"


@dataclass(frozen=True)
class MetricSpec:
    base: Base = Base.SQUARED_L2
    c: float = 0.0
    feature_seed: int = 0
    feature_width: int = 8

    def __post_init__(self):
        object.__setattr__(self, "base", Base(self.base))
        if not self.c >= 0:
            raise ValueError(f"c must be nonnegative, got {self.c}")
        if self.feature_width < 1:
            raise ValueError("feature width must be positive")


@lru_cache(maxsize=32)
def feature_matrix(seed: int, dim: int, width: int) -> np.ndarray:
    """Fixed Gaussian map R^dim -> R^width, scaled by 1/sqrt(width).

    Must be injective for the feature distance to separate points, so
    ``width >= dim`` and full column rank are enforced.
    """
    if width < dim:
        raise ValueError(f"feature width {width} < data dimension {dim}: distance would not separate points")
    A = np.random.default_rng(seed).standard_normal((dim, width)) / np.sqrt(width)
    if np.linalg.matrix_rank(A) < dim:
        raise ValueError("feature map is rank deficient for this seed")
    A.setflags(write=False)
    return A


def _pair(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return x, y


def base_distance(spec: MetricSpec, x, y):
    x, y = _pair(x, y)
    diff = x - y
    if spec.base is Base.L1:
        return np.abs(diff).sum(axis=-1)
    if spec.base is Base.SQUARED_L2:
        return (diff * diff).sum(axis=-1)
    proj = diff @ feature_matrix(spec.feature_seed, diff.shape[-1], spec.feature_width)
    return (proj * proj).sum(axis=-1)


def _base_grad(spec: MetricSpec, diff):
    if spec.base is Base.L1:
        return np.sign(diff)
    if spec.base is Base.SQUARED_L2:
        return 2.0 * diff
    A = feature_matrix(spec.feature_seed, diff.shape[-1], spec.feature_width)
    return 2.0 * (diff @ A) @ A.T


def pseudo_wrap(spec: MetricSpec, d_value):
    d = np.asarray(d_value, dtype=float)
    if np.any(d < 0) or np.any(np.isnan(d)):
        raise ValueError("distance values must be nonnegative")
    c = spec.c
    if c == 0.0:
        out = np.sqrt(d)
        return float(out) if out.ndim == 0 else out
    # sqrt(d + c^2) - c == d / (sqrt(d + c^2) + c); the right side keeps precision when d << c^2
    denom = np.sqrt(d + c * c) + c
    out = np.divide(d, denom, out=np.zeros_like(d), where=denom > 0)
    return float(out) if out.ndim == 0 else out


def loss_and_grad(spec: MetricSpec, prediction, target):
    """Wrapped loss and its gradient w.r.t. ``prediction``.

    grad = d'(prediction) / (2 sqrt(d + c^2)); where d = 0 and c = 0 the
    gradient is defined as zero (a valid subgradient).
    """
    prediction, target = _pair(prediction, target)
    diff = prediction - target
    d = base_distance(spec, prediction, target)
    loss = pseudo_wrap(spec, d)
    root = np.sqrt(np.asarray(d) + spec.c * spec.c)
    scale = np.divide(0.5, root, out=np.zeros_like(root, dtype=float), where=root > 0)
    grad = _base_grad(spec, diff) * np.asarray(scale)[..., None]
    return loss, grad
