"""Sample-set distances (sliced Wasserstein, RBF-kernel MMD) and SVG scatter plots."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from xml.sax.saxutils import escape

import numpy as np

from dddm.rng import derive_rng

DEFAULT_N_PROJ = 256
_MEDIAN_SUBSAMPLE = 2048
_BLOCK = 1024


def _as_set(x, name):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array of points")
    return x


def random_directions(n_proj: int, dim: int, seed: int) -> np.ndarray:
    """``n_proj`` unit vectors drawn uniformly on the sphere, shape (n_proj, dim)."""
    g = derive_rng(seed, "eval").standard_normal((n_proj, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _w2_sorted(a, b):
    """Row-wise 1-D W2 between empirical measures given sorted rows ``a`` (P, n) and ``b`` (P, m)."""
    n, m = a.shape[1], b.shape[1]
    if n == m:
        return np.sqrt(np.mean((a - b) ** 2, axis=1))
    # quantile functions are step functions; integrate over the merged breakpoints
    grid = np.union1d(np.arange(1, n + 1) / n, np.arange(1, m + 1) / m)
    widths = np.diff(grid, prepend=0.0)
    mid = grid - 0.5 * widths
    ia = np.minimum((mid * n).astype(np.int64), n - 1)
    ib = np.minimum((mid * m).astype(np.int64), m - 1)
    return np.sqrt(((a[:, ia] - b[:, ib]) ** 2) @ widths)


def _project(U, X):
    # per-coordinate accumulation instead of a BLAS product: each point's projection
    # is then independent of its row position, so permuted copies sort to identical arrays
    out = np.zeros((U.shape[0], X.shape[0]))
    for k in range(X.shape[1]):
        out += U[:, k, None] * X[None, :, k]
    return out


def sliced_wasserstein(A, B, n_proj: int = DEFAULT_N_PROJ, seed: int = 0) -> float:
    """Mean over random directions of the 1-D 2-Wasserstein distance of the projections."""
    A = _as_set(A, "A")
    B = _as_set(B, "B")
    if len(A) == 0 or len(B) == 0:
        raise ValueError("sample sets must be non-empty")
    if A.shape[1] != B.shape[1]:
        raise ValueError("sample sets have different dimensions")
    if n_proj < 1:
        raise ValueError("n_proj must be positive")
    U = random_directions(n_proj, A.shape[1], seed)
    pa = np.sort(_project(U, A), axis=1)
    pb = np.sort(_project(U, B), axis=1)
    return float(np.mean(_w2_sorted(pa, pb)))


def _sqdist(X, Y):
    d = (X * X).sum(1)[:, None] + (Y * Y).sum(1)[None, :] - 2.0 * X @ Y.T
    return np.maximum(d, 0.0)


def median_bandwidth(A, B, seed: int = 0) -> float:
    """Median pairwise distance over A u B (a seeded subsample when the union is large)."""
    Z = np.concatenate([A, B])
    if len(Z) > _MEDIAN_SUBSAMPLE:
        Z = Z[np.sort(derive_rng(seed, "eval", 1).choice(len(Z), _MEDIAN_SUBSAMPLE, replace=False))]
    iu = np.triu_indices(len(Z), k=1)
    h = float(np.median(np.sqrt(_sqdist(Z, Z)[iu])))
    return h if h > 0 else 1.0


def _kernel_sum(X, Y, gamma, exclude_diag):
    total = 0.0
    for lo in range(0, len(X), _BLOCK):
        K = np.exp(-gamma * _sqdist(X[lo:lo + _BLOCK], Y))
        total += K.sum()
    if exclude_diag:
        total -= len(X)
    return total


def mmd_rbf(A, B, seed: int = 0, bandwidth: float | None = None) -> float:
    """sqrt(max(MMD^2_unbiased, 0)) with k(x, y) = exp(-|x - y|^2 / (2 h^2))."""
    A = _as_set(A, "A")
    B = _as_set(B, "B")
    if len(A) < 2 or len(B) < 2:
        raise ValueError("MMD needs at least two points per set")
    if A.shape[1] != B.shape[1]:
        raise ValueError("sample sets have different dimensions")
    h = median_bandwidth(A, B, seed) if bandwidth is None else float(bandwidth)
    gamma = 1.0 / (2.0 * h * h)
    n, m = len(A), len(B)
    kaa = _kernel_sum(A, A, gamma, True) / (n * (n - 1))
    kbb = _kernel_sum(B, B, gamma, True) / (m * (m - 1))
    kab = _kernel_sum(A, B, gamma, False) / (n * m)
    return float(np.sqrt(max(kaa + kbb - 2.0 * kab, 0.0)))


@dataclass
class EvalReport:
    swd: float
    mmd: float
    n_samples: int
    n_reference: int
    n_proj: int
    seed: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def evaluate(samples, reference, n_proj: int = DEFAULT_N_PROJ, seed: int = 0) -> EvalReport:
    samples = _as_set(samples, "samples")
    reference = _as_set(reference, "reference")
    return EvalReport(
        swd=sliced_wasserstein(samples, reference, n_proj, seed),
        mmd=mmd_rbf(samples, reference, seed),
        n_samples=len(samples),
        n_reference=len(reference),
        n_proj=n_proj,
        seed=seed,
    )


PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")

_W, _H = 560, 480
_LEFT, _TOP, _SIDE = 40.0, 40.0, 400.0


def scatter_svg(sets, path=None, title: str = "") -> str:
    """Equal-aspect scatter of 2-D point sets, one color per set, with a legend.

    ``sets`` is a list of ``(points, label)``.  The view is centered on the
    bounding box of all points, so a lone point lands in the middle of the
    square plot area.  Returns the SVG text and writes it if ``path`` is given.
    """
    arrays = []
    for pts, label in sets:
        pts = np.asarray(pts, dtype=float)
        if pts.size == 0:
            pts = pts.reshape(0, 2)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"scatter plots need 2-D points; set {label!r} has shape {pts.shape}")
        arrays.append((pts, str(label)))
    allpts = np.concatenate([a for a, _ in arrays]) if arrays else np.zeros((0, 2))
    if len(allpts):
        lo, hi = allpts.min(0), allpts.max(0)
        center = 0.5 * (lo + hi)
        half = 0.5 * float(np.max(hi - lo)) * 1.05
    else:
        center = np.zeros(2)
        half = 0.0
    if half <= 0:
        half = 1.0
    cx = _LEFT + _SIDE / 2
    cy = _TOP + _SIDE / 2
    scale = (_SIDE / 2) / half

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_LEFT:.2f}" y="{_TOP:.2f}" width="{_SIDE:.2f}" height="{_SIDE:.2f}" '
        'fill="none" stroke="black" stroke-width="1"/>',
    ]
    if title:
        out.append(f'<text x="{cx:.2f}" y="24" text-anchor="middle" font-family="sans-serif" '
                   f'font-size="14">{escape(title)}</text>')
    for k, (pts, label) in enumerate(arrays):
        color = PALETTE[k % len(PALETTE)]
        out.append(f'<g fill="{color}" fill-opacity="0.6">')
        for x, y in pts:
            px = cx + (x - center[0]) * scale
            py = cy - (y - center[1]) * scale
            out.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="1.5"/>')
        out.append("</g>")
        ly = _TOP + 12 + 18 * k
        out.append(f'<rect x="452" y="{ly - 8:.2f}" width="10" height="10" fill="{color}"/>')
        out.append(f'<text x="468" y="{ly + 1:.2f}" font-family="sans-serif" font-size="12">{escape(label)}</text>')
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    return text
