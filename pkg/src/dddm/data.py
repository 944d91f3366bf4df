"""Seeded 2-D toy datasets with stable indexing and an on-disk CSV cache."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from dddm.rng import derive_rng, describe

NAMES = ("gauss", "mixture8", "two_moons", "swiss_roll_2d")
NORMALIZE_MODES = ("standard", "scale", "none")

DEFAULT_PARAMS = {
    "gauss": {"mu": [0.0, 0.0], "sigma2": 1.0},
    "mixture8": {"radius": 4.0, "std": 0.3},
    "two_moons": {"noise": 0.05},
    "swiss_roll_2d": {"noise": 0.25},
}


@dataclass
class Normalization:
    """x_normalized = (x_raw - shift) / scale, per dimension."""

    shift: np.ndarray
    scale: np.ndarray

    def apply(self, x):
        return (np.asarray(x, dtype=float) - self.shift) / self.scale

    def invert(self, x):
        return np.asarray(x, dtype=float) * self.scale + self.shift


@dataclass
class Dataset:
    points: np.ndarray = field(repr=False)
    name: str
    seed: int
    params: dict
    norm: Normalization
    purpose: str = "data"

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def _gauss(rng, n, mu, sigma2):
    mu = np.asarray(mu, dtype=float)
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    return mu + np.sqrt(sigma2) * rng.standard_normal((n, mu.shape[0]))


def mixture8_labels(rng, n):
    return rng.integers(0, 8, size=n)


def _mixture8(rng, n, radius, std):
    if radius <= 0 or std < 0:
        raise ValueError("mixture8 needs radius > 0 and std >= 0")
    k = mixture8_labels(rng, n)
    ang = 2.0 * np.pi * k / 8.0
    centers = radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return centers + std * rng.standard_normal((n, 2))


def _two_moons(rng, n, noise):
    n_out = n // 2
    n_in = n - n_out
    a = np.pi * rng.uniform(size=n_out)
    b = np.pi * rng.uniform(size=n_in)
    outer = np.stack([np.cos(a), np.sin(a)], axis=1)
    inner = np.stack([1.0 - np.cos(b), 0.5 - np.sin(b)], axis=1)
    pts = np.concatenate([outer, inner])
    return pts + noise * rng.standard_normal(pts.shape)


def _swiss_roll(rng, n, noise):
    t = 1.5 * np.pi * (1.0 + 2.0 * rng.uniform(size=n))
    pts = np.stack([t * np.cos(t), t * np.sin(t)], axis=1)
    return pts + noise * rng.standard_normal(pts.shape)


def raw_points(name: str, n: int, rng: np.random.Generator, params: dict) -> np.ndarray:
    if name == "gauss":
        return _gauss(rng, n, params["mu"], params["sigma2"])
    if name == "mixture8":
        return _mixture8(rng, n, params["radius"], params["std"])
    if name == "two_moons":
        return _two_moons(rng, n, params["noise"])
    if name == "swiss_roll_2d":
        return _swiss_roll(rng, n, params["noise"])
    raise ValueError(f"unknown dataset {name!r}; choose from {', '.join(NAMES)}")


def resolve_params(name: str, params: dict | None) -> dict:
    if name not in NAMES:
        raise ValueError(f"unknown dataset {name!r}; choose from {', '.join(NAMES)}")
    out = dict(DEFAULT_PARAMS[name])
    out["normalize"] = "standard"
    for key, val in (params or {}).items():
        if key not in out:
            raise ValueError(f"unknown parameter {key!r} for dataset {name}")
        out[key] = val
    if out["normalize"] not in NORMALIZE_MODES:
        raise ValueError(f"normalize must be one of {NORMALIZE_MODES}")
    if name == "gauss":
        out["mu"] = [float(v) for v in out["mu"]]
        out["sigma2"] = float(out["sigma2"])
    return out


def fit_normalization(points: np.ndarray, mode: str) -> Normalization:
    d = points.shape[1]
    shift = np.zeros(d)
    scale = np.ones(d)
    if mode in ("standard", "scale") and points.shape[0] > 1:
        if mode == "standard":
            shift = points.mean(axis=0)
        scale = points.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
    return Normalization(shift, scale)


def make_dataset(name: str, n: int = 8192, seed: int = 0, params: dict | None = None, *,
                 purpose: str = "data", norm: Normalization | None = None) -> Dataset:
    """Draw ``n`` points and normalize them.

    ``normalize = standard`` gives zero mean and unit per-dimension std,
    ``scale`` only divides by the per-dimension std (keeps the mean,
    which the Gaussian oracle needs), ``none`` keeps raw units.
    Passing ``norm`` reuses an existing record, e.g. for held-out data.
    """
    if int(n) != n or n < 1:
        raise ValueError("dataset size must be a positive integer")
    p = resolve_params(name, params)
    rng = derive_rng(seed, purpose)
    pts = raw_points(name, int(n), rng, p)
    if norm is None:
        norm = fit_normalization(pts, p["normalize"])
    return Dataset(norm.apply(pts), name, int(seed), p, norm, purpose)


def gaussian_in_model_space(ds: Dataset) -> tuple[np.ndarray, float]:
    """Population (mu, sigma2) of a ``gauss`` dataset mapped through its normalization.

    Per-dimension scales differ only by sampling noise, so the isotropic
    variance uses their mean square.
    """
    if ds.name != "gauss":
        raise ValueError("only gauss datasets have a closed-form population")
    mu = ds.norm.apply(np.asarray(ds.params["mu"]))
    sigma2 = ds.params["sigma2"] / float(np.mean(ds.norm.scale**2))
    return mu, sigma2


def _fmt(x: float) -> str:
    return repr(float(x))


def write_points_csv(path, points, columns=None, comments=()):
    points = np.asarray(points, dtype=float)
    if columns is None:
        columns = [f"x{i}" for i in range(points.shape[1])]
    with open(path, "w", newline="\n") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write(",".join(columns) + "\n")
        for row in points:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_points_csv(path):
    """Returns ``(points, columns, comments)``; '#' lines are comments, the first other line is the header."""
    comments = []
    columns = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                comments.append(line[1:].strip())
            elif columns is None:
                columns = line.split(",")
            else:
                rows.append([float(v) for v in line.split(",")])
    if columns is None:
        raise ValueError(f"{path}: no header row")
    pts = np.array(rows, dtype=float).reshape(len(rows), len(columns))
    return pts, columns, comments


def save_dataset(ds: Dataset, path) -> None:
    comments = [
        f"name={ds.name}",
        f"seed={ds.seed}",
        f"purpose={ds.purpose}",
        f"rng={describe(ds.seed, ds.purpose)}",
        f"params={json.dumps(ds.params, sort_keys=True)}",
        "shift=" + ",".join(_fmt(v) for v in ds.norm.shift),
        "scale=" + ",".join(_fmt(v) for v in ds.norm.scale),
    ]
    write_points_csv(path, ds.points, comments=comments)


def load_dataset(path) -> Dataset:
    pts, _, comments = read_points_csv(Path(path))
    meta = {}
    for c in comments:
        key, _, val = c.partition("=")
        meta[key] = val
    try:
        norm = Normalization(
            np.array([float(v) for v in meta["shift"].split(",")]),
            np.array([float(v) for v in meta["scale"].split(",")]),
        )
        return Dataset(pts, meta["name"], int(meta["seed"]), json.loads(meta["params"]), norm,
                       meta.get("purpose", "data"))
    except KeyError as exc:
        raise ValueError(f"{path}: missing dataset metadata {exc}") from None
