"""Flat ``key = value`` run configuration.

One assignment per line, ``#`` starts a comment, unknown keys are errors.
Every key has a default, so an empty file is a valid config.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from dddm.core import TrainConfig
from dddm.metrics import Base, MetricSpec


class ConfigError(ValueError):
    pass


def _opt(default, doc):
    return field(default=default, metadata={"doc": doc})


@dataclass
class RunConfig:
    seed: int = _opt(0, "root seed; data, init, training, sampling and eval streams derive from it")
    out_dir: str = _opt("runs/default", "output directory for checkpoints and reports")
    # data
    dataset: str = _opt("mixture8", "gauss | mixture8 | two_moons | swiss_roll_2d")
    n_samples: int = _opt(8192, "training set size N")
    normalize: str = _opt("standard", "standard (zero mean, unit std) | scale (unit std only) | none")
    gauss_mu: str = _opt("0,0", "gauss: comma-separated mean")
    gauss_sigma2: float = _opt(1.0, "gauss: isotropic variance")
    mixture_radius: float = _opt(4.0, "mixture8: circle radius")
    mixture_std: float = _opt(0.3, "mixture8: component std")
    moons_noise: float = _opt(0.05, "two_moons: noise std")
    roll_noise: float = _opt(0.25, "swiss_roll_2d: noise std")
    # schedule
    T: int = _opt(1000, "number of diffusion steps")
    beta_min: float = _opt(1e-4, "first beta of the linear ramp")
    beta_max: float = _opt(0.02, "last beta of the linear ramp")
    # model
    hidden: str = _opt("128,128,128", "comma-separated hidden widths")
    embed_dim: int = _opt(32, "time embedding width (even)")
    # training
    epochs: int = _opt(200, "passes over the training set")
    batch_size: int = _opt(256, "minibatch size")
    lr: float = _opt(1e-3, "Adam learning rate")
    ema_decay: float = _opt(0.995, "EMA decay per optimizer step")
    metric: str = _opt("squared_l2", "base distance: l1 | squared_l2 | feature")
    c: float = _opt(0.03, "robust wrapper constant; 0 disables the offset")
    feature_seed: int = _opt(0, "seed of the fixed feature map (metric = feature)")
    feature_width: int = _opt(8, "output width of the feature map")
    checkpoint_every: int = _opt(0, "write a checkpoint every k epochs (0: only the final one)")
    record_wall_clock: bool = _opt(False, "fill the seconds column of train_report.csv (breaks byte-determinism)")
    # sampling / eval
    sample_steps: int = _opt(1, "fixed-point iterations per sample")
    sample_count: int = _opt(4096, "number of samples to generate")
    use_ema: bool = _opt(True, "sample with the EMA weights")
    eval_n_proj: int = _opt(256, "random projections for sliced Wasserstein")
    eval_count: int = _opt(4096, "held-out reference points for evaluation")

    def hidden_widths(self) -> tuple[int, ...]:
        return tuple(int(v) for v in self.hidden.split(",") if v.strip())

    def metric_spec(self) -> MetricSpec:
        return MetricSpec(Base(self.metric), self.c, self.feature_seed, self.feature_width)

    def train_config(self) -> TrainConfig:
        return TrainConfig(T=self.T, beta_min=self.beta_min, beta_max=self.beta_max, epochs=self.epochs,
                           batch_size=self.batch_size, lr=self.lr, metric=self.metric_spec(),
                           ema_decay=self.ema_decay, seed=self.seed, checkpoint_every=self.checkpoint_every)

    def dataset_params(self) -> dict:
        p = {"normalize": self.normalize}
        if self.dataset == "gauss":
            p.update(mu=[float(v) for v in self.gauss_mu.split(",")], sigma2=self.gauss_sigma2)
        elif self.dataset == "mixture8":
            p.update(radius=self.mixture_radius, std=self.mixture_std)
        elif self.dataset == "two_moons":
            p.update(noise=self.moons_noise)
        elif self.dataset == "swiss_roll_2d":
            p.update(noise=self.roll_noise)
        return p

    def validate(self) -> None:
        try:
            self.metric_spec()
            self.train_config().validate(self.n_samples)
            if not self.hidden_widths() or min(self.hidden_widths()) < 1:
                raise ValueError("hidden must list at least one positive width")
            if self.embed_dim < 2 or self.embed_dim % 2:
                raise ValueError("embed_dim must be a positive even integer")
            if not 0.0 <= self.ema_decay < 1.0:
                raise ValueError("ema_decay must lie in [0, 1)")
            from dddm.data import resolve_params
            resolve_params(self.dataset, self.dataset_params())
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def dumps(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            lines.append(f"# {f.metadata['doc']}")
            lines.append(f"{f.name} = {_fmt(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _coerce(f: dataclasses.Field, raw: str):
    typ = f.type if isinstance(f.type, str) else f.type.__name__
    try:
        if typ == "bool":
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{f.name}: cannot parse {raw!r} as {typ}") from None


def parse_config(text: str, **overrides) -> RunConfig:
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key not in fields:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _coerce(fields[key], val)
    values.update({k: v for k, v in overrides.items() if v is not None})
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def load_config(path, **overrides) -> RunConfig:
    return parse_config(Path(path).read_text(), **overrides)
