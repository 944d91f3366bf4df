"""Time the hot kernels and one training epoch under each available backend.

    python benchmarks/bench_kernels.py [--repeat 5] [--epoch-size 4096]

Prints one row per (kernel, backend) with the best-of-``repeat`` time and
the speedup of the compiled kernels over numpy.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from dddm import kernels
from dddm.core import TrainConfig, TrainState, train_epoch
from dddm.data import make_dataset
from dddm.schedule import linear_schedule


def cases(rng, epoch_size):
    z = rng.standard_normal((256, 128))
    _, sig = kernels.module_for("python").silu(z)
    d = rng.standard_normal(z.shape)
    n = 40_000
    p, g = rng.standard_normal(n), rng.standard_normal(n)
    m, v = np.zeros(n), np.zeros(n)
    t = rng.uniform(0, 1000, 4096)
    x = rng.standard_normal((1024, 2))
    ts = rng.uniform(1, 1000, 1024)
    mu = np.array([2.0, 0.0])
    ds = make_dataset("mixture8", epoch_size, seed=0)
    cfg = TrainConfig(epochs=1)
    sched = linear_schedule()
    base = TrainState.fresh(epoch_size, 2, cfg)

    def epoch():
        st = TrainState(base.params.copy(), base.ema, base.adam, base.bank)
        st.adam = type(base.adam)(base.adam.m.copy(), base.adam.v.copy())
        st.ema = type(base.ema)(base.ema.shadow.copy(), base.ema.decay)
        st.bank = type(base.bank)(base.bank.estimates.copy(), 0, 0)
        train_epoch(st, ds.points, sched, cfg)

    return {
        "silu (256x128)": lambda: kernels.silu(z),
        "silu_backward (256x128)": lambda: kernels.silu_backward(d, z, sig),
        "adam_update (40k)": lambda: kernels.adam_update(p, g, m, v, 1e-3, 0.9, 0.999, 1e-8, 1),
        "ema_update (40k)": lambda: kernels.ema_update(m, p, 0.995),
        "neg_log_alpha_bar (4096)": lambda: kernels.neg_log_alpha_bar(t, 1e-4, 0.02, 1000.0),
        "rk4_vp_gaussian (1024 x 200 steps)": lambda: kernels.rk4_vp_gaussian(x, ts, mu, 0.5, 1e-4, 0.02,
                                                                              1000.0, 200),
        f"train_epoch (N={epoch_size})": epoch,
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--epoch-size", type=int, default=4096)
    args = ap.parse_args(argv)
    original = kernels.BACKEND
    results = {}
    for backend in kernels.available():
        kernels.use_backend(backend)
        for name, fn in cases(np.random.default_rng(0), args.epoch_size).items():
            number = 1 if name.startswith("train_epoch") else 20
            best = min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number
            results[(name, backend)] = best
    kernels.use_backend(original)
    names = list(dict.fromkeys(n for n, _ in results))
    print(f"{'kernel':38s} {'python':>12s} {'cython':>12s} {'speedup':>8s}")
    for name in names:
        py = results[(name, "python")]
        cy = results.get((name, "cython"))
        cy_s = f"{cy * 1e3:10.3f}ms" if cy else f"{'n/a':>12s}"
        sp = f"{py / cy:7.2f}x" if cy else f"{'':>8s}"
        print(f"{name:38s} {py * 1e3:10.3f}ms {cy_s} {sp}")


if __name__ == "__main__":
    main()
