"""Command line entry point: ``dddm train | sample | eval | oracle-check``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from dddm import checkpoint, data, evaluate, oracle, sampler
from dddm.config import ConfigError, RunConfig, load_config
from dddm.core import TrainingDivergedError, TrainState, train_epoch
from dddm.micronet import NonFiniteGradientError
from dddm.rng import describe
from dddm.schedule import linear_schedule

REPORT_COLUMNS = ("epoch", "mean_loss", "mean_drift", "seconds", "bank_bytes")


def _fmt(x) -> str:
    return repr(float(x))


def _report_row(rec, with_clock: bool) -> str:
    secs = _fmt(rec.seconds) if with_clock else ""
    return f"{rec.epoch},{_fmt(rec.mean_loss)},{_fmt(rec.mean_drift)},{secs},{rec.bank_bytes}\n"


def cmd_train(args) -> int:
    cfg = load_config(args.config, out_dir=args.out_dir, epochs=args.epochs, seed=args.seed)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    streams = [f"# rng {p}: {describe(cfg.seed, p)}" for p in ("data", "heldout", "init", "bank")]
    streams.append(f"# rng train: {describe(cfg.seed, 'train')} + epoch counter")
    (out / "config.resolved").write_text("\n".join(streams) + "\n" + cfg.dumps())

    ds = data.make_dataset(cfg.dataset, cfg.n_samples, cfg.seed, cfg.dataset_params())
    data.save_dataset(ds, out / "dataset.csv")
    held = data.make_dataset(cfg.dataset, cfg.eval_count, cfg.seed, cfg.dataset_params(),
                             purpose="heldout", norm=ds.norm)
    data.save_dataset(held, out / "heldout.csv")

    tcfg = cfg.train_config()
    sched = linear_schedule(cfg.T, cfg.beta_min, cfg.beta_max)
    if args.resume:
        ck = checkpoint.load(args.resume)
        state = ck.state
        if state.bank.estimates.shape != ds.points.shape or state.params.T != cfg.T:
            raise ConfigError("checkpoint does not match the configured dataset / schedule")
        mode = "a"
    else:
        state = TrainState.fresh(len(ds), ds.dim, tcfg, hidden=cfg.hidden_widths(), embed_dim=cfg.embed_dim)
        mode = "w"

    report_path = out / "train_report.csv"
    with open(report_path, mode, newline="\n") as rep:
        if mode == "w":
            rep.write(",".join(REPORT_COLUMNS) + "\n")
        while state.bank.epoch < cfg.epochs:
            rec = train_epoch(state, ds.points, sched, tcfg)
            rep.write(_report_row(rec, cfg.record_wall_clock))
            rep.flush()
            if not args.quiet:
                print(f"epoch {rec.epoch:5d}  loss {rec.mean_loss:.5f}  drift {rec.mean_drift:.5f}  "
                      f"{rec.seconds:.2f}s", file=sys.stderr)
            if cfg.checkpoint_every and rec.epoch % cfg.checkpoint_every == 0:
                checkpoint.save(out / f"checkpoint_{rec.epoch:06d}.ckpt", state, sched, cfg.seed)
    checkpoint.save(out / "model.ckpt", state, sched, cfg.seed)
    print(f"wrote {out / 'model.ckpt'} (epoch {state.bank.epoch}) and {report_path}")
    return 0


def _weights(ck, raw: bool):
    return ck.state.params if raw else ck.state.ema.shadow


def _fill_from_config(args, mapping) -> None:
    """Flags left unset take their value from ``--config`` (or the config defaults)."""
    cfg = load_config(args.config) if args.config else RunConfig()
    for flag, get in mapping.items():
        if getattr(args, flag) is None:
            setattr(args, flag, get(cfg))


def cmd_sample(args) -> int:
    _fill_from_config(args, {"steps": lambda c: c.sample_steps, "count": lambda c: c.sample_count,
                             "raw_weights": lambda c: not c.use_ema})
    ck = checkpoint.load(args.checkpoint)
    run = sampler.SampleRun(args.steps, args.count, args.seed, args.log_trajectory is not None)
    pts, traj = sampler.sample(_weights(ck, args.raw_weights), run)
    cols = [f"x{i}" for i in range(pts.shape[1])]
    data.write_points_csv(args.out, pts, cols, comments=[
        f"checkpoint={Path(args.checkpoint).name}", f"epoch={ck.epoch}", f"steps={args.steps}",
        f"weights={'raw' if args.raw_weights else 'ema'}", f"rng={describe(args.seed, 'sample')}"])
    if traj is not None:
        s, m, d = traj.shape
        rows = np.empty((s * m, 2 + d))
        # sample-major: all iterations of sample 0, then sample 1, ...
        rows[:, 0] = np.repeat(np.arange(m), s)
        rows[:, 1] = np.tile(np.arange(1, s + 1), m)
        rows[:, 2:] = traj.transpose(1, 0, 2).reshape(s * m, d)
        with open(args.log_trajectory, "w", newline="\n") as fh:
            fh.write(",".join(["sample_id", "iteration"] + cols) + "\n")
            for r in rows:
                fh.write(f"{int(r[0])},{int(r[1])}," + ",".join(_fmt(v) for v in r[2:]) + "\n")
    print(f"wrote {len(pts)} samples ({args.steps} step(s)) to {args.out}")
    return 0


def cmd_eval(args) -> int:
    _fill_from_config(args, {"n_proj": lambda c: c.eval_n_proj})
    a, _, _ = data.read_points_csv(args.samples)
    b, _, _ = data.read_points_csv(args.reference)
    rep = evaluate.evaluate(a, b, args.n_proj, args.seed)
    Path(args.out).write_text(rep.to_json())
    if args.plot:
        evaluate.scatter_svg([(b, "reference"), (a, "samples")], args.plot)
    print(f"swd {rep.swd:.6f}  mmd {rep.mmd:.6f}  -> {args.out}")
    return 0


def cmd_oracle_check(args) -> int:
    ck = checkpoint.load(args.checkpoint)
    spec = oracle.GaussianSpec([float(v) for v in args.mu.split(",")], args.sigma2)
    params = _weights(ck, args.raw_weights)
    if spec.dim != params.dim:
        raise ConfigError(f"--mu has dimension {spec.dim}, model has {params.dim}")
    res = oracle.oracle_divergence(params, spec, ck.schedule, args.batch, args.seed, iters=args.iters,
                                   ode_steps=args.ode_steps)
    print(f"divergence {res.mean:.6f}  (mean over {args.batch} draws, {res.iterations} iteration(s))")
    if spec.sigma2 == 1.0:
        print(f"zero-network reference {oracle.zero_network_divergence(spec.mean, ck.schedule):.6f}")
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write("sample_id,t,error\n")
            for i, (t, e) in enumerate(zip(res.steps, res.errors)):
                fh.write(f"{i},{int(t)},{_fmt(e)}\n")
    return 0


def cmd_print_config(args) -> int:
    sys.stdout.write(RunConfig().dumps())
    return 0


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = argparse.ArgumentParser(prog="dddm", description=__doc__, formatter_class=fmt)
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a model from a config file", formatter_class=fmt)
    t.add_argument("--config", required=True, help="flat key = value config file")
    t.add_argument("--out-dir", default=None, help="override out_dir from the config")
    t.add_argument("--epochs", type=int, default=None, help="override epochs from the config")
    t.add_argument("--seed", type=int, default=None, help="override seed from the config")
    t.add_argument("--resume", default=None, help="continue from this checkpoint")
    t.add_argument("--quiet", action="store_true", help="no per-epoch progress on stderr")
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("sample", help="generate points from a checkpoint", formatter_class=fmt)
    s.add_argument("--checkpoint", required=True, help="model checkpoint")
    s.add_argument("--config", default=None, help="run config supplying defaults for unset flags")
    s.add_argument("--steps", type=int, default=None, help="fixed-point iterations (config sample_steps, 1)")
    s.add_argument("--count", type=int, default=None, help="number of samples (config sample_count, 4096)")
    s.add_argument("--seed", type=int, default=0, help="sampling seed")
    s.add_argument("--out", required=True, help="output CSV")
    s.add_argument("--log-trajectory", default=None, help="also write every iterate to this CSV")
    s.add_argument("--raw-weights", action="store_true", default=None,
                   help="use the trained weights instead of the EMA (config use_ema = false)")
    s.set_defaults(func=cmd_sample)

    e = sub.add_parser("eval", help="distances between two point sets", formatter_class=fmt)
    e.add_argument("--samples", required=True, help="generated points CSV")
    e.add_argument("--reference", required=True, help="reference points CSV")
    e.add_argument("--out", required=True, help="JSON report path")
    e.add_argument("--config", default=None, help="run config supplying defaults for unset flags")
    e.add_argument("--n-proj", type=int, default=None, help="SWD projections (config eval_n_proj, 256)")
    e.add_argument("--seed", type=int, default=0, help="eval seed")
    e.add_argument("--plot", default=None, help="optional SVG scatter of both sets")
    e.set_defaults(func=cmd_eval)

    o = sub.add_parser("oracle-check", help="compare a Gaussian-data model to the exact ODE map",
                       formatter_class=fmt)
    o.add_argument("--checkpoint", required=True, help="model checkpoint")
    o.add_argument("--mu", required=True, help="comma-separated data mean, in model (normalized) units")
    o.add_argument("--sigma2", type=float, default=1.0, help="data variance, in model units")
    o.add_argument("--iters", type=int, default=10, help="denoiser iterations")
    o.add_argument("--batch", type=int, default=1024, help="number of draws M")
    o.add_argument("--seed", type=int, default=0, help="draw seed")
    o.add_argument("--ode-steps", type=int, default=200, help="RK4 steps for the reference solution")
    o.add_argument("--out", default=None, help="per-sample error CSV")
    o.add_argument("--raw-weights", action="store_true", help="use the trained weights instead of the EMA")
    o.set_defaults(func=cmd_oracle_check)

    c = sub.add_parser("print-config", help="print the default config with documentation",
                       formatter_class=fmt)
    c.set_defaults(func=cmd_print_config)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, checkpoint.CheckpointError, ValueError, OSError) as exc:
        print(f"dddm {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (TrainingDivergedError, NonFiniteGradientError) as exc:
        print(f"dddm {args.command}: numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
