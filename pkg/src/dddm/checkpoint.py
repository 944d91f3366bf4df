"""Versioned binary checkpoint.

Little-endian throughout.  Layout of format version 1::

    offset  type            field
    0       8 bytes         magic b"DDDMCKPT"
    8       uint32          format version (1)
    12      uint32          number of hidden layers H
    16      int64 x 9       D, E, T, epoch, adam_step, bank_rows, bank_epoch, bank_seed, train_seed
    88      int64 x H       hidden widths
    ...     float64 x 6     beta_min, beta_max, ema_decay, adam_beta1, adam_beta2, adam_eps
    ...     float64 x P     parameters            (P = parameter count, layout in ``micronet``)
    ...     float64 x P     EMA shadow parameters
    ...     float64 x P     Adam first moments
    ...     float64 x P     Adam second moments
    ...     float64 x N*D   estimate bank, row-major (N = bank_rows)

The file ends exactly after the bank; trailing bytes are an error.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from dddm.core import EstimateBank, TrainState
from dddm.micronet import AdamState, EmaParams, ModelParams, param_count
from dddm.schedule import Schedule, linear_schedule

MAGIC = b"DDDMCKPT"
VERSION = 1
_HEAD = struct.Struct("<8sII")
_INTS = struct.Struct("<9q")
_F64 = np.dtype("<f8")


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    state: TrainState
    schedule: Schedule
    seed: int

    @property
    def epoch(self) -> int:
        return self.state.bank.epoch


def save(path, state: TrainState, sched: Schedule, seed: int) -> None:
    p = state.params
    buf = bytearray()
    buf += _HEAD.pack(MAGIC, VERSION, len(p.hidden))
    buf += _INTS.pack(p.dim, p.embed_dim, p.T, state.bank.epoch, state.adam.step,
                      state.bank.estimates.shape[0], state.bank.epoch, state.bank.seed, seed)
    buf += struct.pack(f"<{len(p.hidden)}q", *p.hidden)
    buf += struct.pack("<6d", sched.beta_min, sched.beta_max, state.ema.decay,
                       state.adam.beta1, state.adam.beta2, state.adam.eps)
    for arr in (p.flat, state.ema.shadow.flat, state.adam.m, state.adam.v, state.bank.estimates):
        buf += np.ascontiguousarray(arr, dtype=_F64).tobytes()
    tmp = Path(str(path) + ".tmp")
    tmp.write_bytes(bytes(buf))
    tmp.replace(path)


def load(path) -> Checkpoint:
    raw = Path(path).read_bytes()
    if len(raw) < _HEAD.size or raw[:8] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    _, version, n_hidden = _HEAD.unpack_from(raw, 0)
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    pos = _HEAD.size
    D, E, T, epoch, adam_step, rows, bank_epoch, bank_seed, seed = _INTS.unpack_from(raw, pos)
    pos += _INTS.size
    hidden = struct.unpack_from(f"<{n_hidden}q", raw, pos)
    pos += 8 * n_hidden
    beta_min, beta_max, decay, b1, b2, eps = struct.unpack_from("<6d", raw, pos)
    pos += 48
    P = param_count(D, E, hidden)
    need = pos + 8 * (4 * P + rows * D)
    if len(raw) != need:
        raise CheckpointError(f"{path}: expected {need} bytes, found {len(raw)}")

    def take(count):
        nonlocal pos
        arr = np.frombuffer(raw, dtype=_F64, count=count, offset=pos).astype(np.float64)
        pos += 8 * count
        return arr

    params = ModelParams(D, E, hidden, T, take(P))
    shadow = ModelParams(D, E, hidden, T, take(P))
    adam = AdamState(take(P), take(P), adam_step, b1, b2, eps)
    bank = EstimateBank(take(rows * D).reshape(rows, D), bank_epoch, bank_seed)
    if epoch != bank_epoch:
        raise CheckpointError(f"{path}: epoch counter and bank epoch disagree")
    state = TrainState(params, EmaParams(shadow, decay), adam, bank)
    return Checkpoint(state, linear_schedule(T, beta_min, beta_max), seed)
