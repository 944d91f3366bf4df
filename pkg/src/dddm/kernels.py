"""Backend selection for the hot kernels.

The compiled ``_ckernels`` extension is used when it imported cleanly, the
numpy versions in ``_pykernels`` otherwise.  ``use_backend`` switches at
runtime (tests and the benchmark run both).
"""
from __future__ import annotations

from types import ModuleType

from dddm import _pykernels

try:
    from dddm import _ckernels
except ImportError:  # extension not built
    _ckernels = None

NAMES = ("silu", "silu_backward", "adam_update", "ema_update", "neg_log_alpha_bar", "rk4_vp_gaussian")

BACKEND = ""


def available() -> list[str]:
    return ["python"] + (["cython"] if _ckernels is not None else [])


def module_for(name: str) -> ModuleType:
    if name == "python":
        return _pykernels
    if name == "cython":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not built; reinstall with Cython available")
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


def use_backend(name: str) -> None:
    global BACKEND
    mod = module_for(name)
    g = globals()
    for fn in NAMES:
        g[fn] = getattr(mod, fn)
    BACKEND = name


use_backend("cython" if _ckernels is not None else "python")
