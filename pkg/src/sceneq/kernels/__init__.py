"""Hot-kernel backend selection.

The compiled extension is preferred when built; the pure-Python fallback is
always available. `SCENEQ_KERNEL=python` or `SCENEQ_KERNEL=native` forces a
backend at import time; `use_backend()` switches at runtime (benchmarks,
parity tests).
"""

from __future__ import annotations

import os
from contextlib import contextmanager

from . import _fallback

_BACKENDS = {"python": _fallback}
try:
    from . import _native  # compiled extension, absent on pure-Python installs

    _BACKENDS["native"] = _native
except ImportError:
    _native = None

_requested = os.environ.get("SCENEQ_KERNEL", "")
if _requested:
    if _requested not in _BACKENDS:
        raise RuntimeError(
            f"SCENEQ_KERNEL={_requested!r} but available backends are {sorted(_BACKENDS)}"
        )
    _active = _requested
else:
    _active = "native" if "native" in _BACKENDS else "python"


def active_backend() -> str:
    return _active


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def set_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; available: {sorted(_BACKENDS)}")
    _active = name


@contextmanager
def use_backend(name: str):
    previous = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def max_injective_product(cand, unary, edges, n_det):
    """Maximize the factor product over injective assignments (see _fallback)."""
    if not cand or any(len(c) == 0 for c in cand):
        return 0.0, None, 0
    return _BACKENDS[_active].max_injective_product(cand, unary, edges, n_det)
