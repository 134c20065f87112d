"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; the pure
numpy fallback is always available. ``RCW_BACKEND=pure`` or
``RCW_BACKEND=compiled`` forces a choice (the latter fails loudly if the
extension is missing rather than silently degrading).
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_py

_FORCE_ENV = "RCW_BACKEND"


def _import_compiled() -> ModuleType | None:
    try:
        from . import _kernels  # type: ignore[attr-defined]
        return _kernels
    except ImportError:
        return None


def get_backend(name: str | None = None) -> ModuleType:
    """Resolve a kernel module by name (default: RCW_BACKEND env or auto)."""
    choice = name or os.environ.get(_FORCE_ENV, "auto")
    if choice == "pure":
        return _kernels_py
    if choice == "compiled":
        compiled = _import_compiled()
        if compiled is None:
            raise RuntimeError("RCW_BACKEND=compiled but the extension is not built")
        return compiled
    if choice == "auto":
        return _import_compiled() or _kernels_py
    raise ValueError(f"unknown backend {choice!r} (expected auto, compiled or pure)")


def active_backend() -> ModuleType:
    return get_backend()


def available_backends() -> list[str]:
    names = ["pure"]
    if _import_compiled() is not None:
        names.insert(0, "compiled")
    return names
