"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy
implementation takes over.  ``use_backend`` swaps the active module, which
the benchmark and the cross-backend tests rely on.
"""

from __future__ import annotations

from types import ModuleType

from . import _pykernels

try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

_active: ModuleType = _compiled if _compiled is not None else _pykernels


def available_backends() -> list[str]:
    names = [_pykernels.NAME]
    if _compiled is not None:
        names.insert(0, _compiled.NAME)
    return names


def backend_module(name: str) -> ModuleType:
    if name == _pykernels.NAME:
        return _pykernels
    if _compiled is not None and name == _compiled.NAME:
        return _compiled
    raise ValueError(f"unknown or unavailable kernel backend {name!r}")


def use_backend(name: str) -> str:
    """Activate a backend by name and return the previously active name."""
    global _active
    prev = _active.NAME
    _active = backend_module(name)
    return prev


def active_backend() -> str:
    return _active.NAME


def subcube_flags(values, domain, n):
    return _active.subcube_flags(values, domain, n)


def dt_depth_table(flags, n):
    return _active.dt_depth_table(flags, n)


def cert_table(flags, n):
    return _active.cert_table(flags, n)


def minimal_certificates(flags, n, value, max_width):
    return _active.minimal_certificates(flags, n, value, max_width)


def max_packing(masks, n):
    return _active.max_packing(masks, n)


def min_hitting_set(masks, n):
    return _active.min_hitting_set(masks, n)
