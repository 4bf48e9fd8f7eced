"""Kernel backend selection.

The compiled extension is used when it imports; setting the environment
variable ``SHORTPULSE_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

from ._ext import fallback

_forced = os.environ.get("SHORTPULSE_PURE_PYTHON", "") not in ("", "0")

if _forced:
    _impl = fallback
    BACKEND = "python"
else:
    try:
        from ._ext import kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = fallback
        BACKEND = "python"

kg_linear = _impl.kg_linear
kg_rotate = _impl.kg_rotate
phase_rotate = _impl.phase_rotate
# numpy's vectorized in-place multiply beats the compiled loop
cmul = fallback.cmul
kg_envelope_cubic = _impl.kg_envelope_cubic


def get_backend(name: str | None = None):
    """Return the kernel module ``name`` (``"cython"``/``"python"``) or the active one."""
    if name is None:
        return _impl
    if name == "python":
        return fallback
    if name == "cython":
        from ._ext import kernels
        return kernels
    raise ValueError(f"unknown kernel backend {name!r}")
