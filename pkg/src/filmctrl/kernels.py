"""Backend selection for the nonlinear stepping kernels.

The compiled extension is preferred when present; the pure-NumPy module is
the fallback. Set FILMCTRL_BACKEND=python (or =cython) to force a choice;
"cython" raises if the extension is unavailable.
"""

import os

from . import _fdcore_py

_requested = os.environ.get("FILMCTRL_BACKEND", "auto")

if _requested not in ("auto", "cython", "python"):
    raise RuntimeError(f"FILMCTRL_BACKEND must be auto, cython or python, got {_requested!r}")

_impl = None
if _requested in ("auto", "cython"):
    try:
        from . import _fdcore as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise RuntimeError(
                "FILMCTRL_BACKEND=cython but the compiled extension is not built; "
                "run pip install -e . --no-build-isolation") from None
        _impl = None
if _impl is None:
    _impl = _fdcore_py
    BACKEND = "python"

BENNEY_OFFSETS = tuple(_impl.BENNEY_OFFSETS)
WR_OFFSETS = tuple(_impl.WR_OFFSETS)

benney_flux = _impl.benney_flux
benney_residual = _impl.benney_residual
benney_bands = _impl.benney_bands
wr_residual = _impl.wr_residual
wr_bands = _impl.wr_bands


def get_backend() -> str:
    """Name of the active kernel backend ("cython" or "python")."""
    return BACKEND
