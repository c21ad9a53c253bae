"""Backend selection for the hot row-wise kernels.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``METAVIT_PURE_PYTHON`` is set to ``1``, the NumPy
fallback is used.  ``BACKEND`` names the active one.
"""
import os
from types import ModuleType

from . import _kernels_py

KERNEL_NAMES = ("layernorm_forward", "layernorm_backward", "softmax_rows", "softmax_rows_backward",
                "adam_update")


def _load_compiled():
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels


def available_backends() -> dict[str, ModuleType]:
    out = {"python": _kernels_py}
    compiled = _load_compiled()
    if compiled is not None:
        out["cython"] = compiled
    return out


def get_backend(name: str) -> ModuleType:
    try:
        return available_backends()[name]
    except KeyError:
        raise ImportError(f"kernel backend {name!r} is not available") from None


_compiled = None if os.environ.get("METAVIT_PURE_PYTHON") == "1" else _load_compiled()
_active = _compiled if _compiled is not None else _kernels_py
BACKEND = "cython" if _compiled is not None else "python"

layernorm_forward = _active.layernorm_forward
layernorm_backward = _active.layernorm_backward
softmax_rows = _active.softmax_rows
softmax_rows_backward = _active.softmax_rows_backward
adam_update = _active.adam_update
