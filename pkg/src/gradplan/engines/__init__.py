"""Evaluation engine selection.

The compiled Cython core is used when its extension module imported cleanly;
otherwise the pure-NumPy interpreter takes over.  ``GRADPLAN_ENGINE`` forces
the choice (``compiled`` or ``python``).
"""

from __future__ import annotations

import os

from ..errors import ConfigError
from . import python_eval

try:
    from . import compiled_eval
except ImportError:
    compiled_eval = None

_requested = os.environ.get("GRADPLAN_ENGINE", "").strip().lower()
if _requested == "python":
    _active = python_eval
elif _requested == "compiled":
    if compiled_eval is None:
        raise ConfigError(
            "GRADPLAN_ENGINE=compiled but the gradplan._core extension is not built"
        )
    _active = compiled_eval
elif _requested:
    raise ConfigError(f"unknown GRADPLAN_ENGINE value: {_requested!r}")
else:
    _active = compiled_eval if compiled_eval is not None else python_eval


def active():
    """The engine module in effect for this process."""
    return _active


def engine_name() -> str:
    return _active.name


def available() -> tuple[str, ...]:
    return ("python",) if compiled_eval is None else ("compiled", "python")
