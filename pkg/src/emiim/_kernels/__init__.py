"""Split-search kernel selection.

The compiled Cython kernel is preferred when its extension module built;
otherwise (or when EMIIM_PURE_PYTHON is set) the numpy fallback is used.
Both implement the exact contract documented in py_splitter, so the choice
never changes results, only speed.
"""

from __future__ import annotations

import os

from . import py_splitter

IMPLEMENTATIONS = {"python": py_splitter.best_split_codes}

try:
    from . import _splitter

    IMPLEMENTATIONS["compiled"] = _splitter.best_split_codes
except ImportError:
    _splitter = None

if os.environ.get("EMIIM_PURE_PYTHON"):
    ACTIVE = "python"
else:
    ACTIVE = "compiled" if "compiled" in IMPLEMENTATIONS else "python"

best_split_codes = IMPLEMENTATIONS[ACTIVE]

MAX_NODE_EXAMPLES = py_splitter.MAX_NODE_EXAMPLES


def active_kernel() -> str:
    return ACTIVE


def set_active_kernel(name: str) -> None:
    """Switch kernels at runtime (used by the benchmark and parity tests)."""
    global ACTIVE, best_split_codes
    if name not in IMPLEMENTATIONS:
        raise KeyError(f"unknown kernel {name!r}; built: {sorted(IMPLEMENTATIONS)}")
    ACTIVE = name
    best_split_codes = IMPLEMENTATIONS[name]
