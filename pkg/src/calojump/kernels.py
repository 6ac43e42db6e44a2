"""Backend selection for the trajectory stepping kernel.

The compiled extension is preferred; the pure-Python kernel is the
fallback. CALOJUMP_BACKEND={cython,python} forces a choice. Both produce
bitwise-identical trajectories (see benchmarks/bench_kernels.py).
"""

import os

from . import _jump_kernel_py
from .errors import UsageError

run_steps_python = _jump_kernel_py.run_steps
try:
    from . import _jump_kernel

    run_steps_cython = _jump_kernel.run_steps
except ImportError:
    run_steps_cython = None

STATUS_OK = _jump_kernel_py.STATUS_OK
STATUS_EVENT_OVERFLOW = _jump_kernel_py.STATUS_EVENT_OVERFLOW
STATUS_ESCAPE_HIGH = _jump_kernel_py.STATUS_ESCAPE_HIGH
STATUS_ESCAPE_LOW = _jump_kernel_py.STATUS_ESCAPE_LOW
EV_DOWN = _jump_kernel_py.EV_DOWN
EV_UP = _jump_kernel_py.EV_UP
EV_LOSS = _jump_kernel_py.EV_LOSS

_forced = os.environ.get("CALOJUMP_BACKEND")
if _forced not in (None, "", "cython", "python"):
    raise UsageError(f"CALOJUMP_BACKEND must be 'cython' or 'python', got {_forced!r}")
if _forced == "cython" and run_steps_cython is None:
    raise UsageError("CALOJUMP_BACKEND=cython but the compiled kernel is not available")

if _forced == "python" or run_steps_cython is None:
    run_steps = run_steps_python
    BACKEND = "python"
else:
    run_steps = run_steps_cython
    BACKEND = "cython"


def backend() -> str:
    """Name of the kernel backend selected at import ('cython' or 'python')."""
    return BACKEND
