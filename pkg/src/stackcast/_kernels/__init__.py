"""Kernel backend selection.

The hot inner loops (penalized logistic Newton, simplex QP) exist twice:
a Cython extension (stackcast._kernels._compiled) and a pure-numpy twin
(stackcast._kernels._pure). The compiled module is preferred when present;
STACKCAST_BACKEND=python|compiled|auto overrides.
"""

import os

from . import _pure

_choice = os.environ.get("STACKCAST_BACKEND", "auto").lower()
if _choice not in ("auto", "python", "compiled"):
    raise ValueError(
        f"STACKCAST_BACKEND must be auto, python or compiled, got {_choice!r}"
    )

if _choice == "python":
    _impl = _pure
    backend_name = "python"
else:
    try:
        from . import _compiled as _impl
        backend_name = "compiled"
    except ImportError:
        if _choice == "compiled":
            raise
        _impl = _pure
        backend_name = "python"

project_simplex = _impl.project_simplex
solve_simplex_qp = _impl.solve_simplex_qp
logistic_newton = _impl.logistic_newton
