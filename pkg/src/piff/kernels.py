"""Select the numeric kernel backend at import time.

The Cython extension is used when it was built; set ``PIFF_PURE_PYTHON=1``
to force the numpy fallback.
"""

from __future__ import annotations

import os

from piff import _pykernels

python_backend = _pykernels
compiled_backend = None

if os.environ.get("PIFF_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from piff import _kernels as compiled_backend  # type: ignore[no-redef]
    except ImportError:
        compiled_backend = None

backend = compiled_backend or python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

eval_matrix = backend.eval_matrix
meanfield_run = backend.meanfield_run
fastsim_run = backend.fastsim_run
