"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``DCPV_PURE_PYTHON`` is set to a non-empty value, the
numpy implementation is used. Both expose the same functions and return
identical results.
"""

import os

from . import _pykernels

python_backend = _pykernels
compiled_backend = None

if not os.environ.get("DCPV_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND_NAME = "cython" if backend is compiled_backend else "python"

packed_raw = backend.packed_raw
packed_raw_many = backend.packed_raw_many
total_specified = backend.total_specified
local_search = backend.local_search
