"""Pick the compiled kernels when importable, else the numpy fallback.

Set ``OPTOFOCK_PURE_PYTHON=1`` to force the fallback.
"""

import os

if os.environ.get("OPTOFOCK_PURE_PYTHON") == "1":
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        from . import _kernels_py as kernels

BACKEND = "cython" if kernels.__name__.endswith("._kernels") else "python"

displacement_block = kernels.displacement_block
wigner_parity = kernels.wigner_parity
dopri5 = kernels.dopri5
