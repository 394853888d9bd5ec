"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the numpy
fallback is imported.  Set ``BLOCKTOEP_PURE_PYTHON=1`` to force the
fallback.
"""
import os

from . import _kernels_py as python_kernels

compiled_kernels = None
if os.environ.get("BLOCKTOEP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as compiled_kernels  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        compiled_kernels = None

kernels = compiled_kernels if compiled_kernels is not None else python_kernels
BACKEND = "compiled" if compiled_kernels is not None else "python"


def block_toeplitz_fill(coef, kmin, n, m):
    import numpy as np
    return kernels.block_toeplitz_fill(np.ascontiguousarray(coef, dtype=complex), int(kmin), int(n), int(m))


# past this length the BLAS dot products in the numpy path win
MGS_COMPILED_MAX = 5000


def mgs_orthogonalize(V, w, j):
    if (compiled_kernels is not None and V.dtype == w.dtype == float and V.flags.c_contiguous
            and w.shape[0] <= MGS_COMPILED_MAX):
        return compiled_kernels.mgs_orthogonalize(V, w, int(j))
    return python_kernels.mgs_orthogonalize(V, w, j)
