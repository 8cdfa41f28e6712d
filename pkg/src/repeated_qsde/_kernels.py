"""Hot kernels with a compiled implementation and a numpy fallback.

The compiled module ``_chain_core`` is used when it imports; setting the
environment variable ``REPEATED_QSDE_PURE_PYTHON=1`` forces the fallback.
``BACKEND`` names the implementation in use.
"""
import os

import numpy as np


def apply_local_py(state, op, dh, dn, slices, slot):
    """numpy version of ``_chain_core.apply_local``; modifies ``state`` in place."""
    left = dn ** (slot - 1)
    right = dn ** (slices - slot)
    psi = state.reshape(dh, left, dn, right)
    op4 = op.reshape(dh, dn, dh, dn)
    psi[...] = np.einsum("asbt,bxty->axsy", op4, psi, optimize=True)
    return state


apply_local_compiled = None
if not os.environ.get("REPEATED_QSDE_PURE_PYTHON"):
    try:
        from ._chain_core import apply_local as apply_local_compiled
    except ImportError:  # extension not built
        apply_local_compiled = None

BACKEND = "compiled" if apply_local_compiled is not None else "python"


def apply_local(state, op, dh, dn, slices, slot):
    """Apply ``op`` on (initial space, slice ``slot``) of ``state`` in place."""
    if not 1 <= slot <= slices:
        raise IndexError(f"slice {slot} outside 1..{slices}")
    op = np.ascontiguousarray(op, dtype=np.complex128)
    if apply_local_compiled is not None and state.flags.c_contiguous:
        apply_local_compiled(state, op, dh, dn, slices, slot)
        return state
    return apply_local_py(state, op, dh, dn, slices, slot)
