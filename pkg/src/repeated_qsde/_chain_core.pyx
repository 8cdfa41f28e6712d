# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel: apply a local operator to one noise slice of a chain state."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def apply_local(double complex[::1] state, const double complex[:, ::1] op,
                Py_ssize_t dh, Py_ssize_t dn, Py_ssize_t slices, Py_ssize_t slot):
    """In-place ``state <- (op acting on (H, slice slot)) state``.

    ``state`` is laid out as ``h * dn**slices + s_1 * dn**(slices-1) + ... + s_slices``
    and ``op`` is indexed ``a * dn + s`` on both sides.  ``slot`` is 1-based.
    """
    cdef Py_ssize_t block = 1, stride = 1, outer, lo, hi, base
    cdef Py_ssize_t a, s, r, c, d = dh * dn
    cdef Py_ssize_t i
    for i in range(slices):
        block *= dn
    for i in range(slices - slot):
        stride *= dn
    outer = block // (stride * dn)
    cdef double complex[::1] x = np.empty(d, dtype=np.complex128)
    cdef double complex acc
    for hi in range(outer):
        for lo in range(stride):
            base = hi * stride * dn + lo
            for a in range(dh):
                for s in range(dn):
                    x[a * dn + s] = state[a * block + base + s * stride]
            for r in range(d):
                acc = 0
                for c in range(d):
                    acc = acc + op[r, c] * x[c]
                a = r // dn
                s = r - a * dn
                state[a * block + base + s * stride] = acc
