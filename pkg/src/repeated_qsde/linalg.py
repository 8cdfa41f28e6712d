"""Dense complex linear algebra used throughout the package.

Operators are plain ``numpy`` arrays of dtype ``complex128``; vectors are
1-d arrays.  Functions here never mutate their inputs.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .config import DEFAULT
from .errors import CapacityError, ValidationError

__all__ = [
    "Spectrum",
    "as_cmatrix",
    "as_cvector",
    "check_capacity",
    "kron",
    "kron_all",
    "dagger",
    "hermiticity_residual",
    "is_hermitian",
    "hermitian_eig",
    "apply_scalar_function",
    "expm",
    "expm_action",
    "op_norm",
    "fro_norm",
]


def as_cmatrix(a, name="matrix"):
    """Return ``a`` as a finite 2-d complex128 array."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValidationError(f"{name} must be a non-empty 2-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


def as_cvector(v, name="vector"):
    v = np.asarray(v, dtype=np.complex128)
    if v.ndim != 1 or v.shape[0] < 1:
        raise ValidationError(f"{name} must be a non-empty 1-d array, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} has non-finite entries")
    return v


def check_capacity(rows, cols, limit=None):
    limit = DEFAULT.max_entries if limit is None else limit
    if rows * cols > limit:
        raise CapacityError(
            f"a {rows}x{cols} dense matrix needs {rows * cols} entries; "
            f"the capacity limit is {limit}",
            requested=rows * cols,
            limit=limit,
        )


def kron(a, b, limit=None):
    """Kronecker product with row index ``i*b.rows + p``."""
    a = as_cmatrix(a, "a")
    b = as_cmatrix(b, "b")
    check_capacity(a.shape[0] * b.shape[0], a.shape[1] * b.shape[1], limit)
    return np.kron(a, b)


def kron_all(*factors, limit=None):
    out = as_cmatrix(factors[0])
    for f in factors[1:]:
        out = kron(out, f, limit)
    return out


def dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


def fro_norm(a):
    return float(np.linalg.norm(np.asarray(a), ord=None))


def hermiticity_residual(a):
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    return fro_norm(a - dagger(a))


def is_hermitian(a, tol=None):
    tol = DEFAULT.hermitian if tol is None else tol
    return hermiticity_residual(a) <= tol * max(1.0, fro_norm(a))


def _require_hermitian(a, tol=None, name="matrix"):
    a = as_cmatrix(a, name)
    tol = DEFAULT.hermitian if tol is None else tol
    res = hermiticity_residual(a)
    bound = tol * max(1.0, fro_norm(a))
    if res > bound:
        raise ValidationError(
            f"{name} is not Hermitian: residual ||A - A^dagger||_F = {res:.3e} exceeds {bound:.3e}",
            residual=res,
            key=name,
        )
    return a


@dataclass(frozen=True)
class Spectrum:
    """Eigen-decomposition ``A = V diag(e) V^dagger`` of a Hermitian matrix.

    Eigenvalues are ascending and real; the columns of ``eigenvectors`` are
    orthonormal.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dagger(v)

    def map(self, values):
        """Return ``V diag(values) V^dagger``."""
        v = self.eigenvectors
        return (v * np.asarray(values)) @ dagger(v)


def hermitian_eig(a, tol=None):
    """Eigen-decompose a Hermitian matrix.

    Raises
    ------
    ValidationError
        If ``a`` is not square or its Hermiticity residual exceeds
        ``tol * max(1, ||a||_F)``.
    """
    a = _require_hermitian(a, tol)
    # exact symmetrisation so LAPACK sees a Hermitian matrix bit-for-bit
    e, v = np.linalg.eigh(0.5 * (a + dagger(a)))
    return Spectrum(eigenvalues=e, eigenvectors=v)


def _evaluate(fn, eigenvalues):
    out = np.empty(eigenvalues.shape, dtype=np.complex128)
    for i, x in enumerate(eigenvalues):
        try:
            y = complex(fn(float(x)))
        except ArithmeticError as exc:
            raise ValidationError(f"function fails at eigenvalue {x!r}: {exc}", residual=x) from exc
        if not (np.isfinite(y.real) and np.isfinite(y.imag)):
            raise ValidationError(f"function is not finite at eigenvalue {x!r}", residual=x)
        out[i] = y
    return out


def apply_scalar_function(a, fn, spectrum=None):
    """Return ``fn(a) = V diag(fn(e_i)) V^dagger`` for Hermitian ``a``.

    ``fn`` maps a real float to a (complex) scalar.  A precomputed
    ``spectrum`` of ``a`` may be passed to avoid a second decomposition.
    """
    if spectrum is None:
        spectrum = hermitian_eig(a)
    return spectrum.map(_evaluate(fn, spectrum.eigenvalues))


# Pade coefficients and 1-norm thresholds from Higham (2005).
_PADE = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (
        17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0,
    ),
    13: (
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0, 129060195264000.0, 10559470521600.0,
        670442572800.0, 33522128640.0, 1323241920.0, 40840800.0, 960960.0,
        16380.0, 182.0, 1.0,
    ),
}
_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}


def _pade_uv(a, m):
    b = _PADE[m]
    n = a.shape[0]
    ident = np.eye(n, dtype=a.dtype)
    a2 = a @ a
    if m == 13:
        a4 = a2 @ a2
        a6 = a4 @ a2
        u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
                 + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
        v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
             + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident)
        return u, v
    powers = [ident, a2]
    while len(powers) < (m + 1) // 2:
        powers.append(powers[-1] @ a2)
    u = a @ sum(b[2 * j + 1] * powers[j] for j in range(len(powers)))
    v = sum(b[2 * j] * powers[j] for j in range(len(powers)))
    return u, v


def _expm_pade(a):
    norm1 = np.linalg.norm(a, 1)
    for m in (3, 5, 7, 9):
        if norm1 <= _THETA[m]:
            u, v = _pade_uv(a, m)
            return np.linalg.solve(v - u, v + u)
    s = max(0, int(np.ceil(np.log2(norm1 / _THETA[13])))) if norm1 > 0 else 0
    u, v = _pade_uv(a / 2.0 ** s, 13)
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


def expm(a, method="auto"):
    """Matrix exponential.

    ``method="auto"`` routes Hermitian and skew-Hermitian inputs through the
    spectral decomposition (the result is then unitary or positive to
    rounding) and everything else through Pade(13) scaling and squaring.
    ``method="pade"`` forces the latter.
    """
    a = as_cmatrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValidationError(f"expm needs a square matrix, got shape {a.shape}")
    check_capacity(*a.shape)
    if method == "auto":
        if is_hermitian(a):
            return apply_scalar_function(a, np.exp)
        if is_hermitian(1j * a):
            # a = iB with B = -ia Hermitian
            return apply_scalar_function(-1j * a, lambda x: np.exp(1j * x))
    elif method != "pade":
        raise ValueError(f"unknown expm method {method!r}")
    return _expm_pade(a)


def expm_action(a, v):
    """Return ``expm(a) @ v`` without forming ``expm(a)``.

    ``a`` may be a scipy sparse matrix; this is the route for operators
    beyond the dense capacity limit.
    """
    if not sp.issparse(a):
        a = sp.csr_matrix(np.asarray(a, dtype=np.complex128))
    return expm_multiply(a.astype(np.complex128), np.asarray(v, dtype=np.complex128))


def op_norm(a):
    """Largest singular value, via the top eigenvalue of ``a^dagger a``."""
    a = as_cmatrix(a)
    gram = dagger(a) @ a
    top = hermitian_eig(0.5 * (gram + dagger(gram))).eigenvalues[-1]
    return float(np.sqrt(max(top, 0.0)))
