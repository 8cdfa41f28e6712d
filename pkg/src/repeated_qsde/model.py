"""Finite-dimensional interaction models and their limit coefficients.

A :class:`ModelSpec` describes the scaled interaction Hamiltonian

    H^k = 2^k sum_j F_j (x) lambda_j + 2^(k/2) sum_j G_j (x) mu_j + sum_j H_j (x) nu_j

on ``initial (x) noise`` together with the orthonormal noise vectors
``chi[0], ..., chi[n]`` that define the coherent slices.
"""
from dataclasses import dataclass, field

import math

import numpy as np

from .config import DEFAULT
from .errors import ValidationError
from .linalg import as_cmatrix, as_cvector, hermiticity_residual, fro_norm

__all__ = [
    "ModelSpec",
    "LimitCoefficients",
    "Check",
    "ValidationReport",
    "validate",
    "coherent_slice",
    "exp_vector_overlap_error",
]


def _frozen(a):
    a = np.array(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


def _matrix_list(items, dim, name):
    out = []
    for i, a in enumerate(items):
        a = as_cmatrix(a, f"{name}[{i}]")
        if a.shape != (dim, dim):
            raise ValidationError(
                f"{name}[{i}] has shape {a.shape}, expected ({dim}, {dim})", key=f"{name}[{i}]"
            )
        out.append(_frozen(a))
    return tuple(out)


@dataclass(frozen=True)
class ModelSpec:
    """One interaction model; structural consistency is enforced on construction.

    Numerical conditions (Hermiticity, orthonormality of ``chi`` and the
    vacuum conditions on ``lambda``/``mu``) are checked by :func:`validate`.
    """

    dim_initial: int
    dim_noise: int
    channels: int
    F_list: tuple = ()
    G_list: tuple = ()
    H_list: tuple = ()
    lambda_list: tuple = ()
    mu_list: tuple = ()
    nu_list: tuple = ()
    chi: tuple = ()
    name: str = "model"

    def __post_init__(self):
        if self.dim_initial < 1 or self.dim_noise < 1 or self.channels < 1:
            raise ValidationError("dimensions and channel count must be positive")
        pairs = (("F_list", "lambda_list"), ("G_list", "mu_list"), ("H_list", "nu_list"))
        for left, right in pairs:
            if len(getattr(self, left)) != len(getattr(self, right)):
                raise ValidationError(
                    f"{left} has {len(getattr(self, left))} entries but {right} has "
                    f"{len(getattr(self, right))}",
                    key=right,
                )
        for name in ("F_list", "G_list", "H_list"):
            object.__setattr__(self, name, _matrix_list(getattr(self, name), self.dim_initial, name))
        for name in ("lambda_list", "mu_list", "nu_list"):
            object.__setattr__(self, name, _matrix_list(getattr(self, name), self.dim_noise, name))
        if len(self.chi) != self.channels + 1:
            raise ValidationError(
                f"chi needs channels + 1 = {self.channels + 1} vectors, got {len(self.chi)}",
                key="chi",
            )
        vecs = []
        for i, v in enumerate(self.chi):
            v = as_cvector(v, f"chi[{i}]")
            if v.shape[0] != self.dim_noise:
                raise ValidationError(
                    f"chi[{i}] has length {v.shape[0]}, expected {self.dim_noise}", key=f"chi[{i}]"
                )
            vecs.append(_frozen(v))
        object.__setattr__(self, "chi", tuple(vecs))

    @property
    def dim(self):
        return self.dim_initial * self.dim_noise

    @property
    def chi_matrix(self):
        """Columns ``chi[0], ..., chi[n]``."""
        return np.stack(self.chi, axis=1)

    def with_chi(self, chi):
        return ModelSpec(
            self.dim_initial, self.dim_noise, self.channels,
            self.F_list, self.G_list, self.H_list,
            self.lambda_list, self.mu_list, self.nu_list,
            tuple(chi), self.name,
        )


@dataclass(frozen=True)
class LimitCoefficients:
    """Coefficients ``N[p, q]``, ``M[p]``, ``L[p]``, ``K`` of the limit equation.

    Stored as arrays of shape ``(n, n, d, d)``, ``(n, d, d)``, ``(n, d, d)``
    and ``(d, d)``.
    """

    N: np.ndarray
    M: np.ndarray
    L: np.ndarray
    K: np.ndarray

    def __post_init__(self):
        N = np.asarray(self.N, dtype=np.complex128)
        M = np.asarray(self.M, dtype=np.complex128)
        L = np.asarray(self.L, dtype=np.complex128)
        K = as_cmatrix(self.K, "K")
        n, d = M.shape[0] if M.ndim == 3 else -1, K.shape[0]
        if K.shape != (d, d) or M.shape != (n, d, d) or L.shape != (n, d, d) or N.shape != (n, n, d, d):
            raise ValidationError(
                f"inconsistent coefficient shapes N{N.shape} M{M.shape} L{L.shape} K{K.shape}"
            )
        for name, a in (("N", N), ("M", M), ("L", L), ("K", K)):
            object.__setattr__(self, name, _frozen(a))

    @property
    def channels(self):
        return self.M.shape[0]

    @property
    def dim(self):
        return self.K.shape[0]

    def blocks(self):
        """Yield ``(label, matrix)`` for every block in a fixed order."""
        n = self.channels
        for p in range(n):
            for q in range(n):
                yield f"N[{p + 1},{q + 1}]", self.N[p, q]
        for p in range(n):
            yield f"M[{p + 1}]", self.M[p]
        for p in range(n):
            yield f"L[{p + 1}]", self.L[p]
        yield "K", self.K

    def distance(self, other):
        """Largest blockwise Frobenius distance to ``other``."""
        return max(fro_norm(a - b) for (_, a), (_, b) in zip(self.blocks(), other.blocks()))

    def replace(self, **changes):
        fields = {"N": self.N, "M": self.M, "L": self.L, "K": self.K}
        fields.update(changes)
        return LimitCoefficients(**fields)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    residual: float = 0.0
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple = field(default_factory=tuple)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self):
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "residual": c.residual, "detail": c.detail}
                for c in self.checks
            ],
        }


_STRUCTURAL = (
    ("self-adjoint:H^k", "structural: satisfied by construction (finite-dimensional Hermitian sum)"),
    ("self-adjoint:F-check", "structural: satisfied by construction (finite-dimensional Hermitian sum)"),
    ("embedding:coherent-limit", "structural: overlap law checked by exp_vector_overlap_error"),
    ("domain:nu-chi0", "structural: satisfied by construction (bounded operators)"),
)


def validate(model, tol=None):
    """Run the numerical model conditions and return a :class:`ValidationReport`."""
    tol = DEFAULT.condition if tol is None else tol
    checks = [Check(name, True, 0.0, detail) for name, detail in _STRUCTURAL]
    for list_name in ("F_list", "G_list", "H_list", "lambda_list", "mu_list", "nu_list"):
        for i, a in enumerate(getattr(model, list_name)):
            res = hermiticity_residual(a)
            bound = DEFAULT.hermitian * max(1.0, fro_norm(a))
            checks.append(Check(f"hermitian:{list_name}[{i}]", res <= bound, res))
    chi = model.chi_matrix
    gram_defect = float(np.max(np.abs(chi.conj().T @ chi - np.eye(chi.shape[1]))))
    checks.append(Check("orthonormal:chi", gram_defect <= DEFAULT.orthonormal, gram_defect))
    chi0 = model.chi[0]
    for j, mu in enumerate(model.mu_list):
        res = abs(np.vdot(chi0, mu @ chi0))
        checks.append(Check(f"vacuum-mean:mu[{j}]", res <= tol, float(res), "<chi0, mu chi0> = 0"))
    for j, lam in enumerate(model.lambda_list):
        res = float(np.linalg.norm(lam @ chi0))
        checks.append(Check(f"vacuum-kernel:lambda[{j}]", res <= tol, res, "lambda chi0 = 0"))
    return ValidationReport(tuple(checks))


def require_valid(model):
    report = validate(model)
    if not report.passed:
        worst = max(report.failures(), key=lambda c: c.residual)
        raise ValidationError(
            f"model {model.name!r} fails {worst.name} with residual {worst.residual:.3e}",
            residual=worst.residual,
            key=worst.name,
        )
    return model


def _alpha(alpha, n):
    a = np.atleast_1d(np.asarray(alpha, dtype=np.complex128))
    if a.shape != (n,):
        raise ValidationError(f"alpha has length {a.size}, expected {n} channels")
    return a


def coherent_slice(model, alpha, k):
    """``chi[0] + 2^(-k/2) sum_j alpha_j chi[j]`` (not normalised)."""
    a = _alpha(alpha, model.channels)
    out = np.array(model.chi[0])
    for j in range(model.channels):
        out = out + 2.0 ** (-k / 2) * a[j] * model.chi[j + 1]
    return out


def exp_vector_overlap_error(alpha, k):
    """Squared distance between a unit-interval exponential vector and its
    ``2^k``-fold discrete coherent surrogate: ``e^x - (1 + x 2^-k)^(2^k)``
    with ``x = |alpha|^2``.
    """
    x = float(np.sum(np.abs(np.atleast_1d(np.asarray(alpha, dtype=np.complex128))) ** 2))
    if x == 0.0:
        return 0.0
    n = 2.0 ** k
    # e^x * (1 - exp(n (log1p(y) - y))) with y = x/n, free of cancellation
    return float(-np.exp(x) * np.expm1(n * _log1p_minus(x / n)))


def _log1p_minus(y):
    """``log(1 + y) - y`` for ``y >= 0``; series below 0.1."""
    if y >= 0.1:
        return math.log1p(y) - y
    total, term, j = 0.0, y, 1
    while True:
        term *= -y
        j += 1
        step = term / j
        total += step
        if abs(step) <= 1e-18 * abs(total):
            return total
