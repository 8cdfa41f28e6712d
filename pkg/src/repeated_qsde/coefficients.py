"""Limit coefficients of the interaction class, HP algebra and related checks."""
from dataclasses import dataclass
from math import factorial

import numpy as np

from .config import DEFAULT
from .errors import ValidationError
from .linalg import (
    Spectrum,
    as_cmatrix,
    dagger,
    fro_norm,
    hermitian_eig,
    kron,
    _require_hermitian,
)
from .model import Check, LimitCoefficients, ValidationReport, require_valid

__all__ = [
    "scalar_f",
    "scalar_g",
    "check_F",
    "limit_coefficients",
    "spin_coefficients",
    "CheckedCoefficients",
    "hp_check",
    "gauge_invariance_defect",
    "lemma4_hypothesis_check",
]

_SERIES_TERMS = 10
_F_SERIES = np.array([1j ** (n + 1) / factorial(n + 1) for n in range(_SERIES_TERMS)])
_G_SERIES = np.array([1j ** (n + 2) / factorial(n + 2) for n in range(_SERIES_TERMS)])
# sin(x) - x = sum_{j>=1} (-1)^j x^(2j+1) / (2j+1)!, enough terms for |x| < 1
_SIN_TAIL = np.array([(-1) ** j / factorial(2 * j + 1) for j in range(1, 14)])


def _horner(coeffs, x):
    acc = np.zeros_like(x, dtype=np.complex128)
    for c in coeffs[::-1]:
        acc = acc * x + c
    return acc


def _sin_minus_x_over_x2(x):
    # (sin x - x) / x^2 without cancellation for |x| < 1
    x2 = x * x
    acc = np.zeros_like(x)
    for c in _SIN_TAIL[::-1]:
        acc = acc * x2 + c
    return acc * x


def scalar_f(x):
    """``f(x) = (e^{ix} - 1) / x`` with ``f(0) = i``.  Accepts scalars or arrays."""
    x = np.asarray(x, dtype=np.float64)
    small = np.abs(x) < DEFAULT.series_radius
    safe = np.where(small, 1.0, x)
    half = np.sin(0.5 * safe)
    exact = (-2.0 * half * half + 1j * np.sin(safe)) / safe
    out = np.where(small, _horner(_F_SERIES, x), exact)
    return complex(out) if out.ndim == 0 else out


def scalar_g(x):
    """``g(x) = (e^{ix} - ix - 1) / x^2`` with ``g(0) = -1/2``."""
    x = np.asarray(x, dtype=np.float64)
    small = np.abs(x) < DEFAULT.series_radius
    safe = np.where(small, 1.0, x)
    half = np.sin(0.5 * safe) / safe
    real = -2.0 * half * half
    imag = np.where(np.abs(safe) < 1.0, _sin_minus_x_over_x2(safe), (np.sin(safe) - safe) / (safe * safe))
    out = np.where(small, _horner(_G_SERIES, x), real + 1j * imag)
    return complex(out) if out.ndim == 0 else out


def check_F(model):
    """``F-check = sum_j F_j (x) lambda_j`` on ``initial (x) noise``."""
    out = np.zeros((model.dim, model.dim), dtype=np.complex128)
    for F, lam in zip(model.F_list, model.lambda_list):
        out += kron(F, lam)
    return out


def _slice_rows(vectors, spectrum, dh, dk):
    """``(I (x) w)^dagger V`` for each noise vector ``w``; shape ``(len, dh, D)``."""
    V = spectrum.eigenvectors.reshape(dh, dk, -1)
    W = np.stack(vectors, axis=0)
    return np.einsum("ws,asc->wac", W.conj(), V)


def limit_coefficients(model, check=True):
    """Compute ``N, M, L, K`` from the model's matrix elements of ``g``, ``f``
    and ``exp(i x)`` applied to the F-check operator.

    With ``check=False`` the model conditions are not enforced; this is only
    meant for negative controls.
    """
    if check:
        require_valid(model)
    dh, dk, n = model.dim_initial, model.dim_noise, model.channels
    spectrum = hermitian_eig(check_F(model))
    e = spectrum.eigenvalues
    fv, gv, zv = scalar_f(e), scalar_g(e), np.exp(1j * e)

    chi0 = model.chi[0]
    mu_chi0 = [mu @ chi0 for mu in model.mu_list]
    rows_chi = _slice_rows(list(model.chi[1:]), spectrum, dh, dk)
    m = len(mu_chi0)
    rows_mu = _slice_rows(mu_chi0, spectrum, dh, dk) if m else np.zeros((0, dh, e.size), complex)

    def block(left, values, right):
        return (left * values) @ dagger(right)

    N = np.empty((n, n, dh, dh), dtype=np.complex128)
    for p in range(n):
        for q in range(n):
            N[p, q] = block(rows_chi[p], zv, rows_chi[q])
    M = np.zeros((n, dh, dh), dtype=np.complex128)
    L = np.zeros((n, dh, dh), dtype=np.complex128)
    for p in range(n):
        for i, G in enumerate(model.G_list):
            M[p] += block(rows_chi[p], fv, rows_mu[i]) @ G
            L[p] += G @ block(rows_mu[i], fv, rows_chi[p])
    K = np.zeros((dh, dh), dtype=np.complex128)
    for H, nu in zip(model.H_list, model.nu_list):
        K += 1j * np.vdot(chi0, nu @ chi0) * H
    for i, Gi in enumerate(model.G_list):
        for j, Gj in enumerate(model.G_list):
            K += Gi @ block(rows_mu[i], gv, rows_mu[j]) @ Gj
    return LimitCoefficients(N=N, M=M, L=L, K=K)


def spin_coefficients(F, G1, G2, H, hK_expect):
    """Closed-form coefficients of the spin-chain model (one channel)."""
    F = _require_hermitian(F, name="F")
    G1 = _require_hermitian(G1, name="G1")
    G2 = _require_hermitian(G2, name="G2")
    H = _require_hermitian(H, name="H")
    if abs(np.imag(hK_expect)) > DEFAULT.hermitian:
        raise ValidationError(f"<chi0, H_K chi0> must be real, got {hK_expect!r}")
    spectrum = hermitian_eig(F)
    e = spectrum.eigenvalues
    f_F = spectrum.map(scalar_f(e))
    g_F = spectrum.map(scalar_g(e))
    lower = G1 - 1j * G2
    upper = G1 + 1j * G2
    ident = np.eye(F.shape[0])
    K = 1j * H + 1j * np.real(hK_expect) * ident + upper @ g_F @ lower
    return LimitCoefficients(
        N=spectrum.map(np.exp(1j * e))[None, None],
        M=(f_F @ lower)[None],
        L=(upper @ f_F)[None],
        K=K,
    )


@dataclass(frozen=True)
class CheckedCoefficients:
    """Coefficients together with the defects of the three HP identities.

    ``hp_residuals`` has keys ``isometry``, ``coisometry``, ``drift`` and
    ``m_relation``; each is a Frobenius norm.
    """

    coeffs: LimitCoefficients
    hp_residuals: dict
    tol: float

    @property
    def passed(self):
        return all(r <= self.tol for r in self.hp_residuals.values())

    def as_dict(self):
        return {"passed": self.passed, "tol": self.tol, "residuals": dict(self.hp_residuals)}


def _block_matrix(N):
    n, _, d, _ = N.shape
    return N.transpose(0, 2, 1, 3).reshape(n * d, n * d)


def hp_check(coeffs, tol=None):
    tol = DEFAULT.hp if tol is None else tol
    n, d = coeffs.channels, coeffs.dim
    big = _block_matrix(coeffs.N)
    ident = np.eye(n * d)
    drift = coeffs.K + dagger(coeffs.K)
    for Lp in coeffs.L:
        drift = drift + Lp @ dagger(Lp)
    m_defect = np.array(coeffs.M)
    for p in range(n):
        for q in range(n):
            m_defect[p] += coeffs.N[p, q] @ dagger(coeffs.L[q])
    residuals = {
        "isometry": fro_norm(dagger(big) @ big - ident),
        "coisometry": fro_norm(big @ dagger(big) - ident),
        "drift": fro_norm(drift),
        "m_relation": fro_norm(m_defect),
    }
    return CheckedCoefficients(coeffs=coeffs, hp_residuals=residuals, tol=tol)


def gauge_invariance_defect(model, phase, indices=None):
    """Distance between the coefficients for ``chi`` and for a rephased family.

    By default every ``chi[j]`` is multiplied by ``exp(i phase)``; pass
    ``indices`` to rotate only some of them.
    """
    indices = range(model.channels + 1) if indices is None else indices
    rot = np.exp(1j * phase)
    chi = [rot * c if j in set(indices) else c for j, c in enumerate(model.chi)]
    before = limit_coefficients(model)
    after = limit_coefficients(model.with_chi(chi))
    return before.distance(after)


def lemma4_hypothesis_check(model, tol=None):
    """Check ``mu_j chi0`` lies in ``S = span(chi[1:])`` and ``lambda_j S`` stays in ``S``."""
    tol = DEFAULT.structure if tol is None else tol
    S = np.stack(model.chi[1:], axis=1)
    P = S @ dagger(S)
    outside = np.eye(model.dim_noise) - P
    checks = []
    for j, mu in enumerate(model.mu_list):
        res = float(np.linalg.norm(outside @ (mu @ model.chi[0])))
        checks.append(Check(f"mu[{j}]chi0 in S", res <= tol, res))
    for j, lam in enumerate(model.lambda_list):
        res = fro_norm(outside @ lam @ S)
        checks.append(Check(f"lambda[{j}] S in S", res <= tol, res))
    return ValidationReport(tuple(checks))
