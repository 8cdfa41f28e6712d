"""Limit generators and their contraction semigroups."""
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ValidationError
from .linalg import expm

__all__ = ["Generator", "generator", "evolve", "PiecewiseDrive", "piecewise_evolve"]


def _channel_vector(x, n, name):
    x = np.atleast_1d(np.asarray(x, dtype=np.complex128))
    if x.shape != (n,):
        raise ValidationError(f"{name} has length {x.size}, expected {n} channels")
    return x


@dataclass(frozen=True)
class Generator:
    alpha: np.ndarray
    beta: np.ndarray
    matrix: np.ndarray


def generator(coeffs, alpha, beta):
    """Generator of ``T_t`` for coherent drives ``alpha`` (bra) and ``beta`` (ket):

        sum_ij conj(a_i) N_ij b_j + sum_i conj(a_i) M_i + sum_i L_i b_i + K
        - (|a|^2 + |b|^2) / 2
    """
    n = coeffs.channels
    a = _channel_vector(alpha, n, "alpha")
    b = _channel_vector(beta, n, "beta")
    mat = np.array(coeffs.K)
    mat += np.einsum("i,ijxy,j->xy", a.conj(), coeffs.N, b)
    mat += np.einsum("i,ixy->xy", a.conj(), coeffs.M)
    mat += np.einsum("ixy,i->xy", coeffs.L, b)
    mat -= 0.5 * (np.vdot(a, a).real + np.vdot(b, b).real) * np.eye(coeffs.dim)
    return Generator(a, b, mat)


def evolve(gen, t):
    """``exp(t L)``; always Pade, the generator is not normal in general."""
    if not np.isfinite(t) or t < 0:
        raise ValidationError(f"time must be finite and non-negative, got {t!r}")
    return expm(t * gen.matrix, method="pade")


def _dyadic(x, max_level):
    q = Fraction(x)
    if q.denominator > 2 ** max_level or q.denominator & (q.denominator - 1):
        raise ValidationError(f"breakpoint {x!r} is not a dyadic rational with denominator <= 2^{max_level}")
    return q


@dataclass(frozen=True)
class PiecewiseDrive:
    """Simple functions on ``[0, breakpoints[-1]]``.

    Interval ``j`` is ``[breakpoints[j], breakpoints[j+1])`` and carries
    ``alphas[j]``, ``betas[j]``.  Breakpoints are stored as exact
    :class:`fractions.Fraction` values with power-of-two denominators.
    """

    breakpoints: tuple
    alphas: tuple
    betas: tuple
    max_level: int = 30

    def __post_init__(self):
        bp = tuple(_dyadic(x, self.max_level) for x in self.breakpoints)
        if len(bp) < 2 or bp[0] != 0:
            raise ValidationError("breakpoints must start at 0 and contain at least one interval")
        if any(b <= a for a, b in zip(bp, bp[1:])):
            raise ValidationError("breakpoints must be strictly increasing")
        if len(self.alphas) != len(bp) - 1 or len(self.betas) != len(bp) - 1:
            raise ValidationError(
                f"{len(bp) - 1} intervals need as many alphas and betas, got "
                f"{len(self.alphas)} and {len(self.betas)}"
            )
        object.__setattr__(self, "breakpoints", bp)

    @property
    def horizon(self):
        return self.breakpoints[-1]

    def interval(self, t):
        """Index of the interval containing ``t`` (the last one for ``t = horizon``)."""
        t = Fraction(t)
        for j in range(len(self.breakpoints) - 1):
            if t < self.breakpoints[j + 1]:
                return j
        return len(self.breakpoints) - 2

    def slice_drives(self, k):
        """Per-slice ``(alpha, beta)`` for the ``horizon * 2^k`` slices at level ``k``."""
        count = self.horizon * 2 ** k
        if count.denominator != 1:
            raise ValidationError(f"horizon {self.horizon} is not a multiple of 2^-{k}")
        out = []
        for s in range(int(count)):
            j = self.interval(Fraction(s, 2 ** k))
            out.append((self.alphas[j], self.betas[j]))
        return out


def piecewise_evolve(coeffs, drive, t):
    """Ordered product of interval semigroups up to time ``t``, earliest on the left."""
    if not 0 <= Fraction(t) <= drive.horizon:
        raise ValidationError(f"t = {t} outside [0, {drive.horizon}]")
    t = Fraction(t)
    out = np.eye(coeffs.dim, dtype=np.complex128)
    bp = drive.breakpoints
    for j in range(len(bp) - 1):
        if t <= bp[j]:
            break
        length = min(t, bp[j + 1]) - bp[j]
        gen = generator(coeffs, drive.alphas[j], drive.betas[j])
        out = out @ evolve(gen, float(length))
    return out
