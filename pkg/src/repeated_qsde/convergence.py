"""Trotter-Kato style convergence checks for discrete interaction models.

Three quantities are computed for a source, its limit coefficients and a
pair of coherent drives ``(alpha, beta)``:

* the generator residual ``|2^k (C_k - I) u_k - L u|`` of a single step,
* the semigroup power error ``|C_k^floor(t 2^k) u - exp(t L) u|`` on a
  dyadic time grid,
* the defect between a brute-force chain matrix element and the
  corresponding power of the compressed step, which is exact.
"""
from collections import OrderedDict
from dataclasses import dataclass, field
from fractions import Fraction
import math

import numpy as np

from .discrete import (
    DirectInteraction,
    StepUnitary,
    build_step,
    chain_evolve,
    compress,
    compressed_apply,
    power_exponent,
    product_state,
)
from .errors import QSDEError, ValidationError
from .linalg import as_cvector
from .model import coherent_slice
from .semigroup import evolve, generator

__all__ = [
    "NoiseFloorError",
    "RATE_WINDOW",
    "generator_residual",
    "semigroup_power_error",
    "chain_matrix_elements",
    "chain_vs_semigroup",
    "piecewise_chain_elements",
    "fit_rate",
    "dyadic_grid",
    "classify",
    "ConvergenceReport",
    "convergence_report",
    "WITNESSES",
]

RATE_WINDOW = (-0.7, -0.3)
WITNESSES = (0.0, 1.0, 1j, 1 + 1j)


class NoiseFloorError(QSDEError):
    """Errors are at rounding level; no rate can be fitted."""


_STEP_CACHE = OrderedDict()


def cached_step(source, k, size=8):
    """``build_step`` memoised on ``(id(source), k)``; the step does not depend on the drive."""
    key = (id(source), k)
    hit = _STEP_CACHE.get(key)
    if hit is not None and hit[0] is source:
        _STEP_CACHE.move_to_end(key)
        return hit[1]
    step = build_step(source, k)
    _STEP_CACHE[key] = (source, step)
    while len(_STEP_CACHE) > size:
        _STEP_CACHE.popitem(last=False)
    return step


def _project(source, u, k):
    return source.project(u, k) if isinstance(source, DirectInteraction) else u


def generator_residual(source, coeffs, alpha, beta, u, k, method="auto"):
    """``|2^k (C_k - I) u_k - L u|`` with ``C_k`` compressed between coherent slices."""
    u = as_cvector(u, "u")
    if not np.any(u):
        return 0.0
    uk = _project(source, u, k)
    psi = coherent_slice(source, alpha, k)
    phi = coherent_slice(source, beta, k)
    cu = compressed_apply(source, k, psi, phi, uk, method=method)
    lu = generator(coeffs, alpha, beta).matrix @ u
    return float(np.linalg.norm(2.0 ** k * (cu - uk) - lu))


def dyadic_grid(level, horizon=1):
    """``j 2^-level`` for ``j = 0 .. horizon 2^level``."""
    return [j / 2 ** level for j in range(int(horizon * 2 ** level) + 1)]


def semigroup_power_error(source, coeffs, alpha, beta, u, k, t_grid):
    """Per ``t``: ``|C^floor(t 2^k) u - exp(t L) u|``."""
    u = as_cvector(u, "u")
    step = compress(cached_step(source, k), coherent_slice(source, alpha, k), coherent_slice(source, beta, k))
    gen = generator(coeffs, alpha, beta)
    order = sorted(range(len(t_grid)), key=lambda i: t_grid[i])
    errors = [0.0] * len(t_grid)
    current, exponent = _project(source, u, k), 0
    for i in order:
        target = power_exponent(t_grid[i], k)
        current = np.linalg.matrix_power(step.matrix, target - exponent) @ current
        exponent = target
        errors[i] = float(np.linalg.norm(current - evolve(gen, t_grid[i]) @ u))
    return errors


def chain_matrix_elements(step, u, v, slice_pairs):
    """Brute-force chain elements normalised to compare with ``<u, C_1 .. C_j v>``.

    ``slice_pairs`` lists ``(psi_l, phi_l)`` per slice.  Entry ``j`` is
    ``<u (x) psi_1 .. psi_m, R_(j) v (x) phi_1 .. phi_m>`` divided by
    ``|psi_l| |phi_l|`` for the ``j`` slices already coupled and by
    ``<psi_l, phi_l>`` for the untouched ones.  ``R_(j)`` is evaluated in the
    Schroedinger picture as ``<R_(j)^* (u (x) psi..), v (x) phi..>``.
    """
    psis = [np.asarray(p, dtype=np.complex128) for p, _ in slice_pairs]
    phis = [np.asarray(f, dtype=np.complex128) for _, f in slice_pairs]
    norms = [np.linalg.norm(p) * np.linalg.norm(f) for p, f in zip(psis, phis)]
    overlaps = [np.vdot(p, f) for p, f in zip(psis, phis)]
    if any(abs(o) == 0.0 for o in overlaps):
        raise ValidationError("a slice pair is orthogonal; chain elements cannot be normalised")
    bra = product_state(u, psis, step.k)
    ket = product_state(v, phis, step.k).vector
    m = len(slice_pairs)

    def scale(j):
        return complex(np.prod(norms[:j])) * complex(np.prod(overlaps[j:]))

    out = [np.vdot(bra.vector, ket) / scale(0)]
    state = bra
    for j in range(m):
        state = chain_evolve(step, step.k, 1, state, start=j)
        out.append(np.vdot(state.vector, ket) / scale(j + 1))
    return np.array(out)


def chain_vs_semigroup(source, coeffs, alpha, beta, u, v, k, t_grid, horizon=1, step=None):
    """Per ``t``: ``|chain element at t - <u, C^floor(t 2^k) v>|``.

    This is an exact identity for any unitary step; pass ``step`` to replace
    the model's step (``coeffs`` is accepted for interface symmetry and is
    not used).
    """
    if step is None:
        step = cached_step(source, k)
    elif not isinstance(step, StepUnitary):
        step = StepUnitary(k, step, source.dim_initial, source.dim_noise)
    u = as_cvector(u, "u")
    v = as_cvector(v, "v")
    psi = coherent_slice(source, alpha, k)
    phi = coherent_slice(source, beta, k)
    slices = horizon * 2 ** k
    chain = chain_matrix_elements(step, u, v, [(psi, phi)] * slices)
    c = compress(step, psi, phi).matrix
    defects = []
    for t in t_grid:
        j = power_exponent(t, k)
        if j > slices:
            raise ValidationError(f"t = {t} beyond horizon {horizon}")
        defects.append(float(abs(chain[j] - np.vdot(u, np.linalg.matrix_power(c, j) @ v))))
    return defects


def piecewise_chain_elements(source, drive, k, u, v, step=None):
    """Chain matrix elements at every slice boundary for a piecewise drive."""
    step = build_step(source, k) if step is None else step
    pairs = [
        (coherent_slice(source, a, k), coherent_slice(source, b, k)) for a, b in drive.slice_drives(k)
    ]
    return chain_matrix_elements(step, u, v, pairs), pairs


def fit_rate(k_grid, errors, floor=1e-14):
    """Least-squares slope of ``log2(error)`` against ``k``."""
    k = np.asarray(k_grid, dtype=float)
    e = np.asarray(errors, dtype=float)
    if k.shape != e.shape or k.size < 3 or np.unique(k).size < 3:
        raise ValidationError("fit_rate needs at least three distinct k values with matching errors")
    if np.any(e <= floor):
        raise NoiseFloorError(f"errors reach the noise floor {floor:g}; rate not reported")
    slope, _ = np.polyfit(k, np.log2(e), 1)
    return float(slope)


def classify(residuals, rate=None):
    """``converging``, ``stalled`` or ``diverging`` for a residual sequence."""
    r = np.asarray(residuals, dtype=float)
    if not np.all(np.isfinite(r)) or r[-1] > 2 * r[0]:
        return "diverging"
    if rate is not None and rate > RATE_WINDOW[1]:
        return "stalled"
    if r[-1] > 0.5 * r[0]:
        return "stalled"
    return "converging"


def power_error_ok(sup, factor=4.0, floor=1e-10):
    """Sup error falls by ``factor`` over the grid, or is already at rounding level."""
    return sup[-1] <= floor or sup[-1] * factor <= sup[0]


def _decreasing(values, allowed_jitter=1):
    ups = sum(1 for a, b in zip(values, values[1:]) if b >= a)
    return ups <= allowed_jitter


@dataclass
class ConvergenceReport:
    """Per-drive residuals, semigroup errors, fitted rates and pass flags."""

    model_id: str
    alphas: list
    betas: list
    k_grid: list
    t_grid: list
    seed: int
    cells: list = field(default_factory=list)
    drives: list = field(default_factory=list)

    @property
    def passed(self):
        return all(all(d["pass"].values()) for d in self.drives)

    @property
    def fitted_rate(self):
        """Worst (largest) fitted residual rate over the drives, or ``None``."""
        rates = [d["fitted_rate"] for d in self.drives if d["fitted_rate"] is not None]
        return max(rates) if rates else None

    def as_dict(self):
        return {
            "model": self.model_id,
            "seed": self.seed,
            "k_grid": list(self.k_grid),
            "t_grid": list(self.t_grid),
            "alphas": [[z.real, z.imag] for z in self.alphas],
            "betas": [[z.real, z.imag] for z in self.betas],
            "fitted_rate": self.fitted_rate,
            "passed": self.passed,
            "drives": self.drives,
        }


def convergence_report(source, coeffs, u, k_grid, alphas=WITNESSES, betas=WITNESSES,
                       t_level=None, horizon=1, seed=0, model_id=None, rate_window=RATE_WINDOW,
                       power_errors=True, method="auto"):
    """Run residuals and semigroup errors over every ``(alpha, beta)`` pair.

    Drives are single-channel scalars broadcast to every channel.  The time
    grid is dyadic with level ``t_level`` (default ``min(k_grid)``).
    """
    k_grid = sorted(int(k) for k in k_grid)
    if len(set(k_grid)) != len(k_grid) or not k_grid:
        raise ValidationError("k_grid must be non-empty and strictly increasing")
    t_level = min(k_grid) if t_level is None else t_level
    t_grid = dyadic_grid(t_level, horizon)
    n = source.channels
    report = ConvergenceReport(
        model_id or getattr(source, "name", "model"), list(alphas), list(betas), k_grid, t_grid, seed
    )
    for ia, a in enumerate(alphas):
        for ib, b in enumerate(betas):
            av, bv = np.full(n, a, dtype=complex), np.full(n, b, dtype=complex)
            residuals = [generator_residual(source, coeffs, av, bv, u, k, method=method) for k in k_grid]
            errors = {}
            if power_errors:
                for k in k_grid:
                    errors[k] = semigroup_power_error(source, coeffs, av, bv, u, k, t_grid)
            try:
                rate = fit_rate(k_grid, residuals)
                floor = False
            except NoiseFloorError:
                rate, floor = None, True
            status = classify(residuals, rate)
            checks = {
                "residual_decreasing": _decreasing(residuals),
                "rate_in_window": rate is not None and rate_window[0] <= rate <= rate_window[1],
            }
            if power_errors:
                sup = [max(errors[k]) for k in k_grid]
                checks["power_error_decreasing"] = power_error_ok(sup)
            report.drives.append({
                "alpha_index": ia,
                "beta_index": ib,
                "residuals": residuals,
                "sup_power_error": [max(errors[k]) for k in k_grid] if power_errors else None,
                "fitted_rate": rate,
                "noise_floor": floor,
                "status": status,
                "pass": checks,
            })
            for ik, k in enumerate(k_grid):
                for it, t in enumerate(t_grid):
                    report.cells.append({
                        "k": k,
                        "alpha": ia,
                        "beta": ib,
                        "t": t,
                        "residual": residuals[ik],
                        "error": errors[k][it] if power_errors else math.nan,
                        "rate": rate if rate is not None else math.nan,
                    })
    report.cells.sort(key=lambda c: (c["k"], c["alpha"], c["beta"], c["t"]))
    return report
