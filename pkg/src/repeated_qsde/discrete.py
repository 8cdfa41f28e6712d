"""Discrete interaction models: step unitaries, compressed steps and chains.

Every function here accepts an *interaction source*: either a
:class:`~repeated_qsde.model.ModelSpec` or a :class:`DirectInteraction`
whose Hamiltonian is produced by a user function of ``k``.

Chain states are laid out with the initial space as the most significant
index followed by noise slices ``1..m``.  :func:`chain_evolve` applies the
adjoint step at slices ``1, 2, ...`` in turn, which is the Schroedinger
picture of the cocycle ``R_t = R_(1) R_(2) ... R_(j)``.
"""
from dataclasses import dataclass, field
import math

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .config import DEFAULT
from .errors import CapacityError, ValidationError
from .linalg import as_cmatrix, as_cvector, check_capacity, dagger, expm, expm_action, fro_norm, op_norm
from .model import ModelSpec

__all__ = [
    "DirectInteraction",
    "StepUnitary",
    "CompressedStep",
    "ChainState",
    "build_hamiltonian",
    "build_step",
    "compress",
    "compressed_apply",
    "power",
    "power_exponent",
    "product_state",
    "chain_evolve",
    "local_operator_on_slice",
]


@dataclass(frozen=True)
class DirectInteraction:
    """An interaction whose Hamiltonian ``H^k`` is built directly.

    ``hamiltonian_fn(k, sparse)`` returns ``H^k`` on ``initial (x) noise`` as a
    dense array, or a scipy sparse matrix when ``sparse`` is true.
    ``projector_fn(k)``, if given, returns the orthogonal projection applied
    to test vectors at level ``k``.
    """

    dim_initial: int
    dim_noise: int
    channels: int
    chi: tuple
    hamiltonian_fn: object
    projector_fn: object = None
    name: str = "direct"

    @property
    def dim(self):
        return self.dim_initial * self.dim_noise

    def project(self, u, k):
        if self.projector_fn is None:
            return u
        return self.projector_fn(k) @ u


def _check_source(source):
    if not isinstance(source, (ModelSpec, DirectInteraction)):
        raise TypeError(f"expected a ModelSpec or DirectInteraction, got {type(source).__name__}")


def build_hamiltonian(source, k, sparse=False):
    """``H^k`` with exact power-of-two scalings on the F and G blocks."""
    _check_source(source)
    if isinstance(source, DirectInteraction):
        h = source.hamiltonian_fn(k, sparse)
        return h if sparse else as_cmatrix(h, "H^k")
    d = source.dim
    if sparse:
        out = sp.csr_matrix((d, d), dtype=np.complex128)
        kron = lambda a, b: sp.kron(sp.csr_matrix(a), sp.csr_matrix(b), format="csr")
    else:
        check_capacity(d, d)
        out = np.zeros((d, d), dtype=np.complex128)
        kron = np.kron
    for F, lam in zip(source.F_list, source.lambda_list):
        out = out + 2.0 ** k * kron(F, lam)
    for G, mu in zip(source.G_list, source.mu_list):
        out = out + 2.0 ** (k / 2) * kron(G, mu)
    for H, nu in zip(source.H_list, source.nu_list):
        out = out + kron(H, nu)
    return out


@dataclass(frozen=True)
class StepUnitary:
    """The single-step interaction unitary on ``initial (x) noise``."""

    k: int
    matrix: np.ndarray
    dim_initial: int
    dim_noise: int

    def __post_init__(self):
        m = as_cmatrix(self.matrix, "step")
        d = self.dim_initial * self.dim_noise
        if m.shape != (d, d):
            raise ValidationError(f"step has shape {m.shape}, expected ({d}, {d})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def unitarity_residual(self):
        m = self.matrix
        return fro_norm(dagger(m) @ m - np.eye(m.shape[0]))


def build_step(source, k):
    """``R^k = exp(i 2^-k H^k)``."""
    h = build_hamiltonian(source, k)
    return StepUnitary(k, expm(1j * 2.0 ** (-k) * h), source.dim_initial, source.dim_noise)


@dataclass(frozen=True)
class CompressedStep:
    """``<u, C v> = <u (x) psi, R v (x) phi> / (|psi| |phi|)``, a contraction."""

    k: int
    matrix: np.ndarray
    psi: np.ndarray
    phi: np.ndarray

    def norm(self):
        return op_norm(self.matrix)


def _normalised_pair(psi, phi, dim_noise):
    psi = as_cvector(psi, "psi")
    phi = as_cvector(phi, "phi")
    for name, v in (("psi", psi), ("phi", phi)):
        if v.shape[0] != dim_noise:
            raise ValidationError(f"{name} has length {v.shape[0]}, expected {dim_noise}")
        if np.linalg.norm(v) == 0.0:
            raise ValidationError(f"{name} is the zero vector")
    return psi, phi, float(np.linalg.norm(psi) * np.linalg.norm(phi))


def compress(step, psi, phi):
    dh, dk = step.dim_initial, step.dim_noise
    psi, phi, scale = _normalised_pair(psi, phi, dk)
    r4 = step.matrix.reshape(dh, dk, dh, dk)
    mat = np.einsum("s,asbt,t->ab", psi.conj(), r4, phi) / scale
    return CompressedStep(step.k, mat, psi, phi)


def compressed_apply(source, k, psi, phi, u, method="auto"):
    """Return ``C u`` for the compressed step of ``source`` at level ``k``.

    ``method="dense"`` forms the full step; ``method="action"`` only applies
    ``exp(i 2^-k H^k)`` to ``u (x) phi`` using a sparse Hamiltonian, which is
    the route for models beyond the dense capacity.  ``"auto"`` picks dense
    whenever the step fits the capacity limit and has at most 512 rows.
    """
    _check_source(source)
    dh, dk = source.dim_initial, source.dim_noise
    psi, phi, scale = _normalised_pair(psi, phi, dk)
    u = as_cvector(u, "u")
    if method == "auto":
        d = source.dim
        method = "dense" if d <= 512 and d * d <= DEFAULT.max_entries else "action"
    if method == "dense":
        return compress(build_step(source, k), psi, phi).matrix @ u
    if method != "action":
        raise ValueError(f"unknown method {method!r}")
    h = build_hamiltonian(source, k, sparse=True)
    out = expm_action(1j * 2.0 ** (-k) * h, np.kron(u, phi))
    return np.einsum("s,as->a", psi.conj(), out.reshape(dh, dk)) / scale


def power_exponent(t, k):
    if not math.isfinite(t) or t < 0:
        raise ValidationError(f"time must be finite and non-negative, got {t!r}")
    return math.floor(t * 2 ** k)


def power(step, t):
    """``C^floor(t 2^k)`` by binary exponentiation."""
    return np.linalg.matrix_power(step.matrix, power_exponent(t, step.k))


@dataclass
class ChainState:
    """A state on ``initial (x) noise^(x)slices``."""

    k: int
    slices: int
    vector: np.ndarray
    dim_initial: int
    dim_noise: int

    def __post_init__(self):
        expected = self.dim_initial * self.dim_noise ** self.slices
        if self.vector.shape != (expected,):
            raise ValidationError(f"chain vector has shape {self.vector.shape}, expected ({expected},)")

    def copy(self):
        return ChainState(self.k, self.slices, self.vector.copy(), self.dim_initial, self.dim_noise)


def product_state(u, slice_vectors, k=0):
    """``u (x) slice_vectors[0] (x) ... (x) slice_vectors[-1]``."""
    u = as_cvector(u, "u")
    vecs = [as_cvector(v, f"slice[{i}]") for i, v in enumerate(slice_vectors)]
    dn = vecs[0].shape[0] if vecs else 1
    total = u.shape[0] * dn ** len(vecs)
    if total > DEFAULT.max_entries:
        raise CapacityError(
            f"chain state needs {total} amplitudes; the capacity limit is {DEFAULT.max_entries}",
            requested=total,
            limit=DEFAULT.max_entries,
        )
    out = u
    for v in vecs:
        out = np.kron(out, v)
    return ChainState(k, len(vecs), out, u.shape[0], dn)


def _step_matrix(source, k):
    if isinstance(source, StepUnitary):
        return source.matrix
    if isinstance(source, (ModelSpec, DirectInteraction)):
        return build_step(source, k).matrix
    return as_cmatrix(source, "step")


def chain_evolve(source, k, steps, initial, start=0, adjoint=True):
    """Apply the step at slices ``start+1 .. start+steps`` and return a new state.

    ``source`` is a model, a :class:`StepUnitary` or a raw unitary matrix.
    With ``adjoint=True`` (the default) each slice receives ``R^*``, so the
    result is ``R_t^* psi`` for ``t = (start + steps) 2^-k`` when ``start=0``.
    """
    if start + steps > initial.slices:
        raise ValidationError(
            f"cannot apply {steps} steps from slice {start + 1}; chain has {initial.slices} slices"
        )
    state = initial.copy()
    if steps == 0:
        return state
    op = _step_matrix(source, k)
    op = np.ascontiguousarray(dagger(op) if adjoint else op)
    dh, dn = state.dim_initial, state.dim_noise
    if op.shape != (dh * dn, dh * dn):
        raise ValidationError(f"step has shape {op.shape}, chain expects ({dh * dn}, {dh * dn})")
    for slot in range(start + 1, start + steps + 1):
        _kernels.apply_local(state.vector, op, dh, dn, state.slices, slot)
    return state


def local_operator_on_slice(state, op, slot):
    """Return a copy of ``state`` with ``op`` (on noise only) applied at ``slot``."""
    dn = state.dim_noise
    op = as_cmatrix(op)
    full = np.kron(np.eye(state.dim_initial), op)
    out = state.copy()
    _kernels.apply_local(out.vector, full, state.dim_initial, dn, state.slices, slot)
    return out
