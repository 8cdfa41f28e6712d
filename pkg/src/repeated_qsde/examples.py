"""Built-in interaction models with closed-form limit coefficients.

Each builder returns an :class:`ExampleBundle`: the interaction source, the
coefficients expected in closed form, and whether those coefficients are
asserted to satisfy the HP identities.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .coefficients import scalar_f, scalar_g, spin_coefficients
from .errors import ValidationError
from .linalg import _require_hermitian, apply_scalar_function, dagger, hermitian_eig
from .discrete import DirectInteraction
from .model import LimitCoefficients, ModelSpec

__all__ = [
    "ExampleBundle",
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "annihilation",
    "spin_chain",
    "holevo_truncated",
    "linear_system",
    "linear_system_model",
    "finite_dim_approx",
    "pure_hamiltonian",
    "random_hermitian",
    "random_structured_model",
    "default_spin_chain",
    "BUILTIN",
    "build_example",
]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


@dataclass(frozen=True)
class ExampleBundle:
    name: str
    model: object
    expected: LimitCoefficients
    hp_asserted: bool = True
    notes: str = ""
    params: dict = field(default_factory=dict)


def annihilation(dim):
    """Truncated lowering operator; the creation operator kills the top level."""
    return np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(np.complex128)


def random_hermitian(rng, dim, scale=1.0):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (a + dagger(a))


def _unitary(rng, dim):
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def spin_chain(F, G1, G2, H, HK):
    """Spin-1/2 noise slices.

    The noise matrices are written in the basis
    ``(chi1, chi0)``: ``lambda = diag(1, 0)``, ``mu1 = sigma_x``,
    ``mu2 = sigma_y``.  Hence ``chi0`` is the second canonical vector.
    """
    F, G1, G2, H = (_require_hermitian(a, name=n) for a, n in ((F, "F"), (G1, "G1"), (G2, "G2"), (H, "H")))
    HK = _require_hermitian(HK, name="HK")
    if HK.shape != (2, 2):
        raise ValidationError(f"HK must be 2x2, got {HK.shape}")
    d = F.shape[0]
    chi0 = np.array([0, 1], dtype=np.complex128)
    chi1 = np.array([1, 0], dtype=np.complex128)
    model = ModelSpec(
        dim_initial=d,
        dim_noise=2,
        channels=1,
        F_list=(F,),
        G_list=(G1, G2),
        H_list=(H, np.eye(d)),
        lambda_list=(np.diag([1.0, 0.0]),),
        mu_list=(SIGMA_X, SIGMA_Y),
        nu_list=(np.eye(2), HK),
        chi=(chi0, chi1),
        name="spin_chain",
    )
    expected = spin_coefficients(F, G1, G2, H, np.vdot(chi0, HK @ chi0).real)
    return ExampleBundle(
        "spin_chain", model, expected, True,
        "Spin-1/2 noise; every model condition holds in finite dimension.",
        {"F": F, "G1": G1, "G2": G2, "H": H, "HK": HK},
    )


def default_spin_chain(seed=7, dim=2):
    """Reproducible generic spin-chain instance used by the CLI and tests."""
    rng = np.random.default_rng(seed)
    F, G1, G2, H = (random_hermitian(rng, dim, 0.5) for _ in range(4))
    HK = random_hermitian(rng, 2, 0.5)
    return spin_chain(F, G1, G2, H, HK)


def holevo_truncated(F, G, H, fock_cut):
    """Fock-space noise slices truncated to ``fock_cut`` levels.

    ``G`` need not be Hermitian; it enters through its Hermitian parts
    ``(G + G^*)/2`` and ``i(G - G^*)/2``.
    """
    if fock_cut < 3:
        raise ValidationError(f"fock_cut must be at least 3, got {fock_cut}")
    F = _require_hermitian(F, name="F")
    H = _require_hermitian(H, name="H")
    G = np.asarray(G, dtype=np.complex128)
    d, D = F.shape[0], fock_cut
    a = annihilation(D)
    ad = dagger(a)
    eta = np.eye(D, dtype=np.complex128)
    model = ModelSpec(
        dim_initial=d,
        dim_noise=D,
        channels=1,
        F_list=(F,),
        G_list=(0.5 * (G + dagger(G)), 0.5j * (G - dagger(G))),
        H_list=(H,),
        lambda_list=(ad @ a,),
        mu_list=(a + ad, 1j * (a - ad)),
        nu_list=(np.eye(D),),
        chi=(eta[0], eta[1]),
        name="holevo_truncated",
    )
    spectrum = hermitian_eig(F)
    f_F = spectrum.map(scalar_f(spectrum.eigenvalues))
    g_F = spectrum.map(scalar_g(spectrum.eigenvalues))
    expected = LimitCoefficients(
        N=spectrum.map(np.exp(1j * spectrum.eigenvalues))[None, None],
        M=(f_F @ G)[None],
        L=(dagger(G) @ f_F)[None],
        K=1j * H + dagger(G) @ g_F @ G,
    )
    return ExampleBundle(
        "holevo_truncated", model, expected, True,
        "Number operator, field quadratures; exact for any cut >= 3.",
        {"F": F, "G": G, "H": H, "fock_cut": D},
    )


def _oscillator(D):
    a = annihilation(D)
    q = a + dagger(a)
    p = 1j * (a - dagger(a))
    return a, q, p


def _linear_parts(m, mp, ks, D):
    a, q, p = _oscillator(D)
    k1, k2, k3, k4, k5, k6 = ks
    H = k1 * p @ p + k2 * (p @ q + q @ p) + k3 * q @ q + k4 * p + k5 * q + k6 * np.eye(D)
    M1 = m * p + mp * q
    L1 = -np.conj(m) * p - np.conj(mp) * q
    return a, q, p, H, M1, L1


def linear_system_model(m, mp, ks, osc_cut):
    """The linear-system interaction written as a :class:`ModelSpec`.

    With ``M1 = A + iB`` (``A``, ``B`` Hermitian) the coupling
    ``-i(M1 (x) a^* + L1 (x) a)`` equals ``A (x) p + B (x) q``.
    """
    a, q, p, H, M1, _ = _linear_parts(m, mp, ks, osc_cut)
    A = 0.5 * (M1 + dagger(M1))
    B = -0.5j * (M1 - dagger(M1))
    eta = np.eye(osc_cut, dtype=np.complex128)
    return ModelSpec(
        dim_initial=osc_cut,
        dim_noise=osc_cut,
        channels=1,
        G_list=(A, B),
        mu_list=(p, q),
        H_list=(H,),
        nu_list=(np.eye(osc_cut),),
        chi=(eta[0], eta[1]),
        name="linear_system",
    )


def linear_system(m, mp, ks, osc_cut):
    """Truncated oscillator coupled linearly to truncated oscillator noise.

    ``ks`` are the six real coefficients of the quadratic Hamiltonian
    ``k1 p^2 + k2 (pq + qp) + k3 q^2 + k4 p + k5 q + k6``.
    """
    if osc_cut < 8:
        raise ValidationError(f"osc_cut must be at least 8, got {osc_cut}")
    ks = tuple(float(x) for x in ks)
    if len(ks) != 6:
        raise ValidationError("linear_system needs six Hamiltonian coefficients")
    D = osc_cut
    a, q, p, H, M1, L1 = _linear_parts(m, mp, ks, D)
    ad = dagger(a)

    def hamiltonian(k, sparse=False):
        if sparse:
            kron = lambda x, y: sp.kron(sp.csr_matrix(x), sp.csr_matrix(y), format="csr")
        else:
            kron = np.kron
        return kron(H, np.eye(D)) - 1j * 2.0 ** (k / 2) * (kron(M1, ad) + kron(L1, a))

    eta = np.eye(D, dtype=np.complex128)
    model = DirectInteraction(D, D, 1, (eta[0], eta[1]), hamiltonian, name="linear_system")
    expected = LimitCoefficients(
        N=np.eye(D)[None, None], M=M1[None], L=L1[None], K=1j * H + 0.5 * L1 @ M1
    )
    return ExampleBundle(
        "linear_system", model, expected, True,
        "Unbounded coefficients represented on low Fock test vectors only.",
        {"m": m, "mp": mp, "ks": ks, "osc_cut": D},
    )


def pure_hamiltonian(H, HK=None):
    """Spin noise with only Hamiltonian terms ``H (x) I`` (plus ``I (x) HK``)."""
    H = _require_hermitian(H, name="H")
    d = H.shape[0]
    zero = np.zeros((d, d))
    HK = np.zeros((2, 2)) if HK is None else HK
    bundle = spin_chain(zero, zero, zero, H, HK)
    model = ModelSpec(
        dim_initial=d, dim_noise=2, channels=1,
        H_list=(H, np.eye(d)), nu_list=(np.eye(2), HK),
        chi=bundle.model.chi, name="pure_hamiltonian",
    )
    return ExampleBundle("pure_hamiltonian", model, bundle.expected, True,
                         "No noise coupling.", {"H": H, "HK": HK})


def finite_dim_approx(H, M, growth=None):
    """Two-level noise with the initial space truncated to ``growth(k)`` levels.

    ``R^k = exp(2^(-k/2) (P M P (x) b^* - P M^* P (x) b) + i 2^-k P H P (x) I)``
    where ``P`` projects onto the first ``growth(k)`` basis vectors.  The
    default growth is ``min(k, dim)``.
    """
    H = _require_hermitian(H, name="H")
    M = np.asarray(M, dtype=np.complex128)
    d = H.shape[0]
    growth = (lambda k: min(k, d)) if growth is None else growth
    b = np.array([[0, 1], [0, 0]], dtype=np.complex128)

    def projector(k):
        g = int(growth(k))
        if g > d or g < 0:
            raise ValidationError(f"growth({k}) = {g} is outside [0, {d}]")
        return np.diag((np.arange(d) < g).astype(np.complex128))

    def hamiltonian(k, sparse=False):
        P = projector(k)
        PMP, PHP = P @ M @ P, P @ H @ P
        coupling = np.kron(PMP, dagger(b)) - np.kron(dagger(PMP), b)
        h = np.kron(PHP, np.eye(2)) - 1j * 2.0 ** (k / 2) * coupling
        return sp.csr_matrix(h) if sparse else h

    chi = (np.array([1, 0], dtype=np.complex128), np.array([0, 1], dtype=np.complex128))
    model = DirectInteraction(d, 2, 1, chi, hamiltonian, projector, name="finite_dim_approx")
    expected = LimitCoefficients(
        N=np.eye(d)[None, None], M=M[None], L=-dagger(M)[None], K=1j * H - 0.5 * dagger(M) @ M
    )
    return ExampleBundle(
        "finite_dim_approx", model, expected, True,
        "Initial space grows with k; test vectors are projected.",
        {"H": H, "M": M},
    )


def random_structured_model(rng, dim_initial=2, dim_noise=4, channels=1, n_F=1, n_G=2, n_H=1, scale=1.0):
    """Random model with ``mu_j chi0`` in ``S = span(chi[1:])`` and ``lambda_j S = S``.

    Noise operators are block-structured in a random orthonormal frame whose
    first ``channels + 1`` columns are ``chi0 .. chin``.
    """
    if dim_noise < channels + 1:
        raise ValidationError("dim_noise must exceed the channel count")
    frame = _unitary(rng, dim_noise)
    n, rest = channels, dim_noise - channels - 1

    def in_frame(block):
        return frame @ block @ dagger(frame)

    lambdas = []
    for _ in range(n_F):
        blk = np.zeros((dim_noise, dim_noise), dtype=np.complex128)
        blk[1:n + 1, 1:n + 1] = random_hermitian(rng, n)
        if rest:
            blk[n + 1:, n + 1:] = random_hermitian(rng, rest)
        lambdas.append(in_frame(blk))
    mus = []
    for _ in range(n_G):
        blk = random_hermitian(rng, dim_noise)
        blk[0, 0] = 0.0
        blk[0, n + 1:] = 0.0
        blk[n + 1:, 0] = 0.0
        mus.append(in_frame(blk))
    nus = [in_frame(random_hermitian(rng, dim_noise)) for _ in range(n_H)]
    return ModelSpec(
        dim_initial=dim_initial,
        dim_noise=dim_noise,
        channels=channels,
        F_list=tuple(random_hermitian(rng, dim_initial, scale) for _ in range(n_F)),
        G_list=tuple(random_hermitian(rng, dim_initial, scale) for _ in range(n_G)),
        H_list=tuple(random_hermitian(rng, dim_initial, scale) for _ in range(n_H)),
        lambda_list=tuple(lambdas),
        mu_list=tuple(mus),
        nu_list=tuple(nus),
        chi=tuple(frame[:, j] for j in range(n + 1)),
        name="random_structured",
    )


def _spin_from_params(params, seed):
    if not params:
        return default_spin_chain(seed)
    return spin_chain(params["F"], params["G1"], params["G2"], params["H"], params["HK"])


def _holevo_from_params(params, seed):
    if not params:
        rng = np.random.default_rng(seed)
        F = random_hermitian(rng, 2, 0.5)
        G = 0.5 * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        return holevo_truncated(F, G, random_hermitian(rng, 2, 0.5), 8)
    return holevo_truncated(params["F"], params["G"], params["H"], int(params.get("fock_cut", 8)))


def _linear_from_params(params, seed):
    params = params or {}
    return linear_system(
        complex(params.get("m", 0.3 + 0.1j)),
        complex(params.get("mp", 0.2 - 0.05j)),
        params.get("ks", (0.05, 0.02, 0.05, 0.1, -0.1, 0.3)),
        int(params.get("osc_cut", 40)),
    )


def _finite_from_params(params, seed):
    if not params:
        rng = np.random.default_rng(seed)
        d = 16
        H = np.diag(rng.normal(size=d)) + np.diag(0.3 * np.ones(d - 1), 1) + np.diag(0.3 * np.ones(d - 1), -1)
        M = 0.4 * np.diag(rng.normal(size=d - 1) + 1j * rng.normal(size=d - 1), 1) + 0.2 * np.eye(d)
        return finite_dim_approx(H, M)
    return finite_dim_approx(params["H"], params["M"])


def _pure_from_params(params, seed):
    if not params:
        rng = np.random.default_rng(seed)
        return pure_hamiltonian(random_hermitian(rng, 2, 0.5))
    return pure_hamiltonian(params["H"], params.get("HK"))


BUILTIN = {
    "spin_chain": _spin_from_params,
    "holevo_truncated": _holevo_from_params,
    "linear_system": _linear_from_params,
    "finite_dim_approx": _finite_from_params,
    "pure_hamiltonian": _pure_from_params,
}


def build_example(name, params=None, seed=7):
    """Build a built-in bundle by name; empty ``params`` selects seeded defaults."""
    try:
        factory = BUILTIN[name]
    except KeyError:
        raise ValidationError(f"unknown example {name!r}; choose from {sorted(BUILTIN)}", key="model.example")
    return factory(params or {}, seed)
