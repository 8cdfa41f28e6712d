import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from repeated_qsde.coefficients import (
    check_F,
    gauge_invariance_defect,
    hp_check,
    lemma4_hypothesis_check,
    limit_coefficients,
    scalar_f,
    scalar_g,
    spin_coefficients,
)
from repeated_qsde.config import DEFAULT
from repeated_qsde.errors import ValidationError
from repeated_qsde.examples import (
    default_spin_chain,
    holevo_truncated,
    random_hermitian,
    random_structured_model,
    spin_chain,
)
from repeated_qsde.linalg import dagger
from repeated_qsde.model import ModelSpec

seeds = st.integers(0, 2**32 - 1)

# (x, f(x), g(x)) evaluated at 40 digits
FG_ORACLE = [
    (1e-6, complex(-4.9999999999995833333e-7, 0.99999999999983333333),
     complex(-0.49999999999995833333, -1.6666666666665833333e-7)),
    (9.9e-5, complex(-0.000049499999959570875013, 0.9999999983665000008),
     complex(-0.49999999959162500013, -0.000016499999991914175002)),
    (1.0001e-4, complex(-0.000050004999958320832097, 0.99999999833299998417),
     complex(-0.49999999958324999597, -0.000016668333324997499752)),
    (-3e-3, complex(0.0014999988750003374999, 0.99999850000067499986),
     complex(-0.49999962500011249998, 0.00049999977500004821428)),
    (0.5, complex(-0.24483487621925456777, 0.95885107720840600055),
     complex(-0.48966975243850913553, -0.082297845583187998907)),
    (1.0, complex(-0.4596976941318602826, 0.84147098480789650665),
     complex(-0.4596976941318602826, -0.15852901519210349335)),
    (3.0, complex(-0.66333083220014848576, 0.047040002686622407367),
     complex(-0.22111027740004949525, -0.31765333243779253088)),
    (-2.5, complex(0.72045744621877348593, 0.23938885764158259762),
     complex(-0.28818297848750939437, 0.30424445694336696095)),
    (10.0, complex(-0.18390715290764524523, -0.05440211108893698134),
     complex(-0.018390715290764524523, -0.10544021110889369813)),
]


def rand_herm(rng, n):
    return random_hermitian(rng, n)


def test_f_g_limits():
    assert scalar_f(0.0) == 1j
    assert scalar_g(0.0) == -0.5
    assert abs(scalar_f(np.pi) - (-2 / np.pi)) < 1e-15


@pytest.mark.parametrize("x,f,g", FG_ORACLE)
def test_f_g_oracle(x, f, g):
    assert abs(scalar_f(x) - f) < 1e-15
    assert abs(scalar_g(x) - g) < 1e-15


def test_switch_continuity():
    r = DEFAULT.series_radius
    for edge in (r, -r):
        below = np.nextafter(edge, 0.0)
        assert abs(scalar_f(below) - scalar_f(edge)) < 1e-14
        assert abs(scalar_g(below) - scalar_g(edge)) < 1e-14


def test_g_real_part_identity():
    xs = np.concatenate([np.linspace(-20, 20, 801), np.geomspace(1e-8, 1, 50)])
    xs = xs[xs != 0]
    half = np.sin(xs / 2) / (xs / 2)
    rhs = -half * half  # 2 (cos x - 1) / x^2
    g = scalar_g(xs)
    assert np.max(np.abs((g + np.conj(g)) - rhs)) < 1e-14


def test_f_bounds():
    xs = np.concatenate([np.linspace(-50, 50, 1001), np.geomspace(1e-9, 1e-2, 30)])
    xs = xs[xs != 0]
    absf = np.abs(scalar_f(xs))
    assert np.all(absf <= 2 / np.abs(xs) * (1 + 1e-15))
    assert np.all(absf <= 1 + 1e-15)


def test_vectorised_matches_scalar():
    xs = np.array([x for x, _, _ in FG_ORACLE])
    assert np.array_equal(scalar_f(xs), np.array([scalar_f(x) for x in xs]))


def test_check_F():
    m = spin_chain(*(np.zeros((2, 2)),) * 5).model
    assert np.array_equal(check_F(m), np.zeros((4, 4)))
    rng = np.random.default_rng(0)
    f = rand_herm(rng, 2)
    m = spin_chain(f, *(np.zeros((2, 2)),) * 4).model
    assert np.array_equal(check_F(m), np.kron(f, np.diag([1.0, 0.0])))
    big = random_structured_model(rng, dim_initial=3, dim_noise=5, n_F=3)
    cf = check_F(big)
    assert np.linalg.norm(cf - dagger(cf)) < 1e-12


def test_no_f_terms():
    rng = np.random.default_rng(1)
    model = random_structured_model(rng, dim_noise=4, channels=2, n_F=0, n_G=2, n_H=1)
    c = limit_coefficients(model)
    chi0 = model.chi[0]
    mu0 = [mu @ chi0 for mu in model.mu_list]
    for p in range(2):
        for q in range(2):
            assert np.allclose(c.N[p, q], np.eye(2) * (p == q), atol=1e-14)
        want = sum(1j * np.vdot(model.chi[p + 1], m0) * G for m0, G in zip(mu0, model.G_list))
        assert np.allclose(c.M[p], want, atol=1e-14)
    W = lambda i, j: -0.5 * np.vdot(mu0[i], mu0[j])
    want_k = sum(1j * np.vdot(chi0, nu @ chi0) * H for H, nu in zip(model.H_list, model.nu_list))
    want_k = want_k + sum(Gi @ (W(i, j) * Gj) for i, Gi in enumerate(model.G_list) for j, Gj in enumerate(model.G_list))
    assert np.allclose(c.K, want_k, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 4))
def test_spin_pipeline_matches_closed_form(seed, dim):
    rng = np.random.default_rng(seed)
    F, G1, G2, H = (rand_herm(rng, dim) for _ in range(4))
    HK = rand_herm(rng, 2)
    bundle = spin_chain(F, G1, G2, H, HK)
    assert limit_coefficients(bundle.model).distance(bundle.expected) <= 1e-12


def test_spin_closed_form_without_f():
    rng = np.random.default_rng(2)
    z = np.zeros((2, 2))
    G1, G2, H = rand_herm(rng, 2), rand_herm(rng, 2), rand_herm(rng, 2)
    c = spin_coefficients(z, G1, G2, H, 0.7)
    lower, upper = G1 - 1j * G2, G1 + 1j * G2
    assert np.allclose(c.N[0, 0], np.eye(2))
    assert np.allclose(c.M[0], 1j * lower)
    assert np.allclose(c.L[0], 1j * upper)
    assert np.allclose(c.K, 1j * H + 0.7j * np.eye(2) - 0.5 * upper @ lower)
    res = hp_check(c).hp_residuals
    assert res["drift"] < 1e-14


def test_spin_closed_form_scalar_pi():
    g1, g2 = np.array([[0.3]]), np.array([[-0.2]])
    c = spin_coefficients(np.pi * np.eye(1), g1, g2, np.zeros((1, 1)), 0.0)
    assert abs(c.N[0, 0, 0, 0] + 1) < 1e-15
    assert abs(c.M[0, 0, 0] - (-2 / np.pi) * (0.3 + 0.2j)) < 1e-15


def test_spin_closed_form_rejects_non_hermitian():
    bad = np.array([[0, 1], [0, 0]], dtype=complex)
    with pytest.raises(ValidationError, match="F"):
        spin_coefficients(bad, np.eye(2), np.eye(2), np.eye(2), 0.0)


def test_hp_spin_and_scaled_n():
    c = default_spin_chain().expected
    checked = hp_check(c)
    assert checked.passed and all(r < 1e-12 for r in checked.hp_residuals.values())
    bad = hp_check(c.replace(N=2 * c.N))
    assert not bad.passed
    assert bad.hp_residuals["isometry"] == pytest.approx(3 * np.sqrt(2), rel=1e-12)
    assert all(r >= 0 for r in bad.hp_residuals.values())


def test_holevo_closed_form():
    rng = np.random.default_rng(3)
    F, H = rand_herm(rng, 2), rand_herm(rng, 2)
    G = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    for D in (3, 5, 8):
        b = holevo_truncated(F, G, H, D)
        assert limit_coefficients(b.model).distance(b.expected) <= 1e-12
        assert hp_check(b.expected).passed
    z = holevo_truncated(np.zeros((2, 2)), G, H, 8).expected
    assert np.allclose(z.M[0], 1j * G) and np.allclose(z.L[0], 1j * dagger(G))
    assert np.allclose(z.K, 1j * H - 0.5 * dagger(G) @ G)


def test_gauge_examples():
    m = default_spin_chain().model
    assert gauge_invariance_defect(m, 0.0) == 0.0
    assert gauge_invariance_defect(m, np.pi / 3) < 1e-12
    assert gauge_invariance_defect(m, np.pi / 3, indices=[1]) > 1e-3


@settings(max_examples=20, deadline=None)
@given(seeds, st.floats(0, 2 * np.pi))
def test_gauge_property(seed, phase):
    m = random_structured_model(np.random.default_rng(seed), channels=2, dim_noise=5)
    assert gauge_invariance_defect(m, phase) <= 1e-12


def test_structure_check_spin_and_violation():
    assert lemma4_hypothesis_check(default_spin_chain().model).passed
    e = np.eye(3, dtype=complex)
    mu = np.zeros((3, 3), dtype=complex)
    mu[1, 0] = mu[0, 1] = 1.0
    mu[2, 0] = mu[0, 2] = 0.5
    model = ModelSpec(
        1, 3, 1, G_list=(np.eye(1),), mu_list=(mu,), chi=(e[0], e[1]),
    )
    report = lemma4_hypothesis_check(model)
    assert not report.passed
    assert report["mu[0]chi0 in S"].residual == pytest.approx(0.5)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 3), st.integers(0, 2))
def test_structure_implies_hp(seed, channels, extra):
    rng = np.random.default_rng(seed)
    model = random_structured_model(rng, dim_initial=2, dim_noise=channels + 1 + extra, channels=channels)
    assert lemma4_hypothesis_check(model).passed
    assert hp_check(limit_coefficients(model)).passed


def test_invalid_model_refused_unless_unchecked():
    m = default_spin_chain().model
    bad = ModelSpec(
        m.dim_initial, m.dim_noise, m.channels, m.F_list, m.G_list, m.H_list,
        (np.eye(2),), m.mu_list, m.nu_list, m.chi,
    )
    with pytest.raises(ValidationError):
        limit_coefficients(bad)
    assert limit_coefficients(bad, check=False).K.shape == (2, 2)
