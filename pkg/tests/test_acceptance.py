"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import json
import time
from decimal import Decimal, getcontext

import numpy as np
import pytest

from repeated_qsde import cli
from repeated_qsde.coefficients import (
    gauge_invariance_defect,
    hp_check,
    lemma4_hypothesis_check,
    limit_coefficients,
    spin_coefficients,
)
from repeated_qsde.convergence import chain_vs_semigroup, dyadic_grid, fit_rate, generator_residual
from repeated_qsde.examples import build_example, default_spin_chain, random_hermitian, random_structured_model, spin_chain
from repeated_qsde.model import exp_vector_overlap_error

RESULTS = []


def verdict(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def spin_sweep():
    cfg = cli.parse_config("")
    source, expected, _ = cfg.build()
    start = time.perf_counter()
    report = cli.run_converge(cfg, source, expected)
    return report, time.perf_counter() - start


def test_criterion_01_chain_identity():
    spin = default_spin_chain().model
    rng = np.random.default_rng(2024)
    u = rng.normal(size=2) + 1j * rng.normal(size=2)
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    start = time.perf_counter()
    worst = 0.0
    for k in range(5):
        for a in (0, 1, 1j):
            for b in (0, 1, 1j):
                worst = max(worst, max(chain_vs_semigroup(spin, None, [a], [b], u, v, k, dyadic_grid(k))))
    elapsed = time.perf_counter() - start
    verdict(1, worst <= 1e-10 and elapsed <= 60, f"max defect {worst:.2e}, {elapsed:.1f} s")


def test_criterion_02_closed_form():
    rng = np.random.default_rng(99)
    F, G1, G2, H, HK = (random_hermitian(rng, 2) for _ in range(5))
    bundle = spin_chain(F, G1, G2, H, HK)
    dist = limit_coefficients(bundle.model).distance(spin_coefficients(F, G1, G2, H, _chi0_energy(HK)))
    verdict(2, dist <= 1e-12, f"blockwise distance {dist:.2e}")


def _chi0_energy(HK):
    # <chi0, HK chi0> with chi0 the second basis vector
    return float(HK[1, 1].real)


def test_criterion_03_hp_algebra():
    spin = default_spin_chain()
    holevo = build_example("holevo_truncated")
    assert holevo.params["fock_cut"] == 8
    finite = build_example("finite_dim_approx")
    coeffs = {
        "spin_chain": limit_coefficients(spin.model),
        "holevo_truncated": limit_coefficients(holevo.model),
        "finite_dim_approx": finite.expected,
    }
    worst = {name: max(hp_check(c).hp_residuals.values()) for name, c in coeffs.items()}
    detail = ", ".join(f"{n} {r:.1e}" for n, r in worst.items())
    verdict(3, all(r <= 1e-10 for r in worst.values()), detail)


def test_criterion_04_generator_residual_rate(spin_sweep):
    report, elapsed = spin_sweep
    rates = [d["fitted_rate"] for d in report.drives]
    ok = all(d["pass"]["residual_decreasing"] and d["pass"]["rate_in_window"] for d in report.drives)
    verdict(4, ok and elapsed <= 30,
            f"rates in [{min(rates):.3f}, {max(rates):.3f}], {elapsed:.1f} s")


def test_criterion_05_power_error(spin_sweep):
    report, _ = spin_sweep
    factors = [d["sup_power_error"][0] / d["sup_power_error"][-1] for d in report.drives]
    verdict(5, report.k_grid[0] == 6 and report.k_grid[-1] == 14 and min(factors) >= 4,
            f"smallest decrease factor {min(factors):.1f}")


def test_criterion_06_pure_hamiltonian_rate():
    cfg = cli.parse_config('{"model": {"example": "pure_hamiltonian"}}')
    source, expected, _ = cfg.build()
    ks = cfg.k_grid
    res = [max(generator_residual(source, expected, [0], [0], u, k)
               for u in cli.initial_vectors(source.dim_initial, None, cfg.seed)) for k in ks]
    rate = fit_rate(ks, res)
    verdict(6, -1.2 <= rate <= -0.8, f"rate {rate:.3f}")


def test_criterion_07_gauge():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(10):
        model = random_structured_model(rng, dim_initial=2, dim_noise=5, channels=2)
        for phase in rng.uniform(0, 2 * np.pi, size=100):
            worst = max(worst, gauge_invariance_defect(model, phase))
    verdict(7, worst <= 1e-12, f"max defect {worst:.2e}")


def test_criterion_08_structure_implies_hp():
    rng = np.random.default_rng(8)
    passed = 0
    for i in range(50):
        channels = 1 + i % 3
        model = random_structured_model(rng, dim_initial=2 + i % 2, dim_noise=channels + 1 + i % 3,
                                    channels=channels)
        assert lemma4_hypothesis_check(model).passed
        passed += hp_check(limit_coefficients(model), 1e-10).passed
    verdict(8, passed == 50, f"{passed}/50 models pass hp_check")


def _overlap_oracle(k):
    getcontext().prec = 60
    base = 1 + Decimal(2) ** -k
    for _ in range(k):
        base = base * base
    return float(Decimal(1).exp() - base)


def test_criterion_09_overlap_formula():
    vals = [exp_vector_overlap_error(1.0, k) for k in range(21)]
    err = max(abs(v - _overlap_oracle(k)) for k, v in enumerate(vals))
    monotone = all(b < a for a, b in zip(vals, vals[1:])) and vals[-1] < 1e-5 and vals[-1] > 0
    verdict(9, err <= 1e-14 and monotone, f"max error {err:.1e}, monotone {monotone}")


def test_criterion_10_linear_truncation_floor():
    start = time.perf_counter()
    floors, decreasing = {}, True
    for D in (40, 60):
        cfg = cli.parse_config(json.dumps({"model": {"example": "linear_system", "params": {"osc_cut": D}}}))
        source, expected, _ = cfg.build()
        us = cli.initial_vectors(D, cfg.u_span, cfg.seed)
        drives = [(a, b) for a in cfg.witness_list("alphas") for b in cfg.witness_list("betas")]
        res = [max(generator_residual(source, expected, [a], [b], u, k) for u in us for a, b in drives)
               for k in cfg.k_grid]
        decreasing &= all(y < x for x, y in zip(res, res[1:]))
        floors[D] = min(res)
    elapsed = time.perf_counter() - start
    # floors closer than rounding level count as unchanged
    lowered = floors[40] - floors[60] > 1e-12
    verdict(10, decreasing and lowered and elapsed <= 300,
            f"decreasing {decreasing}, floor D=40 {floors[40]:.17g}, D=60 {floors[60]:.17g}, {elapsed:.0f} s")


def test_criterion_11_negative_controls(tmp_path, capsys):
    path = tmp_path / "scaled.json"
    path.write_text(json.dumps({"perturb": {"scale_N": 2.0}}))
    hp_code = cli.main(["check-hp", "--config", str(path)])
    inline = {
        "dim_initial": 1, "dim_noise": 2, "channels": 1,
        "F_list": [[[[1, 0]]]], "G_list": [[[[1, 0]]]],
        "lambda_list": [[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]],
        "mu_list": [[[[0, 0], [1, 0]], [[1, 0], [0, 0]]]],
        "chi": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]],
    }
    path = tmp_path / "kernel.json"
    path.write_text(json.dumps({"model": {"inline": inline}, "perturb": {"skip_validation": True}}))
    out = tmp_path / "kernel"
    conv_code = cli.main(["converge", "--config", str(path), "--out", str(out)])
    capsys.readouterr()
    report = json.loads((out / "report.json").read_text())["convergence"]
    flagged = not report["passed"] and all(d["status"] == "diverging" for d in report["drives"])
    verdict(11, hp_code != 0 and conv_code == 1 and flagged,
            f"check-hp exit {hp_code}, converge exit {conv_code}, flagged {flagged}")


def test_criterion_12_determinism(tmp_path, capsys):
    codes = [cli.main(["example", "spin_chain", "--seed", "5", "--out", str(tmp_path / run)]) for run in "ab"]
    capsys.readouterr()
    same = (tmp_path / "a" / "cells.csv").read_bytes() == (tmp_path / "b" / "cells.csv").read_bytes()
    verdict(12, same and codes == [0, 0], f"byte-identical {same}, exits {codes}")
