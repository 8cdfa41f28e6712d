"""Command-line driver: ``repeated-qsde <subcommand> [--config PATH] [--out DIR] [--seed N]``.

Subcommands
-----------
coeffs         write the limit coefficients to ``coeffs.json``
check-hp       print HP residuals; exit 1 when an identity fails
converge       write ``report.json`` and ``cells.csv`` for the convergence sweep
cocycle-check  compare brute-force chain elements with compressed powers
example NAME   run every check for a built-in example

The configuration is a JSON document.  Complex numbers are ``[re, im]``
pairs and matrices are nested lists of such pairs.  Unknown keys are
rejected.  Diagnostics go to stderr as one JSON object; stdout carries only
the requested artifact.
"""
import argparse
import copy
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .coefficients import hp_check, limit_coefficients
from .convergence import (
    NoiseFloorError,
    WITNESSES,
    _decreasing,
    power_error_ok,
    classify,
    fit_rate,
    chain_vs_semigroup,
    convergence_report,
    dyadic_grid,
)
from .discrete import DirectInteraction
from .errors import CapacityError, QSDEError, ValidationError
from .examples import BUILTIN, build_example
from .linalg import hermiticity_residual, fro_norm
from .model import ModelSpec, validate

CSV_HEADER = ("k", "alpha", "beta", "t", "residual", "error", "rate")

# Per-example defaults; every value is echoed back in the canonical config.
EXAMPLE_DEFAULTS = {
    "spin_chain": {"k_grid": list(range(6, 15)), "u_span": None, "cocycle_k": [0, 1, 2, 3, 4],
                   "rate_window": [-0.7, -0.3]},
    "holevo_truncated": {"k_grid": list(range(6, 15)), "u_span": None, "cocycle_k": [0, 1, 2],
                         "rate_window": [-10.0, -0.3]},
    "pure_hamiltonian": {"k_grid": list(range(6, 15)), "u_span": None, "cocycle_k": [0, 1, 2, 3, 4],
                         "rate_window": [-1.2, -0.8]},
    "linear_system": {"k_grid": list(range(6, 13)), "u_span": 6, "cocycle_k": [0, 1],
                      "rate_window": [-10.0, -0.3]},
    "finite_dim_approx": {"k_grid": list(range(6, 15)), "u_span": 3, "cocycle_k": [0, 1, 2, 3],
                          "rate_window": [-10.0, -0.3]},
    "inline": {"k_grid": list(range(6, 15)), "u_span": None, "cocycle_k": [0, 1, 2],
               "rate_window": [-0.7, -0.3]},
}

HERMITIAN_PARAMS = {
    "spin_chain": ("F", "G1", "G2", "H", "HK"),
    "holevo_truncated": ("F", "H"),
    "pure_hamiltonian": ("H", "HK"),
    "finite_dim_approx": ("H",),
    "linear_system": (),
}
MATRIX_PARAMS = {
    "spin_chain": ("F", "G1", "G2", "H", "HK"),
    "holevo_truncated": ("F", "G", "H"),
    "pure_hamiltonian": ("H", "HK"),
    "finite_dim_approx": ("H", "M"),
    "linear_system": (),
}
COMPLEX_PARAMS = {"linear_system": ("m", "mp")}
INLINE_MATRIX_LISTS = ("F_list", "G_list", "H_list", "lambda_list", "mu_list", "nu_list")


def _plain(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return encode_complex(obj)
    if isinstance(obj, np.ndarray):
        return encode_array(obj) if np.iscomplexobj(obj) else obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _dumps(obj, sort_keys=True, indent=2):
    return json.dumps(obj, sort_keys=sort_keys, indent=indent, default=_plain)


def encode_complex(z):
    z = complex(z)
    return [z.real, z.imag]


def encode_array(a):
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim == 0:
        return encode_complex(a)
    return [encode_array(x) for x in a]


def _is_pair(x):
    return (isinstance(x, list) and len(x) == 2
            and all(isinstance(y, (int, float)) and not isinstance(y, bool) for y in x))


def decode_complex(value, key):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if _is_pair(value):
        return complex(value[0], value[1])
    raise ValidationError(f"{key}: expected a complex number as [re, im], got {value!r}", key=key)


def decode_array(value, key, ndim):
    def walk(x, depth, path):
        if depth == 0:
            return decode_complex(x, path)
        if not isinstance(x, list) or not x:
            raise ValidationError(f"{path}: expected a non-empty list", key=path)
        return [walk(y, depth - 1, f"{path}[{i}]") for i, y in enumerate(x)]

    rows = walk(value, ndim, key)
    try:
        return np.array(rows, dtype=np.complex128)
    except ValueError:
        raise ValidationError(f"{key}: ragged array", key=key)


def _reject_unknown(obj, allowed, path):
    if not isinstance(obj, dict):
        raise ValidationError(f"{path or 'config'}: expected an object", key=path)
    for k in obj:
        if k not in allowed:
            where = f"{path}.{k}" if path else k
            raise ValidationError(f"unknown key {where!r}", key=where)


@dataclass
class RunConfig:
    """Validated run configuration with every default filled in."""

    model: dict
    k_grid: list
    alphas: list
    betas: list
    u_span: object
    t_level: object
    horizon: int
    cocycle: dict
    tolerances: dict
    checks: dict
    perturb: dict
    seed: int
    out_dir: str

    def canonical(self):
        """Canonical JSON text; ``parse_config(cfg.canonical()) == cfg``."""
        return _dumps(asdict(self)) + "\n"

    @property
    def example_name(self):
        return self.model.get("example", "inline")

    def build(self):
        """Return ``(source, expected_or_None, name)``."""
        if "example" in self.model:
            name = self.model["example"]
            params = _decode_params(name, self.model.get("params", {}), "model.params")
            bundle = build_example(name, params)
            return bundle.model, bundle.expected, name
        return _decode_inline(self.model["inline"]), None, self.model["inline"].get("name", "inline")

    def witness_list(self, key, cocycle=False):
        """Decoded drive witnesses from the sweep or the cocycle section."""
        values = self.cocycle[key] if cocycle else getattr(self, key)
        return [decode_complex(z, key) for z in values]


TOP_KEYS = {"model", "k_grid", "alphas", "betas", "u_span", "t_level", "horizon", "cocycle",
            "tolerances", "checks", "perturb", "seed", "out_dir"}


def _decode_params(name, params, path):
    out = {}
    for key, value in params.items():
        kp = f"{path}.{key}"
        if key in MATRIX_PARAMS.get(name, ()):
            out[key] = decode_array(value, kp, 2)
            if key in HERMITIAN_PARAMS.get(name, ()):
                res = hermiticity_residual(out[key])
                if res > 1e-12 * max(1.0, fro_norm(out[key])):
                    raise ValidationError(f"{kp} is not Hermitian (residual {res:.3e})", residual=res, key=kp)
        elif key in COMPLEX_PARAMS.get(name, ()):
            out[key] = decode_complex(value, kp)
        elif key == "ks":
            out[key] = [float(x) for x in value]
        else:
            out[key] = value
    return out


def _decode_inline(spec):
    path = "model.inline"
    _reject_unknown(spec, {"dim_initial", "dim_noise", "channels", "chi", "name", *INLINE_MATRIX_LISTS}, path)
    kwargs = {}
    for key in INLINE_MATRIX_LISTS:
        kwargs[key] = tuple(decode_array(m, f"{path}.{key}[{i}]", 2) for i, m in enumerate(spec.get(key, [])))
    kwargs["chi"] = tuple(decode_array(v, f"{path}.chi[{i}]", 1) for i, v in enumerate(spec.get("chi", [])))
    try:
        return ModelSpec(
            dim_initial=int(spec["dim_initial"]), dim_noise=int(spec["dim_noise"]),
            channels=int(spec["channels"]), name=spec.get("name", "inline"), **kwargs,
        )
    except KeyError as exc:
        raise ValidationError(f"{path}: missing key {exc.args[0]!r}", key=f"{path}.{exc.args[0]}")
    except ValidationError as exc:
        key = f"{path}.{exc.key}" if exc.key else path
        raise ValidationError(f"{key}: {exc}", residual=exc.residual, key=key)


_PARAM_KEYS = {
    "spin_chain": {"F", "G1", "G2", "H", "HK"},
    "holevo_truncated": {"F", "G", "H", "fock_cut"},
    "pure_hamiltonian": {"H", "HK"},
    "finite_dim_approx": {"H", "M"},
    "linear_system": {"m", "mp", "ks", "osc_cut"},
}


def parse_config(text):
    """Parse and validate a JSON configuration document."""
    try:
        raw = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}")
    _reject_unknown(raw, TOP_KEYS, "")
    model = raw.get("model", {"example": "spin_chain"})
    if "example" in model:
        _reject_unknown(model, {"example", "params"}, "model")
        name = model["example"]
        if name not in BUILTIN:
            raise ValidationError(f"model.example: unknown example {name!r}", key="model.example")
        _reject_unknown(model.get("params", {}), _PARAM_KEYS[name], "model.params")
        model = {"example": name, "params": copy.deepcopy(model.get("params", {}))}
        _decode_params(name, model["params"], "model.params")
        defaults = EXAMPLE_DEFAULTS[name]
    elif "inline" in model:
        _reject_unknown(model, {"inline"}, "model")
        model = {"inline": copy.deepcopy(model["inline"])}
        _decode_inline(model["inline"])
        defaults = EXAMPLE_DEFAULTS["inline"]
    else:
        raise ValidationError("model: needs either 'example' or 'inline'", key="model")

    k_grid = [int(k) for k in raw.get("k_grid", defaults["k_grid"])]
    if not k_grid or any(b <= a for a, b in zip(k_grid, k_grid[1:])) or k_grid[0] < 0:
        raise ValidationError("k_grid must be non-empty, non-negative and strictly increasing", key="k_grid")
    witnesses = [encode_complex(z) for z in WITNESSES]
    alphas = [encode_complex(decode_complex(z, f"alphas[{i}]")) for i, z in enumerate(raw.get("alphas", witnesses))]
    betas = [encode_complex(decode_complex(z, f"betas[{i}]")) for i, z in enumerate(raw.get("betas", witnesses))]

    cocycle = raw.get("cocycle", {})
    _reject_unknown(cocycle, {"k_values", "alphas", "betas"}, "cocycle")
    small = [encode_complex(z) for z in (0, 1, 1j)]
    cocycle = {
        "k_values": [int(k) for k in cocycle.get("k_values", defaults["cocycle_k"])],
        "alphas": [encode_complex(decode_complex(z, "cocycle.alphas")) for z in cocycle.get("alphas", small)],
        "betas": [encode_complex(decode_complex(z, "cocycle.betas")) for z in cocycle.get("betas", small)],
    }
    tol = raw.get("tolerances", {})
    _reject_unknown(tol, {"hp", "cocycle", "rate_window", "power_decrease"}, "tolerances")
    tolerances = {
        "hp": float(tol.get("hp", 1e-10)),
        "cocycle": float(tol.get("cocycle", 1e-10)),
        "rate_window": [float(x) for x in tol.get("rate_window", defaults["rate_window"])],
        "power_decrease": float(tol.get("power_decrease", 4.0)),
    }
    checks = raw.get("checks", {})
    _reject_unknown(checks, {"hp", "cocycle", "convergence"}, "checks")
    checks = {k: bool(checks.get(k, True)) for k in ("hp", "cocycle", "convergence")}
    perturb = raw.get("perturb", {})
    _reject_unknown(perturb, {"scale_N", "skip_validation"}, "perturb")
    perturb = {"scale_N": float(perturb.get("scale_N", 1.0)),
               "skip_validation": bool(perturb.get("skip_validation", False))}
    u_span = raw.get("u_span", defaults["u_span"])
    t_level = raw.get("t_level", None)
    return RunConfig(
        model=model,
        k_grid=k_grid,
        alphas=alphas,
        betas=betas,
        u_span=None if u_span is None else int(u_span),
        t_level=None if t_level is None else int(t_level),
        horizon=int(raw.get("horizon", 1)),
        cocycle=cocycle,
        tolerances=tolerances,
        checks=checks,
        perturb=perturb,
        seed=int(raw.get("seed", 0)),
        out_dir=str(raw.get("out_dir", "out")),
    )


def initial_vectors(dim, span, seed):
    """Canonical basis vectors of the first ``span`` levels plus one seeded random unit vector."""
    span = dim if span is None else min(int(span), dim)
    vecs = [np.eye(dim, dtype=np.complex128)[i] for i in range(span)]
    rng = np.random.default_rng(seed)
    r = np.zeros(dim, dtype=np.complex128)
    r[:span] = rng.normal(size=span) + 1j * rng.normal(size=span)
    vecs.append(r / np.linalg.norm(r))
    return vecs


def _coefficients(cfg, source, expected):
    if isinstance(source, ModelSpec):
        coeffs = limit_coefficients(source, check=not cfg.perturb["skip_validation"])
    else:
        coeffs = expected
    if cfg.perturb["scale_N"] != 1.0:
        coeffs = coeffs.replace(N=cfg.perturb["scale_N"] * coeffs.N)
    return coeffs


def coeffs_json(coeffs):
    return {label: encode_array(block) for label, block in coeffs.blocks()}


def _fmt(x):
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def cells_csv(report):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for cell in report.cells:
        writer.writerow([_fmt(cell[h]) for h in CSV_HEADER])
    return buf.getvalue()


def run_hp(cfg, source, expected):
    coeffs = _coefficients(cfg, source, expected)
    checked = hp_check(coeffs, cfg.tolerances["hp"])
    return checked


def run_cocycle(cfg, source):
    tol = cfg.tolerances["cocycle"]
    rng = np.random.default_rng(cfg.seed)
    d = source.dim_initial
    u = rng.normal(size=d) + 1j * rng.normal(size=d)
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    rows = []
    for k in cfg.cocycle["k_values"]:
        grid = dyadic_grid(k, cfg.horizon)
        for ia, a in enumerate(cfg.witness_list("alphas", cocycle=True)):
            for ib, b in enumerate(cfg.witness_list("betas", cocycle=True)):
                defects = chain_vs_semigroup(
                    source, None, np.full(source.channels, a), np.full(source.channels, b),
                    u, v, k, grid, horizon=cfg.horizon,
                )
                rows.append({"k": k, "alpha": ia, "beta": ib, "max_defect": max(defects)})
    worst = max((r["max_defect"] for r in rows), default=0.0)
    return {"tol": tol, "max_defect": worst, "passed": worst <= tol, "cells": rows}


def run_converge(cfg, source, expected):
    coeffs = _coefficients(cfg, source, expected)
    us = initial_vectors(source.dim_initial, cfg.u_span, cfg.seed)
    reports = [
        convergence_report(
            source, coeffs, u, cfg.k_grid, cfg.witness_list("alphas"), cfg.witness_list("betas"),
            t_level=cfg.t_level, horizon=cfg.horizon, seed=cfg.seed, model_id=cfg.example_name,
            rate_window=tuple(cfg.tolerances["rate_window"]),
        )
        for u in us
    ]
    return _merge_reports(reports, cfg.tolerances["power_decrease"], cfg.tolerances["rate_window"])


def _merge_reports(reports, power_decrease, rate_window):
    """Worst case over the initial-vector test set, cell by cell."""
    base = reports[0]
    for i, cell in enumerate(base.cells):
        for other in reports[1:]:
            cell["residual"] = max(cell["residual"], other.cells[i]["residual"])
            cell["error"] = max(cell["error"], other.cells[i]["error"])
    for j, drive in enumerate(base.drives):
        residuals = [max(r.drives[j]["residuals"][i] for r in reports) for i in range(len(base.k_grid))]
        sup = [max(r.drives[j]["sup_power_error"][i] for r in reports) for i in range(len(base.k_grid))]
        try:
            rate = fit_rate(base.k_grid, residuals)
        except NoiseFloorError:
            rate = None
        drive["residuals"], drive["sup_power_error"], drive["fitted_rate"] = residuals, sup, rate
        drive["status"] = classify(residuals, rate)
        drive["pass"]["residual_decreasing"] = _decreasing(residuals)
        drive["pass"]["rate_in_window"] = rate is not None and rate_window[0] <= rate <= rate_window[1]
        drive["pass"]["power_error_decreasing"] = power_error_ok(sup, power_decrease)
    for cell in base.cells:
        d = next(x for x in base.drives if x["alpha_index"] == cell["alpha"] and x["beta_index"] == cell["beta"])
        cell["rate"] = d["fitted_rate"] if d["fitted_rate"] is not None else float("nan")
    return base


def _emit_error(exc, code):
    payload = {"error": type(exc).__name__, "message": str(exc)}
    for attr in ("key", "residual", "requested", "limit"):
        val = getattr(exc, attr, None)
        if val is not None:
            payload[attr] = val if not isinstance(val, complex) else encode_complex(val)
    sys.stderr.write(_dumps(payload, indent=None) + "\n")
    return code


def _write(out_dir, name, text):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def run(command, cfg, example=None):
    """Execute ``command``; returns the process exit status."""
    if example is not None:
        cfg.model = {"example": example, "params": cfg.model.get("params", {}) if cfg.model.get("example") == example else {}}
    source, expected, name = cfg.build()
    out = cfg.out_dir
    if command == "coeffs":
        coeffs = _coefficients(cfg, source, expected)
        text = _dumps({"model": name, "coefficients": coeffs_json(coeffs)}, sort_keys=True, indent=2) + "\n"
        _write(out, "coeffs.json", text)
        sys.stdout.write(text)
        return 0
    if command == "check-hp":
        checked = run_hp(cfg, source, expected)
        sys.stdout.write(_dumps({"model": name, "hp": checked.as_dict()}, sort_keys=True, indent=2) + "\n")
        return 0 if checked.passed else 1
    if command == "cocycle-check":
        result = run_cocycle(cfg, source)
        text = _dumps({"model": name, "seed": cfg.seed, "cocycle": result}, sort_keys=True, indent=2) + "\n"
        _write(out, "report.json", text)
        sys.stdout.write(text)
        return 0 if result["passed"] else 1
    if command == "converge":
        report = run_converge(cfg, source, expected)
        _write(out, "report.json", _dumps(_converge_payload(cfg, name, source, report), sort_keys=True, indent=2) + "\n")
        _write(out, "cells.csv", cells_csv(report))
        sys.stdout.write(cells_csv(report))
        return 0 if report.passed else 1
    if command == "example":
        payload = {"model": name, "seed": cfg.seed, "config": json.loads(cfg.canonical())}
        ok = True
        coeffs = _coefficients(cfg, source, expected)
        _write(out, "coeffs.json", _dumps({"model": name, "coefficients": coeffs_json(coeffs)}, sort_keys=True, indent=2) + "\n")
        if isinstance(source, ModelSpec):
            payload["validation"] = validate(source).as_dict()
        if expected is not None and isinstance(source, ModelSpec) and not cfg.perturb["skip_validation"]:
            payload["closed_form_distance"] = coeffs.distance(expected)
        if cfg.checks["hp"]:
            checked = hp_check(coeffs, cfg.tolerances["hp"])
            payload["hp"] = checked.as_dict()
            ok &= checked.passed
        if cfg.checks["cocycle"]:
            payload["cocycle"] = run_cocycle(cfg, source)
            ok &= payload["cocycle"]["passed"]
        if cfg.checks["convergence"]:
            report = run_converge(cfg, source, expected)
            payload["convergence"] = _converge_payload(cfg, name, source, report)["convergence"]
            ok &= report.passed
            _write(out, "cells.csv", cells_csv(report))
        payload["passed"] = bool(ok)
        text = _dumps(payload, sort_keys=True, indent=2) + "\n"
        _write(out, "report.json", text)
        sys.stdout.write(text)
        return 0 if ok else 1
    raise ValidationError(f"unknown command {command!r}")


def _converge_payload(cfg, name, source, report):
    return {"model": name, "seed": cfg.seed, "convergence": report.as_dict()}


def main(argv=None):
    parser = argparse.ArgumentParser(prog="repeated-qsde", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=["coeffs", "check-hp", "converge", "cocycle-check", "example"])
    parser.add_argument("name", nargs="?", help="example name (for the 'example' command)")
    parser.add_argument("--config", type=Path, help="JSON configuration file")
    parser.add_argument("--out", help="output directory (overrides out_dir)")
    parser.add_argument("--seed", type=int, help="random seed (overrides seed)")
    parser.add_argument("--echo-config", action="store_true", help="print the canonical config and exit")
    args = parser.parse_args(argv)
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
        cfg = parse_config(text)
        if args.command == "example":
            if not args.name:
                raise ValidationError("the 'example' command needs an example name", key="name")
            if args.name not in BUILTIN:
                raise ValidationError(f"unknown example {args.name!r}; choose from {sorted(BUILTIN)}", key="name")
            if cfg.model.get("example") != args.name:
                # re-parse so per-example defaults apply
                raw = json.loads(text) if text.strip() else {}
                raw["model"] = {"example": args.name}
                cfg = parse_config(_dumps(raw))
        if args.out is not None:
            cfg.out_dir = args.out
        if args.seed is not None:
            cfg.seed = args.seed
        if args.echo_config:
            sys.stdout.write(cfg.canonical())
            return 0
        return run(args.command, cfg)
    except CapacityError as exc:
        return _emit_error(exc, 2)
    except (QSDEError, OSError) as exc:
        return _emit_error(exc, 2)


if __name__ == "__main__":
    sys.exit(main())
