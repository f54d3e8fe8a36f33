"""Scenario-driven command line: parse a declarative JSON config, run the
requested density scan, and emit a long-format CSV plus a metadata sidecar.

    rqdet run <config.json> [--check] [--out DIR] [--threads N]
                            [--strict-warnings]

Exit codes: 0 success, 2 config validation error, 3 numerical warnings in
--strict-warnings mode or failed --check items.
"""

import argparse
import concurrent.futures
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import active_backend
from .coincidence import TwoParticleState, joint_toa_density, psi2_from_csv
from .detector import (
    DetectorConfig,
    Diffusion,
    Embedding,
    FromAbsorption,
    GaussianEnergy,
    GaussianSimple,
    RqdetWarning,
    degradation_from_csv,
    eta_tilde_many,
    eval_eta,
)
from .photon import CollimatedCoherentProfile, glauber_curve, photo_p1_curve, photo_p2_curve, photo_background
from .scalar import (
    OneParticleState,
    ReducedDensityMatrix,
    moving_toa_curve,
    normalize_curve,
    quadratic_toa_curve,
    state_from_csv,
    toa_curve,
)
from .spin import (
    SpinPOVMKernel,
    SpinorReducedDensityMatrix,
    spin_outcome_probability,
    spin_toa_curve,
)
from .grids import build_grid

KINDS = (
    "toa",
    "toa-moving",
    "toa-quadratic",
    "photo",
    "glauber",
    "spin",
    "coincidence",
    "degradation",
)

_RANGE = {
    "type": "object",
    "required": ["min", "max", "n"],
    "properties": {
        "min": {"type": "number"},
        "max": {"type": "number"},
        "n": {"type": "integer", "minimum": 2},
    },
    "additionalProperties": False,
}

_DETECTOR = {
    "type": "object",
    "required": ["sigma", "delta", "degradation"],
    "properties": {
        "embedding": {"type": "object"},
        "sigma": {"type": "number", "exclusiveMinimum": 0},
        "delta": {"type": "number", "exclusiveMinimum": 0},
        "degradation": {
            "type": "object",
            "required": ["variant"],
            "properties": {"variant": {"type": "string"}},
        },
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["kind", "output"],
    "properties": {
        "kind": {"enum": list(KINDS)},
        "output": {
            "type": "object",
            "required": ["path"],
            "properties": {
                "path": {"type": "string"},
                "normalize": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "grid": {
            "type": "object",
            "required": ["k_min", "k_max", "n"],
            "properties": {
                "k_min": {"type": "number"},
                "k_max": {"type": "number"},
                "n": {"type": "integer", "minimum": 2},
                "scheme": {"enum": ["trapezoid", "gauss-legendre"]},
                "mass": {"type": "number", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "detector": _DETECTOR,
        "detector2": _DETECTOR,
        "state": {"type": "object"},
        "profile": {"type": "object"},
        "spinor_state": {"type": "object"},
        "two_particle_state": {"type": "object"},
        "kernel": {"type": "object"},
        "scan": {"type": "object"},
        "epsilon": {"type": "number", "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}


class ConfigError(Exception):
    def __init__(self, messages):
        self.messages = messages if isinstance(messages, list) else [messages]
        super().__init__("; ".join(self.messages))


# ---------------------------------------------------------------------------
# config -> objects

def _validate_schema(cfg):
    import jsonschema

    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: e.json_path)
    if errors:
        raise ConfigError([f"{e.json_path}: {e.message}" for e in errors])


def _need(cfg, key, kind):
    if key not in cfg:
        raise ConfigError(f"$.{key}: required for kind {kind!r}")
    return cfg[key]


def _build_embedding(spec, base):
    kind = spec.get("kind", "static")
    if kind == "static":
        return Embedding.static()
    if kind == "inertial":
        return Embedding.inertial(spec.get("velocity", [0.0, 0.0, 0.0]))
    if kind == "uniform-acceleration":
        return Embedding.uniformly_accelerated(spec["acceleration"])
    if kind == "tabulated":
        path = _resolve(spec["path"], base)
        data = np.genfromtxt(path, delimiter=",")
        return Embedding.tabulated(data[:, 0], data[:, 1:5])
    raise ConfigError(f"$.detector.embedding.kind: unknown kind {kind!r}")


def _build_degradation(spec, base):
    variant = spec["variant"]
    try:
        if variant == "gaussian-simple":
            return GaussianSimple(spec["tau_d"])
        if variant == "gaussian-energy":
            return GaussianEnergy(spec["energy"], spec["heat_capacity"],
                                  spec["temperature"])
        if variant == "diffusion":
            return Diffusion(spec["diffusion_coefficient"], spec["record_size"])
        if variant == "tabulated":
            return degradation_from_csv(_resolve(spec["path"], base))
        if variant == "from-absorption":
            alpha = _alpha_fn(spec)
            return FromAbsorption(alpha, spec.get("mass", 0.0), spec["omega_max"])
    except KeyError as exc:
        raise ConfigError(
            f"$.detector.degradation: missing field {exc} for variant {variant!r}"
        ) from None
    raise ConfigError(f"$.detector.degradation.variant: unknown variant {variant!r}")


def _alpha_fn(spec):
    model = spec.get("alpha", "constant")
    coeff = spec.get("coefficient", 1.0)
    if model == "constant":
        return lambda om: coeff * np.ones_like(np.asarray(om, dtype=float))
    if model == "power":
        expo = spec.get("exponent", 0.0)
        return lambda om: coeff * np.asarray(om, dtype=float) ** expo
    raise ConfigError(f"$.detector.degradation.alpha: unknown model {model!r}")


def _build_detector(spec, base, label="detector"):
    try:
        emb = _build_embedding(spec.get("embedding", {"kind": "static"}), base)
        deg = _build_degradation(spec["degradation"], base)
        return DetectorConfig(emb, spec["sigma"], spec["delta"], deg)
    except (ValueError, OSError) as exc:
        raise ConfigError(f"$.{label}: {exc}") from None


def _build_grid(cfg, state_spec=None, mass_default=1.0):
    if "grid" in cfg:
        g = cfg["grid"]
        return build_grid(g["k_min"], g["k_max"], g["n"],
                          g.get("scheme", "gauss-legendre"),
                          g.get("mass", mass_default))
    if state_spec and state_spec.get("type") == "gaussian":
        k0 = state_spec["k0"]
        spread = state_spec["spread"]
        return build_grid(max(k0 - 6 * spread, 1e-6 * k0), k0 + 6 * spread, 256,
                          "gauss-legendre", mass_default)
    raise ConfigError("$.grid: required unless the state is a gaussian spec")


def _build_state(cfg, base):
    spec = _need(cfg, "state", cfg["kind"])
    mass = cfg.get("grid", {}).get("mass", spec.get("mass", 1.0))
    if spec.get("type") == "gaussian":
        grid = _build_grid(cfg, spec, mass)
        return OneParticleState.gaussian(grid, spec["k0"], spec["spread"],
                                         spec.get("x0", 0.0))
    if spec.get("type") == "csv":
        return state_from_csv(_resolve(spec["path"], base), mass)
    raise ConfigError("$.state.type: must be 'gaussian' or 'csv'")


def _resolve(path, base):
    p = Path(path)
    return p if p.is_absolute() else base / p


def _tau_grid(spec):
    return np.linspace(spec["min"], spec["max"], spec["n"])


def _parse_complex_matrix(rows):
    def num(x):
        if isinstance(x, (int, float)):
            return complex(x)
        if isinstance(x, list) and len(x) == 2:
            return complex(x[0], x[1])
        raise ConfigError("$.kernel.matrix: entries must be numbers or [re, im]")

    return np.array([[num(x) for x in row] for row in rows])


# ---------------------------------------------------------------------------
# scenario runners: return (columns, rows, extra_metadata)

def _run_toa(cfg, base, threads):
    kind = cfg["kind"]
    det = _build_detector(_need(cfg, "detector", kind), base)
    state = _build_state(cfg, base)
    scan = _need(cfg, "scan", kind)
    taus = _tau_grid(scan["tau"])
    qs = scan.get("q", [0.0])
    normalize = cfg.get("output", {}).get("normalize", False)

    def one(q):
        if kind == "toa":
            rho = ReducedDensityMatrix.from_pure(state)
            curve = toa_curve(rho, det, taus, q)
        elif kind == "toa-moving":
            rho = ReducedDensityMatrix.from_pure(state)
            curve = moving_toa_curve(rho, det, taus, (q, 0.0, 0.0))
        else:
            curve = quadratic_toa_curve(state, det, taus, q,
                                        cfg.get("epsilon"))
        return normalize_curve(curve) if normalize else curve

    curves = _pool_map(one, qs, threads)
    rows = []
    for q, curve in zip(qs, curves):
        for t, v in zip(curve.tau, curve.values):
            rows.append((t, q, v))
    extra = {"grid": {"n": state.grid.size, "k_min": state.grid.k_min,
                      "k_max": state.grid.k_max, "mass": state.grid.mass},
             "normalized": bool(normalize)}
    err = _doubling_error(cfg, base, state, det, taus, qs, kind, normalize)
    if err is not None:
        extra["error_estimate"] = err
    return ["tau", "Q", "P"], rows, extra


def _doubling_error(cfg, base, state, det, taus, qs, kind, normalize):
    spec = cfg.get("state", {})
    if spec.get("type") != "gaussian":
        return None
    fine = build_grid(state.grid.k_min, state.grid.k_max,
                      2 * state.grid.size, state.grid.scheme, state.grid.mass)
    state2 = OneParticleState.gaussian(fine, spec["k0"], spec["spread"],
                                       spec.get("x0", 0.0))
    sub = taus[:: max(1, len(taus) // 16)]
    q = qs[0]
    if kind == "toa":
        c1 = toa_curve(ReducedDensityMatrix.from_pure(state), det, sub, q)
        c2 = toa_curve(ReducedDensityMatrix.from_pure(state2), det, sub, q)
    elif kind == "toa-moving":
        c1 = moving_toa_curve(ReducedDensityMatrix.from_pure(state), det, sub,
                              (q, 0.0, 0.0))
        c2 = moving_toa_curve(ReducedDensityMatrix.from_pure(state2), det, sub,
                              (q, 0.0, 0.0))
    else:
        c1 = quadratic_toa_curve(state, det, sub, q, cfg.get("epsilon"))
        c2 = quadratic_toa_curve(state2, det, sub, q, cfg.get("epsilon"))
    v1, v2 = c1.values, c2.values
    if normalize:
        v1 = v1 / np.trapezoid(v1, sub) if np.trapezoid(v1, sub) > 0 else v1
        v2 = v2 / np.trapezoid(v2, sub) if np.trapezoid(v2, sub) > 0 else v2
    scale = max(float(np.max(np.abs(v1))), 1e-300)
    return {
        "method": "grid-doubling",
        "subsampled_tau_points": int(len(sub)),
        "max_abs_change": float(np.max(np.abs(v1 - v2))),
        "rel_change_at_scale": float(np.max(np.abs(v1 - v2)) / scale),
    }


def _build_profile(cfg, base):
    spec = _need(cfg, "profile", cfg["kind"])
    if spec.get("type") == "gaussian":
        k0 = spec["k0"]
        delta = spec["delta"]
        if "grid" in cfg:
            g = cfg["grid"]
            grid = build_grid(g["k_min"], g["k_max"], g["n"],
                              g.get("scheme", "gauss-legendre"), 0.0)
        else:
            grid = build_grid(max(k0 - 6 * delta, 1e-9), k0 + 6 * delta, 256,
                              "gauss-legendre", 0.0)
        zeta0 = spec.get("zeta0", 1.0)
        if isinstance(zeta0, list):
            zeta0 = complex(zeta0[0], zeta0[1])
        return CollimatedCoherentProfile.gaussian(grid, zeta0, k0, delta)
    if spec.get("type") == "csv":
        psi = state_from_csv(_resolve(spec["path"], base), 0.0)
        return CollimatedCoherentProfile(psi.grid, psi.psi)
    raise ConfigError("$.profile.type: must be 'gaussian' or 'csv'")


def _run_photo(cfg, base, threads):
    det = _build_detector(_need(cfg, "detector", "photo"), base)
    z = _build_profile(cfg, base)
    scan = _need(cfg, "scan", "photo")
    taus = _tau_grid(scan["tau"])
    qs = scan.get("q", [0.0])
    p0 = photo_background(det)

    def one(q):
        p1 = photo_p1_curve(z, det, taus, q).values
        p2 = photo_p2_curve(z, det, taus, q).values
        return p1, p2

    results = _pool_map(one, qs, threads)
    rows = []
    for q, (p1, p2) in zip(qs, results):
        for t, a, b in zip(taus, p1, p2):
            rows.append((t, q, p0, a, b))
    extra = {"grid": {"n": z.grid.size, "k_min": z.grid.k_min,
                      "k_max": z.grid.k_max, "mass": 0.0}}
    return ["tau", "Q", "P0", "P1", "P2"], rows, extra


def _run_glauber(cfg, base, threads):
    z = _build_profile(cfg, base)
    scan = _need(cfg, "scan", "glauber")
    taus = _tau_grid(scan["tau"])
    qs = scan.get("q", [0.0])
    curves = _pool_map(lambda q: glauber_curve(z, taus, q).values, qs, threads)
    rows = []
    for q, vals in zip(qs, curves):
        for t, v in zip(taus, vals):
            rows.append((t, q, v))
    extra = {"grid": {"n": z.grid.size, "k_min": z.grid.k_min,
                      "k_max": z.grid.k_max, "mass": 0.0}}
    return ["tau", "Q", "P"], rows, extra


def _build_spin_kernel(cfg, base):
    spec = cfg.get("kernel", {"type": "zero"})
    if spec.get("type") == "zero":
        return SpinPOVMKernel.zero()
    if spec.get("type") == "constant":
        return SpinPOVMKernel.constant(_parse_complex_matrix(spec["matrix"]))
    if spec.get("type") == "tabulated-csv":
        data = np.genfromtxt(_resolve(spec["path"], base), delimiter=",")
        qn = np.unique(data[:, 0])
        kn = np.unique(data[:, 1])
        mats = np.zeros((qn.size, kn.size, 4, 4), dtype=np.complex128)
        for row in data:
            iq = int(np.searchsorted(qn, row[0]))
            ik = int(np.searchsorted(kn, row[1]))
            mats[iq, ik] = (row[2:18] + 1j * row[18:34]).reshape(4, 4)
        return SpinPOVMKernel.tabulated(qn, kn, mats)
    raise ConfigError("$.kernel.type: must be 'zero', 'constant' or 'tabulated-csv'")


def _run_spin(cfg, base, threads):
    det = _build_detector(_need(cfg, "detector", "spin"), base)
    spec = _need(cfg, "spinor_state", "spin")
    mass = cfg.get("grid", {}).get("mass", spec.get("mass", 1.0))
    if mass <= 0:
        raise ConfigError("$.grid.mass: spin scenarios need mass > 0")
    grid = _build_grid(cfg, spec, mass)
    w = spec.get("weights", [[1.0, 0.0], [0.0, 0.0]])
    wvec = np.array([complex(w[0][0], w[0][1]), complex(w[1][0], w[1][1])])
    env = np.exp(-((grid.nodes - spec["k0"]) ** 2) / (4.0 * spec["spread"] ** 2))
    rho = SpinorReducedDensityMatrix.from_pure(grid, np.outer(env, wvec))
    kernel = _build_spin_kernel(cfg, base)
    scan = _need(cfg, "scan", "spin")
    taus = _tau_grid(scan["tau"])
    qs = scan.get("q", [0.0])
    rows = []
    for q in qs:
        for mu in (1, -1):
            vals = spin_toa_curve(rho, kernel, det, taus, q, mu).values
            for t, v in zip(taus, vals):
                rows.append((t, q, mu, v))
    probs = {str(q): spin_outcome_probability(rho, kernel, q) for q in qs}
    extra = {
        "grid": {"n": grid.size, "k_min": grid.k_min, "k_max": grid.k_max,
                 "mass": mass},
        "outcome_probabilities": {
            q: {"+1": p[1], "-1": p[-1]} for q, p in probs.items()
        },
    }
    return ["tau", "Q", "mu", "P"], rows, extra


def _run_coincidence(cfg, base, threads):
    det1 = _build_detector(_need(cfg, "detector", "coincidence"), base)
    det2 = _build_detector(_need(cfg, "detector2", "coincidence"), base,
                           label="detector2")
    spec = _need(cfg, "two_particle_state", "coincidence")
    mass = cfg.get("grid", {}).get("mass", spec.get("mass", 1.0))
    grid = _build_grid(cfg, None, mass) if "grid" in cfg else None
    if spec.get("type") == "product":
        sa = spec["a"]
        sb = spec["b"]
        if grid is None:
            k_lo = min(sa["k0"] - 6 * sa["spread"], sb["k0"] - 6 * sb["spread"])
            k_hi = max(sa["k0"] + 6 * sa["spread"], sb["k0"] + 6 * sb["spread"])
            grid = build_grid(k_lo, k_hi, 96, "gauss-legendre", mass)
        a = OneParticleState.gaussian(grid, sa["k0"], sa["spread"], sa.get("x0", 0.0))
        b = OneParticleState.gaussian(grid, sb["k0"], sb["spread"], sb.get("x0", 0.0))
        state = TwoParticleState.symmetrized_product(a, b)
    elif spec.get("type") == "csv":
        if grid is None:
            raise ConfigError("$.grid: required for a csv two-particle state")
        state = psi2_from_csv(_resolve(spec["path"], base), grid)
    else:
        raise ConfigError("$.two_particle_state.type: must be 'product' or 'csv'")
    scan = _need(cfg, "scan", "coincidence")
    t1 = _tau_grid(scan["tau1"])
    t2 = _tau_grid(scan["tau2"])
    q1 = scan.get("q1", 0.0)
    q2 = scan.get("q2", 0.0)
    n_s = int(scan.get("n_s", 32))

    def one_row(tt1):
        return [joint_toa_density(state, det1, det2, tt1, q1, tt2, q2, n_s)
                for tt2 in t2]

    rows_nested = _pool_map(one_row, t1, threads)
    rows = []
    for tt1, vals in zip(t1, rows_nested):
        for tt2, v in zip(t2, vals):
            rows.append((tt1, tt2, v))
    extra = {"grid": {"n": state.grid.size, "k_min": state.grid.k_min,
                      "k_max": state.grid.k_max, "mass": mass},
             "q1": q1, "q2": q2, "n_s": n_s}
    return ["tau1", "tau2", "P"], rows, extra


def _run_degradation(cfg, base, threads):
    det = _build_detector(_need(cfg, "detector", "degradation"), base)
    scan = _need(cfg, "scan", "degradation")
    s = _tau_grid(scan.get("s", {"min": -10, "max": 10, "n": 401}))
    om = _tau_grid(scan.get("omega", {"min": 0, "max": 10, "n": 201}))
    rows = []
    eta = np.asarray([eval_eta(det.degradation, x) for x in s])
    for x, v in zip(s, eta):
        rows.append(("eta", x, v.real, v.imag))
    tilde = np.asarray(eta_tilde_many(det.degradation, det.sigma, om),
                       dtype=np.complex128)
    for x, v in zip(om, tilde):
        rows.append(("eta_tilde", x, v.real, v.imag))
    return ["quantity", "x", "value_re", "value_im"], rows, {}


RUNNERS = {
    "toa": _run_toa,
    "toa-moving": _run_toa,
    "toa-quadratic": _run_toa,
    "photo": _run_photo,
    "glauber": _run_glauber,
    "spin": _run_spin,
    "coincidence": _run_coincidence,
    "degradation": _run_degradation,
}


def _pool_map(fn, items, threads):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# output

def _fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _write_csv(path, columns, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _write_sidecar(path, cfg, extra, captured):
    meta = {
        "version": __version__,
        "kind": cfg["kind"],
        "backend": active_backend(),
        "units": "natural units (hbar = c = 1); momenta and masses in the "
                 "reference mass scale, times and lengths in its inverse",
        "warnings": captured,
    }
    meta.update(extra)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# entry point

def run_scenario(config_path, out_dir=None, threads=1):
    """Run one scenario config; returns (csv_path, sidecar_path, warnings)."""
    config_path = Path(config_path)
    try:
        cfg = json.loads(config_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"$: cannot parse config: {exc}") from None
    _validate_schema(cfg)
    base = config_path.parent
    runner = RUNNERS[cfg["kind"]]

    captured = []
    with warnings.catch_warnings(record=True) as wlist:
        warnings.simplefilter("always", RqdetWarning)
        columns, rows, extra = runner(cfg, base, threads)
        for w in wlist:
            if issubclass(w.category, RqdetWarning) or issubclass(
                w.category, UserWarning
            ):
                captured.append(f"{w.category.__name__}: {w.message}")

    out_base = Path(out_dir) if out_dir else Path.cwd()
    out_base.mkdir(parents=True, exist_ok=True)
    csv_path = out_base / cfg["output"]["path"]
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(csv_path, columns, rows)
    sidecar = csv_path.with_name(csv_path.name + ".meta.json")
    _write_sidecar(sidecar, cfg, extra, captured)
    for msg in captured:
        print(f"warning: {msg}", file=sys.stderr)
    return csv_path, sidecar, captured


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="rqdet",
        description="Relativistic detector-model density scans",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run a scenario config")
    runp.add_argument("config", nargs="?", help="scenario JSON file")
    runp.add_argument("--check", action="store_true",
                      help="run the bundled analytic-limit check suite")
    runp.add_argument("--out", default=None, help="output directory")
    runp.add_argument("--threads", type=int, default=None)
    runp.add_argument("--strict-warnings", action="store_true")
    args = parser.parse_args(argv)

    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("RQDET_THREADS", "1"))

    if not args.check and not args.config:
        print("error: a config file is required unless --check is given",
              file=sys.stderr)
        return 2

    captured = []
    if args.config:
        try:
            _, _, captured = run_scenario(args.config, args.out, threads)
        except ConfigError as exc:
            for msg in exc.messages:
                print(f"config error: {msg}", file=sys.stderr)
            return 2
        except (ValueError, OSError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2

    if args.check:
        from .checks import run_checks

        report = run_checks()
        out_base = Path(args.out) if args.out else Path.cwd()
        out_base.mkdir(parents=True, exist_ok=True)
        report_path = out_base / "check_report.json"
        with open(report_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        for item in report["checks"]:
            status = "PASS" if item["passed"] else "FAIL"
            print(f"{status} {item['name']}: measured {item['measured']:.3e} "
                  f"(tolerance {item['tolerance']:.3e})")
        if not report["passed"]:
            return 3

    if args.strict_warnings and captured:
        print("error: warnings treated as errors (--strict-warnings)",
              file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
