"""Command-line runner: verify-identities, moduli, simulate, series-probe.

Configuration comes from a JSON file (--config); explicit flags override file
values, which override the defaults. Unknown keys are rejected.
Exit codes: 0 ok, 1 check failed, 2 config error, 3 numerical halt, 4 series divergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_HALT, EXIT_DIVERGE = 0, 1, 2, 3, 4


class ConfigError(ValueError):
    pass


# --- configs -----------------------------------------------------------------------

@dataclass
class VerifyConfig:
    M: int = 4096
    L: float = 3.0
    tol: float = 1e-3
    loose_tol: float = 1e-1
    pairs: int = 3
    lemma_max_n: int = 3
    seed: int = 0


@dataclass
class ModuliConfig:
    modulus: dict = field(default_factory=lambda: {"family": "log_power", "s": 3.5})
    theta: float = 0.4
    n_trig: int = 20
    N: int = 256
    delta: float = 0.25
    seed: int = 0


@dataclass
class SimulateConfig:
    curve: dict = field(default_factory=lambda: {"name": "circle"})
    N: int = 256
    dt: float = 1e-3
    T_final: float = 1.0
    renorm_interval: int = 0
    dealias: bool = False
    snapshot_interval: int = 100
    threshold: float = 1e-3
    s: float = 3.5
    seed: int = 0


@dataclass
class SeriesConfig:
    curve: dict = field(default_factory=lambda: {"name": "circle"})
    N: int = 512
    xi0: float = 0.0
    n_max: int = 8
    target: float = 0.25
    refine: int = 4
    seed: int = 0


CONFIGS = {"verify-identities": VerifyConfig, "moduli": ModuliConfig,
           "simulate": SimulateConfig, "series-probe": SeriesConfig}

FLAG_KEYS = {"seed": "seed", "n": "N", "dt": "dt", "tfinal": "T_final"}


def build_config(command: str, file_cfg: dict, flags: dict):
    cls = CONFIGS[command]
    names = {f.name: f for f in fields(cls)}
    unknown = set(file_cfg) - set(names)
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    merged = dict(file_cfg)
    for flag, key in FLAG_KEYS.items():
        if flags.get(flag) is not None:
            if key not in names:
                if command == "verify-identities" and key == "N":
                    key = "M"
                else:
                    raise ConfigError(f"--{flag} does not apply to {command}")
            merged[key] = flags[flag]
    try:
        cfg = cls(**merged)
    except TypeError as e:
        raise ConfigError(str(e)) from None
    _validate(cfg)
    return cfg


def _validate(cfg):
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if f.name in ("tol", "loose_tol", "dt", "threshold", "target", "delta") and not (
                isinstance(v, (int, float)) and v > 0):
            raise ConfigError(f"{f.name} must be a positive number")
    if isinstance(cfg, (SimulateConfig, SeriesConfig)):
        from .contour import GENERATORS
        c = dict(cfg.curve)
        if c.get("name") not in GENERATORS:
            raise ConfigError(f"unknown curve generator {c.get('name')!r}")
        if not isinstance(cfg.N, int) or cfg.N < 8 or cfg.N & (cfg.N - 1):
            raise ConfigError("N must be a power of two >= 8")
    if isinstance(cfg, SimulateConfig) and cfg.T_final < 0:
        raise ConfigError("T_final must be nonnegative")
    if isinstance(cfg, SimulateConfig) and 0 < cfg.T_final < cfg.dt:
        raise ConfigError("T_final must be 0 or at least dt")
    if isinstance(cfg, ModuliConfig):
        from .moduli import modulus_from_config
        try:
            modulus_from_config(cfg.modulus)
        except (ValueError, TypeError) as e:
            raise ConfigError(str(e)) from None
        if not 0 < cfg.theta < 0.5:
            raise ConfigError("theta must lie in (0, 1/2)")
    if isinstance(cfg, VerifyConfig) and (cfg.M < 16 or cfg.M % 2):
        raise ConfigError("M must be even and >= 16")


def _curve(spec: dict, N: int, seed: int):
    from .contour import make_curve
    spec = dict(spec)
    name = spec.pop("name")
    if name == "logmod_perturbed_circle":
        spec.setdefault("seed", seed)
    try:
        return make_curve(name, N, **spec)
    except TypeError as e:
        raise ConfigError(f"bad curve parameters: {e}") from None


# --- reports -------------------------------------------------------------------------

def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def write_report(out: Path, name: str, cfg, results: dict, passed: bool) -> Path:
    rep = {"command": name, "config": asdict(cfg), "passed": bool(passed), "results": results,
           "metadata": {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S")}}
    d = out / "reports"
    d.mkdir(parents=True, exist_ok=True)
    p = d / f"{name}.json"
    p.write_text(json.dumps(_clean(rep), indent=2, sort_keys=True))
    return p


# --- commands -------------------------------------------------------------------------

def _pairs(cfg: VerifyConfig, M: int):
    from .fields import LineField, bump, bump_prime
    rng = np.random.default_rng(cfg.seed)
    L = cfg.L
    x = -L + 2 * L / M * np.arange(M)
    out = []
    for _ in range(cfg.pairs):
        c1, c2 = rng.uniform(-0.3, 0.3, 2)
        r1, r2 = rng.uniform(0.6, 1.2, 2)
        a1, a2 = rng.uniform(0.3, 1.0, 2)
        k = rng.uniform(0.5, 3.0)
        f = LineField(bump(x, c1, r1, a1), L, deriv=bump_prime(x, c1, r1, a1))
        g = LineField(np.cos(k * x) * bump(x, c2, r2, a2), L)
        out.append((f, g))
    return out


def _verify_at(cfg: VerifyConfig, M: int) -> dict:
    from .hilbert import TContext, cotlar_residual, dv_of_PiQ_check, op_HT_recursion, product_formula_residual
    pairs = _pairs(cfg, M)
    res = {"cotlar": max(cotlar_residual(f, g).residual for f, g in pairs),
           "product_formula": max(product_formula_residual(f, g) for f, g in pairs)}
    f1, f2 = pairs[0][0] * 0.5, pairs[min(1, len(pairs) - 1)][0] * 0.4
    from .fields import LineField
    f1 = LineField(f1.samples, f1.L, deriv=pairs[0][0].deriv * 0.5)
    f2 = LineField(f2.samples, f2.L, deriv=pairs[min(1, len(pairs) - 1)][0].deriv * 0.4)
    ctx = TContext([f1, f2])
    worst = 0.0
    for n1 in range(cfg.lemma_max_n + 1):
        for n2 in range(cfg.lemma_max_n + 1 - n1):
            for j in range(3):
                if j == 0 and n1 + n2 == 0:
                    continue
                worst = max(worst, op_HT_recursion(j, (n1, n2), [f1, f2], ctx=ctx).residual)
    res["lemma_T"] = worst
    rng = np.random.default_rng(cfg.seed + 1)
    a, b = rng.uniform(0.5, 2, 3), rng.uniform(0, 3, 3)
    funcs = [(lambda x, a=a[k], b=b[k]: np.sin(a * x + b), lambda x, a=a[k], b=b[k]: a * np.cos(a * x + b))
             for k in range(3)]
    pts = rng.uniform(-2, 2, (1000, 2))
    pts = pts[np.abs(pts[:, 0] - pts[:, 1]) > 0.05]
    h = 8.0 / M
    res["dv_of_PiQ"] = dv_of_PiQ_check((1, 2, 1), funcs, pts, h)
    return res


def cmd_verify_identities(cfg: VerifyConfig, out: Path) -> int:
    fine = _verify_at(cfg, cfg.M)
    coarse = _verify_at(cfg, cfg.M // 2)
    ids = {}
    ok = True
    for k, v in fine.items():
        slope = float(np.log2(coarse[k] / v)) if v > 0 and coarse[k] > 0 else float("inf")
        tier = "strict" if v < cfg.tol else ("loose" if v < cfg.loose_tol else "fail")
        ids[k] = {"residual": v, "residual_coarse": coarse[k], "refinement_slope": slope,
                  "tier": tier, "passed": tier == "strict"}
        ok &= tier == "strict"
        print(f"{k:16s} residual {v:.3e}  slope {slope:5.2f}  {tier}")
    write_report(out, "verify-identities", cfg, ids, ok)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_moduli(cfg: ModuliConfig, out: Path) -> int:
    from .fields import LineField, PeriodicField, bump
    from .moduli import check_A1, check_A2, check_A3, interpolation_check, modulus_from_config, scaling_check
    m = modulus_from_config(cfg.modulus)
    checks = {"A1": check_A1(m, cfg.theta), "A2": check_A2(m), "A3": check_A3(m)}
    rng = np.random.default_rng(cfg.seed)
    xi = 2 * np.pi * np.arange(cfg.N) / cfg.N
    interp_ok, slack = True, []
    for _ in range(cfg.n_trig):
        deg = int(rng.integers(1, 9))
        f = sum(rng.normal() * np.cos(k * xi) + rng.normal() * np.sin(k * xi) for k in range(1, deg + 1))
        r = interpolation_check(PeriodicField(f), m, cfg.theta)
        interp_ok &= r.passes
        slack.append(r.extra["slack"])
    checks["interpolation"] = {"passes": interp_ok, "min_slack": min(slack)}
    x = -3 + 6 / 1024 * np.arange(1024)
    checks["scaling"] = scaling_check(LineField(bump(x, 0, 1, 1), 3.0), m, cfg.delta)
    results = {k: (v.to_json() if hasattr(v, "to_json") else v) for k, v in checks.items()}
    ok = all(r["passes"] for r in results.values())
    for k, r in results.items():
        print(f"{k:14s} {'pass' if r['passes'] else 'FAIL'}")
    write_report(out, "moduli", cfg, results, ok)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_simulate(cfg: SimulateConfig, out: Path) -> int:
    from . import contour as ct
    from .evolve import StepperConfig, rotation_rate, run
    from .moduli import LogPower
    c0 = _curve(cfg.curve, cfg.N, cfg.seed)
    sc = StepperConfig(dt=cfg.dt, T_final=cfg.T_final, N=cfg.N, renorm_interval=cfg.renorm_interval,
                       dealias=cfg.dealias, threshold=cfg.threshold,
                       snapshot_interval=cfg.snapshot_interval, modulus=LogPower(cfg.s))
    res = run(c0, sc, out, track_angle=True)
    A0 = ct.area(c0)
    drift = abs(ct.area(res.final.gamma) - A0) / abs(A0)
    ac_min = min(r.arc_chord for r in res.records)
    results = {"final_t": res.final.t, "area_drift": drift, "arc_chord_min": ac_min,
               "halted": res.halted, "renorms": res.renorms, "steps": len(res.times) - 1}
    line = f"t={res.final.t:.6g} area_drift={drift:.3e} arc_chord_min={ac_min:.6g}"
    if cfg.curve.get("name") == "ellipse" and len(res.times) > 2:
        rate = rotation_rate(res.times, res.angles)
        results["rotation_rate"] = rate
        a, b = cfg.curve.get("a", 1.5), cfg.curve.get("b", 1.0)
        results["kirchhoff_rate"] = ct.kirchhoff_rate(a, b)
        line += f" rotation_rate={abs(rate):.6f}"
    print(line)
    write_report(out, "simulate", cfg, results, not res.halted)
    return EXIT_HALT if res.halted else EXIT_OK


def cmd_series_probe(cfg: SeriesConfig, out: Path) -> int:
    from .contour import SeriesDivergenceError, select_delta, series_dv
    c = _curve(cfg.curve, cfg.N, cfg.seed)
    try:
        fr = select_delta(c, cfg.xi0, cfg.target, refine=cfg.refine)
        r = series_dv(fr, cfg.n_max)
    except SeriesDivergenceError as e:
        print(f"series divergence: {e}")
        write_report(out, "series-probe", cfg, {"error": str(e)}, False)
        return EXIT_DIVERGE
    tot = r.term_norms["total"]
    ratios = [tot[n + 1] / tot[n] for n in range(1, len(tot) - 1) if tot[n] > 0]
    results = {"delta": fr.delta, "sup_D": r.sup_D, "sup_D_bound": r.sup_D_bound,
               "term_norms": r.term_norms, "observed_ratio": ratios[-1] if ratios else 0.0,
               "ratios": ratios, "residual": r.residual, "tail_bound": r.tail_bound}
    ok = r.residual <= max(1e-3, r.tail_bound)
    print(f"delta={fr.delta:g} sup_D={r.sup_D:.3e} ratio={results['observed_ratio']:.3e} "
          f"residual={r.residual:.3e} tail={r.tail_bound:.3e}")
    write_report(out, "series-probe", cfg, results, ok)
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"verify-identities": cmd_verify_identities, "moduli": cmd_moduli,
            "simulate": cmd_simulate, "series-probe": cmd_series_probe}


# --- entry ---------------------------------------------------------------------------

def _parser():
    p = argparse.ArgumentParser(prog="patchlab", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", type=str)
    p.add_argument("--out", type=str, default=".")
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--tfinal", type=float)
    p.add_argument("--sweep", nargs="+", metavar="CONFIG",
                   help="run several config files in parallel, each under OUT/sweep_NNN")
    return p


def _load(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    return d


def _run_one(command, cfg, out):
    return COMMANDS[command](cfg, Path(out))


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    flags = {k: getattr(args, k) for k in FLAG_KEYS}
    out = Path(args.out)
    try:
        if args.sweep:
            cfgs = [build_config(args.command, _load(p), flags) for p in args.sweep]
        else:
            cfgs = [build_config(args.command, _load(args.config), flags)]
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if not args.sweep:
        return _run_one(args.command, cfgs[0], out)
    workers = max(1, int(os.environ.get("PATCHLAB_THREADS", "1") or 1))
    dirs = [out / f"sweep_{i:03d}" for i in range(len(cfgs))]
    with ProcessPoolExecutor(workers) as ex:
        codes = list(ex.map(_run_one, [args.command] * len(cfgs), cfgs, dirs))
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
