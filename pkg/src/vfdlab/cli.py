"""Experiment orchestration: presets, TOML configs, batch sweeps, CSV/JSON artifacts.

One experiment = one resolved configuration = one output directory containing
the experiment's CSV payloads, a JSON result, and a manifest.json recording
the full configuration, package version and wall time.  CSV payloads are
byte-reproducible across runs of the same configuration; manifests differ
only in their timing fields.

Exit codes: 0 success, 2 invalid configuration, 3 solver/computation failure.
"""
from __future__ import annotations

import argparse
import copy
import dataclasses
import sys
import time
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from . import __version__
from .asymptotics import convergence_study
from .core import (
    BarenblattSlice,
    Composite,
    ModelParams,
    PowerLaw,
    RadialGrid,
    compute_exponents,
    gaussian_bump,
    sample_initial,
    validate_params,
)
from .criteria import extinction_lower_bound, growth_criterion_report
from .exact import (
    BarenblattSpec,
    barenblatt,
    barenblatt_growth_limit,
    comparison_constants,
    cstar,
)
from .io import write_csv, write_manifest, write_profile_csv, write_trajectory_csv
from .profile import NoBracket, ProfileConfig, sandwich_check, solve_profile
from .solver import (
    Constant,
    Large,
    NewtonDivergence,
    NonphysicalState,
    SolverConfig,
    TimeVarying,
    Zero,
    extinction_time,
    solve,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

KINDS = ("validate", "barenblatt", "solve", "profile", "converge", "criteria", "sweep")


class ConfigError(ValueError):
    pass


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------- config


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _parse_set(item: str) -> dict:
    if "=" not in item:
        raise ConfigError(f"--set expects key=value, got {item!r}")
    key, raw = item.split("=", 1)
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    node: dict = {}
    cursor = node
    parts = key.strip().split(".")
    for p in parts[:-1]:
        cursor[p] = {}
        cursor = cursor[p]
    cursor[parts[-1]] = value
    return node


def load_preset(name: str) -> dict:
    from importlib import resources

    path = resources.files("vfdlab").joinpath("presets", f"{name}.toml")
    if not path.is_file():
        available = sorted(
            p.name[:-5]
            for p in resources.files("vfdlab").joinpath("presets").iterdir()
            if p.name.endswith(".toml")
        )
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(available)}")
    return tomllib.loads(path.read_text(encoding="utf-8"))


def resolve_config(args) -> dict:
    cfg: dict = {}
    if args.preset:
        cfg = _deep_merge(cfg, load_preset(args.preset))
        cfg.setdefault("experiment", {})["preset"] = args.preset
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config file: {e}")
        try:
            cfg = _deep_merge(cfg, tomllib.loads(text))
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"config file does not parse: {e}")
    for item in args.set or ():
        cfg = _deep_merge(cfg, _parse_set(item))
    if args.kind is not None:
        cfg.setdefault("experiment", {})["kind"] = args.kind
    return cfg


def _params_from(cfg: dict) -> ModelParams:
    tbl = cfg.get("params", {})
    n = int(tbl.get("n", 3))
    m = tbl.get("m", 0.2)
    if m == "yamabe":  # the geometric preset value (n-2)/(n+2)
        m = (n - 2) / (n + 2)
    return ModelParams(
        n=n,
        m=float(m),
        p=float(tbl.get("p", 2.0)),
        q=float(tbl.get("q", 1.0)),
        A=float(tbl.get("A", 1.0)),
    )


def _grid_from(cfg: dict, n: int) -> RadialGrid:
    tbl = cfg.get("grid", {})
    kind = tbl.get("kind", "uniform")
    cells = int(tbl.get("cells", 400))
    r_max = float(tbl.get("r_max", 4.0))
    if kind == "uniform":
        return RadialGrid.uniform(n, cells, r_max)
    if kind == "stretched":
        return RadialGrid.stretched(n, cells, r_max, ratio=float(tbl.get("ratio", 8.0)))
    raise ConfigError(f"unknown grid kind {kind!r}")


def _initial_from(cfg: dict, params: ModelParams):
    tbl = cfg.get("initial", {"kind": "powerlaw"})
    kind = tbl.get("kind", "powerlaw")
    if kind == "powerlaw":
        return PowerLaw(A=float(tbl.get("A", params.A)), q=float(tbl.get("q", params.q)))
    if kind == "barenblatt":
        spec = BarenblattSpec(k=float(tbl.get("k", 1.0)), T=float(tbl.get("T", 1.0)))
        return BarenblattSlice(spec=spec, m=params.m, t0=float(tbl.get("t0", 0.0)), n=params.n)
    if kind == "composite":
        base = PowerLaw(A=float(tbl.get("A", params.A)), q=float(tbl.get("q", params.q)))
        bump = gaussian_bump(
            params.n,
            mass=float(tbl.get("bump_mass", 1.0)),
            sigma=float(tbl.get("bump_sigma", 0.5)),
            center=float(tbl.get("bump_center", 0.0)),
        )
        return Composite(base=base, perturbation=bump)
    raise ConfigError(f"unknown initial data kind {kind!r}")


def _solver_from(cfg: dict) -> SolverConfig:
    tbl = cfg.get("solver", {})
    samples = tbl.get("sample_times")
    try:
        return SolverConfig(
            dt_init=float(tbl.get("dt_init", 1e-4)),
            dt_max=float(tbl.get("dt_max", 1e-2)),
            dt_growth=float(tbl.get("dt_growth", 1.05)),
            newton_tol=float(tbl.get("newton_tol", 1e-10)),
            newton_max=int(tbl.get("newton_max", 30)),
            eps_floor=float(tbl.get("eps_floor", 0.0)),
            extinction_threshold=float(tbl.get("extinction_threshold", 1e-12)),
            sample_times=tuple(samples) if samples else None,
        )
    except ValueError as e:
        raise ConfigError(str(e))


def _boundary_from(cfg: dict, params: ModelParams, grid: RadialGrid):
    tbl = cfg.get("boundary", {"kind": "zero"})
    kind = tbl.get("kind", "zero")
    if kind == "zero":
        return Zero()
    if kind == "constant":
        return Constant(float(tbl.get("g", 0.0)))
    if kind == "large":
        return Large(float(tbl.get("M", 1e3)))
    if kind == "powerlaw-trace":
        return Constant(params.A * grid.r_max ** (-params.q))
    if kind == "exact-barenblatt":
        spec = BarenblattSpec(k=float(tbl.get("k", 1.0)), T=float(tbl.get("T", 1.0)))
        r_b = grid.r_max
        n, m = params.n, params.m
        return TimeVarying(
            lambda t: float(barenblatt(r_b, t, spec, n, m)), label="exact-barenblatt"
        )
    raise ConfigError(f"unknown boundary kind {kind!r}")


# ---------------------------------------------------------------- experiments


def run_validate(cfg, params, out: Path) -> list[Path]:
    asym = bool(cfg.get("experiment", {}).get("asymptotics", True))
    violations = validate_params(params, asymptotics=asym)
    payload = {
        "params": vars(params),
        "asymptotics": asym,
        "violations": violations,
        "valid": not violations,
    }
    if not violations:
        exps = compute_exponents(params.q, params.m)
        payload["exponents"] = {"alpha": exps.alpha, "beta": exps.beta}
    _log(f"validate: {'ok' if not violations else '; '.join(violations)}")
    return [write_manifest(out / "validate.json", payload)]


def run_barenblatt(cfg, params, out: Path) -> list[Path]:
    tbl = cfg.get("experiment", {})
    spec = BarenblattSpec(k=float(tbl.get("k", 1.0)), T=float(tbl.get("T", 1.0)))
    slice_times = tbl.get("slice_times", [0.0, 0.25, 0.5, 0.75])
    r_max = float(tbl.get("r_max", 4.0))
    num = int(tbl.get("num_points", 401))
    r = np.linspace(0.0, r_max, num)
    rows = []
    for t in slice_times:
        u = np.asarray(barenblatt(r, float(t), spec, params.n, params.m))
        rows.extend(zip([float(t)] * num, r, u))
    files = [write_csv(out / "barenblatt_slices.csv", ("t", "r", "u"), rows)]
    T_c, k_c = comparison_constants(params.A, params.q, params.n, params.m)
    constants = {
        "cstar": cstar(params.n, params.m),
        "growth_limit": barenblatt_growth_limit(spec, params.n, params.m),
        "spec": {"k": spec.k, "T": spec.T},
        "comparison": {"T_c": T_c, "k_c": k_c, "A": params.A, "q": params.q},
    }
    files.append(write_manifest(out / "barenblatt_constants.json", constants))
    _log(f"barenblatt: growth limit {constants['growth_limit']:.4f}")
    return files


def run_solve(cfg, params, out: Path) -> list[Path]:
    tbl = cfg.get("experiment", {})
    t_end = float(tbl.get("t_end", 0.5))
    grid = _grid_from(cfg, params.n)
    scfg = _solver_from(cfg)
    if scfg.sample_times is None:
        scfg = dataclasses.replace(scfg, sample_times=tuple(np.linspace(0.0, t_end, 11)[1:]))
    bc = _boundary_from(cfg, params, grid)
    data = _initial_from(cfg, params)
    u0 = sample_initial(data, grid)
    traj = solve(u0, bc, t_end, scfg, params.n, params.m)
    files = [write_trajectory_csv(out / "trajectory.csv", traj)]
    d = traj.diagnostics
    files.append(
        write_csv(
            out / "diagnostics.csv",
            ("t", "dt", "newton_iters", "residual", "u_min", "u_max"),
            zip(d.times, d.dts, d.newton_iters, d.residuals, d.u_min, d.u_max),
        )
    )
    thr = tbl.get("extinction_threshold")
    summary = {
        "t_end": t_end,
        "steps": d.num_steps,
        "mass": {"initial": traj.fields[0].mass(), "final": traj.fields[-1].mass()},
        "max_u_final": traj.fields[-1].max(),
    }
    if thr is not None:
        summary["extinction_time"] = extinction_time(traj, float(thr))
        summary["extinction_threshold"] = float(thr)
    files.append(write_manifest(out / "solve.json", summary))
    _log(f"solve: {d.num_steps} steps to t={t_end:g}, final max u = {summary['max_u_final']:.3e}")
    return files


def run_profile(cfg, params, out: Path) -> list[Path]:
    tbl = cfg.get("experiment", {})
    A_target = float(tbl.get("A_target", params.A))
    pcfg = ProfileConfig(
        r_max=float(tbl["r_max"]) if "r_max" in tbl else None,
        match_rtol=float(tbl.get("match_rtol", 1e-4)),
    )
    prof = solve_profile(A_target, params, pcfg)
    report = sandwich_check(prof, A_target, params)
    T_c, k_c = comparison_constants(A_target, params.q, params.n, params.m)
    files = [write_profile_csv(out / "profile.csv", prof)]
    files.append(
        write_manifest(
            out / "profile.json",
            {
                "lambda": prof.lam,
                "A_target": A_target,
                "A_achieved": prof.A_achieved,
                "A_spread": prof.A_spread,
                "params": {"n": params.n, "m": params.m, "q": params.q},
                "exponents": {"alpha": prof.exps.alpha, "beta": prof.exps.beta},
                "comparison": {"T_c": T_c, "k_c": k_c},
                "sandwich": {
                    "upper_ok": report.upper_ok,
                    "lower_ok": report.lower_ok,
                    "upper_margin": report.upper_margin,
                    "lower_margin": report.lower_margin,
                    "t_check": report.t_check,
                },
            },
        )
    )
    _log(f"profile: lambda={prof.lam:.8f}, A={prof.A_achieved:.6f} (+-{prof.A_spread:.2e})")
    return files


def run_converge(cfg, params, out: Path) -> list[Path]:
    tbl = cfg.get("experiment", {})
    times = tbl.get("times") or list(np.geomspace(0.5, 5.0, 9))
    R = float(tbl.get("R", 2.0))
    scfg = _solver_from(cfg)
    grid = _grid_from(cfg, params.n) if "grid" in cfg else None
    report = convergence_study(
        _initial_from(cfg, params),
        params,
        [float(t) for t in times],
        R,
        scfg,
        grid=grid,
        domain_factor=float(tbl.get("domain_factor", 1.5)),
    )
    files = [write_csv(out / "convergence.csv", ("t", "d"), zip(report.times, report.distances))]
    files.append(
        write_manifest(
            out / "convergence.json",
            {
                "R": report.R,
                "profile_lambda": report.profile_lam,
                "monotone_tail_ratio": report.monotone_tail_ratio,
                "tail_start": report.tail_start,
                "tail_nonincreasing": report.tail_nonincreasing(),
            },
        )
    )
    _log(f"converge: tail ratio {report.monotone_tail_ratio:.3f}")
    return files


def run_criteria(cfg, params, out: Path) -> list[Path]:
    tbl = cfg.get("experiment", {})
    R_list = tbl.get("R_list") or list(np.geomspace(1.0, 1e4, 9))
    data = _initial_from(cfg, params)
    T = tbl.get("T")
    C1 = tbl.get("C1")
    report = growth_criterion_report(
        data,
        params,
        [float(R) for R in R_list],
        T=float(T) if T is not None else None,
        C1=float(C1) if C1 is not None else None,
    )
    files = [write_csv(out / "growth.csv", ("R", "G"), zip(report.radii, report.averages))]
    payload = {
        "classification": report.classification,
        "fitted_slope": report.fitted_slope,
        "threshold": report.threshold,
        "threshold_ok": report.threshold_ok,
    }
    C2 = tbl.get("C2")
    if C2 is not None:
        R_bound = float(tbl.get("bound_radius", report.radii[-1]))
        payload["extinction_lower_bound"] = extinction_lower_bound(
            data, R_bound, params, C2=float(C2)
        )
        payload["bound_radius"] = R_bound
    files.append(write_manifest(out / "criteria.json", payload))
    _log(f"criteria: {report.classification} (slope {report.fitted_slope:.3f})")
    return files


def run_sweep(cfg, params, out: Path) -> list[Path]:
    runs = cfg.get("sweep", {}).get("runs")
    if not runs:
        raise ConfigError("sweep config needs [[sweep.runs]] entries")
    files = []
    for i, sub in enumerate(runs):
        name = sub.get("name", f"run{i:02d}")
        sub_cfg = _deep_merge({k: v for k, v in cfg.items() if k != "sweep"}, sub)
        sub_cfg.setdefault("experiment", {}).pop("preset", None)
        kind = sub_cfg.get("experiment", {}).get("kind")
        if kind in (None, "sweep"):
            raise ConfigError(f"sweep run {name!r} needs a non-sweep experiment.kind")
        _log(f"sweep: running {name} ({kind})")
        files.extend(execute(sub_cfg, out / name))
    return files


def execute(cfg: dict, out: Path) -> list[Path]:
    kind = cfg.get("experiment", {}).get("kind")
    if kind not in KINDS:
        raise ConfigError(f"experiment.kind must be one of {', '.join(KINDS)}, got {kind!r}")
    params = _params_from(cfg)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    runner = {
        "validate": run_validate,
        "barenblatt": run_barenblatt,
        "solve": run_solve,
        "profile": run_profile,
        "converge": run_converge,
        "criteria": run_criteria,
        "sweep": run_sweep,
    }[kind]
    files = runner(cfg, params, out)
    manifest = {
        "config": cfg,
        "kind": kind,
        "version": __version__,
        "wall_time_s": time.time() - started,
        "files": sorted(str(p.relative_to(out)) for p in files),
    }
    write_manifest(out / "manifest.json", manifest)
    return files


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="vfdlab",
        description="Very fast diffusion laboratory: experiments and artifact emission.",
    )
    ap.add_argument("kind", nargs="?", choices=KINDS, help="experiment to run")
    ap.add_argument("--config", help="TOML configuration file")
    ap.add_argument("--preset", help="named preset shipped with the package")
    ap.add_argument("--out", default="out", help="output directory (default: ./out)")
    ap.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="override a config entry, dotted keys (repeatable)",
    )
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if not cfg.get("experiment", {}).get("kind"):
            raise ConfigError("no experiment kind given (positional argument, preset or config)")
        execute(cfg, Path(args.out))
    except ConfigError as e:
        _log(f"error: {e}")
        return EXIT_CONFIG
    except (NewtonDivergence, NonphysicalState, NoBracket) as e:
        _log(f"solver failure: {e}")
        return EXIT_SOLVER
    except (ValueError, OSError) as e:
        _log(f"error: {e}")
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
