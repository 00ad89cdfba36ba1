"""Command-line front end.

Subcommands: verify, graph, simulate, hydro, compare, expectation. Exit
codes form a stable contract: 0 success, 1 verification failure, 2 usage
error, 3 a simulation ended in a frozen state (partial output is kept).

Every option may also come from a JSON config file via --config; flags
given on the command line win. There is no environment-variable
configuration, so a command line plus config file reproduces a run exactly.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Optional

from . import __version__
from .models import ModelSpec, parse_model

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_USAGE = 2
EXIT_BLOCKED = 3

IDENTITY_NAMES = (
    "gradient",
    "inversion",
    "decomposition",
    "inequality",
    "partition",
    "symmetry",
    "interpolation",
    "monotonicity",
    "threshold",
    "monomial",
    "expectation",
)

_DEFAULTS: dict[str, dict] = {
    "verify": dict(identity=None, all=False, model=None, N=None, L=4, n=1, ell=1,
                   mode="exhaustive", samples=20000, seed=0, mutate=None, out=None),
    "graph": dict(model=None, N=None, out=None, structure=False),
    "simulate": dict(model=None, N=None, K=None, profile=None, times=None, tmax=None,
                     replicas=1, seed=0, engine="thinning", threads=1, out=None),
    "hydro": dict(model=None, profile=None, times=None, tmax=None, M=256,
                  safety=0.4, out=None),
    "compare": dict(model=None, N=None, K=None, M=256, profile=None, times=None,
                    tmax=None, replicas=1, seed=0, engine="thinning", threads=1,
                    safety=0.4, out=None),
    "expectation": dict(model=None, rho=None, samples=20000, seed=0, out=None),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latgas",
        description="Exact verification, state-space analysis and kinetic Monte "
        "Carlo for window-constrained exclusion dynamics on a discrete torus.",
    )
    parser.add_argument("--version", action="version", version=f"latgas {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    S = argparse.SUPPRESS

    def arg(p, *names, **kw):
        kw.setdefault("default", S)
        p.add_argument(*names, **kw)

    p = sub.add_parser("verify", help="run exact identity checks, print a JSON report")
    arg(p, "--identity", choices=IDENTITY_NAMES, help="single identity to check")
    arg(p, "--all", action="store_true", help="run the full suite (default when --identity is absent)")
    arg(p, "--model", help="model spec, e.g. bernstein:n=2,L=4 or rpmm:l=1,L=2")
    arg(p, "--N", type=int, help="torus size (default 2L+4)")
    arg(p, "--L", type=int, help="window length / suite bound (default 4)")
    arg(p, "--n", type=int, help="particle parameter for n-indexed identities (default 1)")
    arg(p, "--ell", type=int, help="reduced-model parameter (default 1)")
    arg(p, "--mode", choices=("exhaustive", "randomized"))
    arg(p, "--samples", type=int, help="states per check in randomized mode")
    arg(p, "--seed", type=int)
    arg(p, "--mutate", help="negative control: deliberately wrong variant; "
                            "aliases h and g pick the broken local-function parts")
    arg(p, "--out", help="also write the JSON report to this path")
    arg(p, "--config", help="JSON file of option defaults")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("graph", help="communicating classes and blocked states")
    arg(p, "--model", required=False)
    arg(p, "--N", type=int)
    arg(p, "--out", help="write per-state class table as CSV")
    arg(p, "--structure", action="store_true",
        help="also run mobility and mass-transport checks (exit 1 on witnesses)")
    arg(p, "--config")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("simulate", help="kinetic Monte Carlo trajectories")
    _sim_args(arg, p)
    arg(p, "--out", help="trajectory CSV (a .json metadata sidecar is written next to it)")
    arg(p, "--config")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("hydro", help="reference PDE solve of the limit equation")
    arg(p, "--model")
    arg(p, "--profile", help="initial profile, e.g. step:0.8,0.2")
    arg(p, "--times", help="comma-separated output times (macroscopic)")
    arg(p, "--tmax", type=float, help="shorthand for --times tmax/5,tmax/2,tmax")
    arg(p, "--M", type=int, help="grid cells (default 256)")
    arg(p, "--safety", type=float, help="fraction of the stability bound (default 0.4)")
    arg(p, "--out", help="profile CSV")
    arg(p, "--config")
    p.set_defaults(func=cmd_hydro)

    p = sub.add_parser("compare", help="simulate and solve, report L1/Linf per time")
    _sim_args(arg, p)
    arg(p, "--M", type=int, help="PDE grid cells (default 256, must be a multiple of K)")
    arg(p, "--safety", type=float)
    arg(p, "--out", help="comparison report JSON")
    arg(p, "--config")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("expectation", help="Monte Carlo equilibrium rate vs exact value")
    arg(p, "--model")
    arg(p, "--rho", type=float, help="density in [0, 1]")
    arg(p, "--samples", type=int)
    arg(p, "--seed", type=int)
    arg(p, "--out")
    arg(p, "--config")
    p.set_defaults(func=cmd_expectation)

    return parser


def _sim_args(arg, p) -> None:
    arg(p, "--model")
    arg(p, "--N", type=int, help="torus sites")
    arg(p, "--K", type=int, help="coarse-graining boxes (divides N)")
    arg(p, "--profile", help="initial profile, e.g. step:0.8,0.2")
    arg(p, "--times", help="comma-separated output times (macroscopic)")
    arg(p, "--tmax", type=float, help="shorthand for --times tmax/5,tmax/2,tmax")
    arg(p, "--replicas", type=int)
    arg(p, "--seed", type=int)
    arg(p, "--engine", choices=("thinning", "reference"))
    arg(p, "--threads", type=int)


def _merge(args: argparse.Namespace) -> dict:
    """Config-file values fill in anything not given on the command line."""
    given = {k: v for k, v in vars(args).items() if k not in ("func", "subcommand")}
    merged = dict(_DEFAULTS[args.subcommand])
    path = given.pop("config", None)
    if path:
        with open(path) as f:
            try:
                cfg = json.load(f)
            except json.JSONDecodeError as e:
                raise ValueError(f"config {path} is not valid JSON: {e}") from None
        if not isinstance(cfg, dict):
            raise ValueError(f"config {path} must hold a JSON object")
        unknown = set(cfg) - set(merged)
        if unknown:
            raise ValueError(f"config {path} has unknown keys: {sorted(unknown)}")
        merged.update(cfg)
    merged.update(given)
    return merged


def _times(a: dict) -> tuple[float, ...]:
    times, tmax = a.get("times"), a.get("tmax")
    if times is not None and tmax is not None:
        raise ValueError("give either --times or --tmax, not both")
    if times is not None:
        if isinstance(times, str):
            times = [float(t) for t in times.split(",") if t.strip()]
        return tuple(float(t) for t in times)
    if tmax is not None:
        if tmax <= 0:
            raise ValueError("tmax must be positive")
        return (tmax / 5.0, tmax / 2.0, tmax)
    raise ValueError("output times required: --times t1,t2,... or --tmax T")


def _require(a: dict, *keys: str) -> None:
    missing = [k for k in keys if a.get(k) is None]
    if missing:
        raise ValueError("missing required option(s): " + ", ".join(f"--{k}" for k in missing))


def _emit(payload: dict, out: Optional[str]) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if out:
        with open(out, "w") as f:
            f.write(text + "\n")


def _resolve_mutation(identity: str, model: Optional[ModelSpec], mutate: Optional[str]) -> Optional[str]:
    if mutate in ("h", "g"):
        if identity != "gradient":
            raise ValueError(f"mutation alias {mutate!r} only applies to the gradient identity")
        if mutate == "g":
            return "g-anchors-backward"
        if model is not None and model.family == "bernstein":
            return "h-threshold-low"
        return "h-printed-indicator"
    return mutate


def cmd_verify(a: dict) -> int:
    from . import identities as idn

    mode, samples, seed = a["mode"], a["samples"], a["seed"]
    identity = a["identity"]
    if identity is None or a["all"]:
        if a["mutate"]:
            raise ValueError("--mutate needs a single --identity")
        reports = idn.standard_suite(L_max=a["L"], N=a["N"], mode=mode,
                                     samples=samples, seed=seed)
    else:
        L, n, ell = a["L"], a["n"], a["ell"]
        model = parse_model(a["model"]) if a["model"] else None
        mutate = _resolve_mutation(identity, model, a["mutate"])
        N = a["N"] if a["N"] is not None else 2 * L + 4
        kw = dict(mode=mode, samples=samples, seed=seed, mutate=mutate)
        if identity == "gradient":
            model = model or ModelSpec.rpmm(ell, L)
            N = a["N"] if a["N"] is not None else 2 * model.window_length + 4
            reports = [idn.check_gradient(model, N, **kw)]
        elif identity == "expectation":
            model = model or ModelSpec.rpmm(ell, L)
            reports = [idn.check_expectation(model, mutate=mutate)]
        elif identity == "inversion":
            reports = [idn.check_inversion(L, N, **kw)]
        elif identity == "decomposition":
            reports = [idn.check_decomposition(L, N, **kw)]
        elif identity == "partition":
            reports = [idn.check_partition(L, N, **kw)]
        elif identity == "monotonicity":
            reports = [idn.check_monotonicity(L, N, **kw)]
        elif identity == "inequality":
            reports = [idn.check_inequality(n, L, N, **kw)]
        elif identity == "symmetry":
            reports = [idn.check_symmetry(n, L, N, **kw)]
        elif identity == "interpolation":
            reports = [idn.check_interpolation(n, L, N, **kw)]
        elif identity == "threshold":
            reports = [idn.check_threshold_identity(n, L, N, **kw)]
        elif identity == "monomial":
            reports = [idn.check_monomial(n, L, N, **kw)]
        else:  # pragma: no cover - argparse restricts choices
            raise ValueError(f"unknown identity {identity!r}")

    passed = all(r.passed for r in reports)
    payload = {
        "build": f"latgas {__version__}",
        "reports": [r.to_dict() for r in reports],
        "identities": len(reports),
        "states_checked": sum(r.states_checked for r in reports),
        "failures": sum(r.failure_count for r in reports),
        "passed": passed,
    }
    _emit(payload, a["out"])
    return EXIT_OK if passed else EXIT_VERIFICATION


def cmd_graph(a: dict) -> int:
    from .graph import (build_graph, decompose, mass_transport_check,
                        mobility_check, summary, write_classes_csv)

    _require(a, "model", "N")
    model = parse_model(a["model"])
    graph = build_graph(model, a["N"])
    decomp = decompose(graph)
    payload = summary(decomp)
    payload["build"] = f"latgas {__version__}"
    if a["out"]:
        write_classes_csv(decomp, a["out"], build=f"latgas {__version__}")
        payload["out"] = a["out"]
    code = EXIT_OK
    if a["structure"]:
        checks = [mobility_check(model, a["N"], decomposition=decomp),
                  mass_transport_check(model, a["N"], decomposition=decomp)]
        payload["structure"] = [c.to_dict() for c in checks]
        if not all(c.passed for c in checks):
            code = EXIT_VERIFICATION
    _emit(payload, None)
    return code


def _build_sim_config(a: dict):
    from .simulate import SimulationConfig

    _require(a, "model", "N", "K", "profile")
    return SimulationConfig(
        model=a["model"], N=a["N"], K=a["K"], profile=a["profile"],
        out_times=_times(a), replicas=a["replicas"], seed=a["seed"],
        engine=a["engine"],
    )


def cmd_simulate(a: dict) -> int:
    from .simulate import run_trajectory, trajectory_metadata, write_trajectory

    cfg = _build_sim_config(a)
    traj = run_trajectory(cfg, threads=a["threads"])
    payload = trajectory_metadata(traj)
    if a["out"]:
        write_trajectory(traj, a["out"])
        payload["out"] = a["out"]
    _emit(payload, None)
    return EXIT_BLOCKED if traj.any_blocked else EXIT_OK


def cmd_hydro(a: dict) -> int:
    from .hydro import solve_pde, write_profile_csv

    _require(a, "model", "profile")
    sol = solve_pde(a["model"], a["profile"], _times(a), M=a["M"], safety=a["safety"])
    if a["out"]:
        write_profile_csv(sol, a["out"])
    payload = {
        "build": f"latgas {__version__}",
        "model": sol.model,
        "M": sol.M,
        "dt": sol.dt,
        "times_requested": list(sol.times_requested),
        "times_recorded": list(sol.times_recorded),
        "mass_drift": sol.mass_drift,
        "out": a["out"],
    }
    _emit(payload, None)
    return EXIT_OK


def cmd_compare(a: dict) -> int:
    from .hydro import compare_profiles, solve_pde, write_comparison
    from .simulate import run_trajectory, trajectory_metadata

    cfg = _build_sim_config(a)
    if a["M"] % cfg.K != 0:
        raise ValueError(f"--M {a['M']} must be a multiple of --K {cfg.K}")
    traj = run_trajectory(cfg, threads=a["threads"])
    sol = solve_pde(cfg.model, cfg.profile, cfg.out_times, M=a["M"], safety=a["safety"])
    results = compare_profiles(traj, sol)
    meta = trajectory_metadata(traj)
    meta["M"] = sol.M
    meta["pde_dt"] = sol.dt
    meta["pde_mass_drift"] = sol.mass_drift
    payload = dict(meta)
    payload["times"] = results
    if a["out"]:
        write_comparison(results, meta, a["out"])
        payload["out"] = a["out"]
    _emit(payload, None)
    return EXIT_BLOCKED if traj.any_blocked else EXIT_OK


def cmd_expectation(a: dict) -> int:
    from .models import expected_rate
    from .simulate import monte_carlo_expectation

    _require(a, "model", "rho")
    model = parse_model(a["model"])
    est, se = monte_carlo_expectation(model, a["rho"], samples=a["samples"], seed=a["seed"])
    exact = float(expected_rate(model, Fraction(str(a["rho"]))))
    payload = {
        "build": f"latgas {__version__}",
        "model": str(model),
        "rho": a["rho"],
        "samples": a["samples"],
        "seed": a["seed"],
        "estimate": est,
        "stderr": se,
        "exact": exact,
        "z": (est - exact) / se if se > 0 else 0.0,
    }
    _emit(payload, a["out"])
    return EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        merged = _merge(args)
        return args.func(merged)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except RuntimeError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VERIFICATION


if __name__ == "__main__":
    sys.exit(main())
