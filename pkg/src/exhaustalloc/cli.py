"""Command line entry point: ``exhaustalloc <subcommand> ...``.

Exit codes: 0 success, 1 invalid input or failed certificate, 2 solver did
not converge.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from .config import SCHEMA_VERSION, ConfigError, load_config
from .experiments import FIGURES, OUT_ENV, fmt, run_reproduction
from .model import (
    STATE_NAMES,
    Policy,
    WorkerParams,
    moderate_stationary,
    moderate_utility,
    stationary_strict_closed_form,
    strict_utility,
)
from .moderate import alternating_solve
from .oracle import GridSpec, oracle_moderate, oracle_strict, verify_kkt, verify_moderate
from .simulate import SimConfig, simulate_system
from .strict import StrictSolution, solve_strict

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _vec(v) -> str:
    return "(" + ", ".join(fmt(x) for x in v) + ")"


def _write_json(path, obj):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------


def cmd_steady(args) -> int:
    w = WorkerParams(args.lam, args.mu, args.ps, allow_unstable=args.allow_unstable)
    if args.mode == "strict":
        pi = stationary_strict_closed_form(w, args.alpha)
        u = strict_utility(w, args.alpha)
    else:
        pi = moderate_stationary(w, args.alpha, args.p)
        u = moderate_utility(w, args.alpha, args.p)
    print("states  " + " ".join(STATE_NAMES))
    print("pi      " + _vec(pi.probs))
    print("utility " + fmt(u))
    return EXIT_OK


def _solve(cfg):
    if cfg.mode == "strict":
        sol = solve_strict(cfg.workers, cfg.budget)
        return {"mode": "strict", "solution": sol.to_dict(), "utility": sol.utility, "converged": True,
                "alpha": sol.alpha, "p": np.zeros(len(cfg.workers))}
    s = cfg.solver
    policy, utility, rep = alternating_solve(cfg.workers, cfg.budget, rho=s.rho, eps=s.eps,
                                             max_outer=s.max_outer, node_cap=s.node_cap)
    conv = rep.converged and rep.all_blocks_converged
    last = rep.alpha_reports[-1]
    return {"mode": "moderate", "utility": utility, "converged": conv, "alpha": policy.alpha, "p": policy.p,
            "solution": {"alpha": policy.alpha.tolist(), "p": policy.p.tolist(), "utility": utility,
                         "rho": s.rho, "bounds": [last.lower_bound, last.upper_bound],
                         "report": rep.to_dict()}}


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    res = _solve(cfg)
    print(f"mode    {res['mode']}")
    print("alpha   " + _vec(res["alpha"]))
    if res["mode"] == "moderate":
        print("p       " + _vec(res["p"]))
    print("utility " + fmt(res["utility"]))
    if args.out:
        _write_json(args.out, {
            "schema_version": SCHEMA_VERSION,
            "kind": f"{res['mode']}_solution",
            "config": cfg.to_dict(),
            "budget": cfg.budget,
            "workers": [w.to_dict() for w in cfg.workers],
            "solution": res["solution"],
            "converged": res["converged"],
        })
    if not res["converged"]:
        print("warning: solver did not converge", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    grid = GridSpec(args.alpha_steps or cfg.grid.alpha_steps, args.p_steps or cfg.grid.p_steps)
    if cfg.mode == "strict":
        res = oracle_strict(cfg.workers, cfg.budget, grid)
    else:
        res = oracle_moderate(cfg.workers, cfg.budget, grid)
    print("alpha   " + _vec(res.alpha))
    if res.p is not None:
        print("p       " + _vec(res.p))
    print("utility " + fmt(res.utility))
    print("grid    step " + fmt(res.resolution) + ", error bound " + fmt(res.grid_error))
    if args.out:
        _write_json(args.out, {"schema_version": SCHEMA_VERSION, "kind": "oracle", **res.to_dict()})
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.solution:
        stored = json.loads(Path(args.solution).read_text())
        sol = stored["solution"]
        policy = Policy(sol["alpha"], sol.get("p", [0.0] * len(sol["alpha"])))
        analytic = sol["utility"]
    else:
        res = _solve(cfg)
        policy = Policy(res["alpha"], res["p"])
        analytic = res["utility"]
    sc = SimConfig(horizon=args.horizon or cfg.sim.horizon,
                   seed=cfg.sim.seed if args.seed is None else args.seed, warmup=cfg.sim.warmup)
    stats = simulate_system(cfg.workers, policy, cfg.mode, sc)
    agg = stats.aggregate
    z = (agg.success_rate - analytic) / agg.stderr if agg.stderr > 0 else 0.0
    print("success " + fmt(agg.success_rate) + " +- " + fmt(agg.stderr))
    print("assign  " + fmt(agg.assign_rate))
    print("analytic " + fmt(analytic) + f" (z = {z:.3f})")
    if args.out:
        _write_json(args.out, {"schema_version": SCHEMA_VERSION, "kind": "simulation",
                               "horizon": sc.horizon, "seed": sc.seed, "warmup": sc.warmup,
                               "analytic_utility": analytic, **stats.to_dict()})
    return EXIT_OK


def cmd_reproduce(args) -> int:
    out = args.out or os.environ.get(OUT_ENV, "results")
    res = run_reproduction(args.figure, out, jobs=args.jobs)
    for f in res["files"]:
        print(f)
    if res.get("nonconverged"):
        print(f"warning: non-converged sweep points {res['nonconverged']}", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_verify(args) -> int:
    stored = json.loads(Path(args.solution).read_text())
    kind = stored.get("kind") if isinstance(stored, dict) else None
    if kind not in ("strict_solution", "moderate_solution"):
        raise ConfigError(f"{args.solution}: not a solution file written by 'solve --out'")
    if stored.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"{args.solution}: unsupported schema_version {stored.get('schema_version')!r}")
    workers = [WorkerParams(w["lambda"], w["mu"], w.get("ps", 0.0), allow_unstable=True) for w in stored["workers"]]
    s = stored["solution"]
    if kind == "strict_solution":
        sol = StrictSolution(alpha=np.array(s["alpha"], dtype=float), water_level=s["water_level"],
                             active_set=tuple(s["active_set"]), utility=s["utility"])
        rep = verify_kkt(sol, workers, stored["budget"])
    else:
        rep = verify_moderate(SimpleNamespace(alpha=s["alpha"], p=s["p"]), s["utility"], workers, stored["budget"],
                              bounds=s.get("bounds"), rho=s.get("rho", 1e-4))
    for c in rep.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<20} residual {c.residual:.3e}")
    return EXIT_OK if rep.passed else EXIT_INVALID


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="exhaustalloc", description="Sampling-rate allocation for exhaustible workers.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("steady", help="stationary distribution and utility of one worker")
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--mu", type=float, required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--p", type=float, default=0.0)
    s.add_argument("--ps", type=float, default=0.0)
    s.add_argument("--mode", choices=("strict", "moderate"), default="strict")
    s.add_argument("--allow-unstable", action="store_true")
    s.set_defaults(func=cmd_steady)

    s = sub.add_parser("solve", help="optimal allocation for a config")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("oracle", help="grid-search reference optimum")
    s.add_argument("--config", required=True)
    s.add_argument("--alpha-steps", type=int)
    s.add_argument("--p-steps", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("simulate", help="Monte Carlo check of a policy")
    s.add_argument("--config", required=True)
    s.add_argument("--solution", help="solution file from 'solve --out'; solved afresh if omitted")
    s.add_argument("--horizon", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("reproduce", help="regenerate a numerical study")
    s.add_argument("figure", choices=FIGURES)
    s.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./results)")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_reproduce)

    s = sub.add_parser("verify", help="re-check the certificate of a stored solution")
    s.add_argument("solution")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ConfigError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
