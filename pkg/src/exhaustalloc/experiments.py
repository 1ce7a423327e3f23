"""Reproduction runs for the three numerical studies and their artifact files."""
from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Dict, Iterable, List

import numpy as np

from . import svg
from .config import geometric_rates
from .model import WorkerParams
from .moderate import alternating_solve
from .oracle import GridSpec, oracle_moderate
from .strict import solve_strict

FIGURES = ("fig4", "fig5", "fig6")
OUT_ENV = "EXHAUSTALLOC_OUT"

FIG4 = dict(n=10, mu=1.0, budget=10.0, lambda_sum=20.0, qs=(1.0, 0.9))
FIG5 = dict(lam=(10.0, 20.0), mu=(5.0, 1.0), budget=10.0, step=0.01)
FIG6 = dict(lam=(2.5, 3.0, 3.5), mu=(1.0, 1.0, 1.0), ps=0.7, budgets=tuple(range(1, 21)),
            alpha_steps=401, p_steps=101)


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.9g}"


def _map(fn: Callable, items: Iterable, jobs: int) -> List:
    items = list(items)
    if jobs <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))  # map keeps input order


# ---------------------------------------------------------------------------


def run_fig4() -> Dict:
    rows, utilities, zeros = [], {}, {}
    for q in FIG4["qs"]:
        lam = geometric_rates(FIG4["n"], q, FIG4["lambda_sum"])
        workers = [WorkerParams(l, FIG4["mu"]) for l in lam]
        sol = solve_strict(workers, FIG4["budget"])
        utilities[q] = sol.utility
        zeros[q] = int(np.sum(sol.alpha == 0))
        for i, (l, a) in enumerate(zip(lam, sol.alpha)):
            rows.append({"worker_index": i + 1, "q": q, "lambda": l, "mu": FIG4["mu"], "alpha": a})
    return {"rows": rows, "utilities": utilities, "zero_allocations": zeros}


def _fig5_point(ps: float):
    workers = [WorkerParams(l, m, ps) for l, m in zip(FIG5["lam"], FIG5["mu"])]
    policy, utility, rep = alternating_solve(workers, FIG5["budget"])
    return {
        "ps": ps, "p1": policy.p[0], "p2": policy.p[1], "alpha1": policy.alpha[0],
        "alpha2": policy.alpha[1], "utility": utility,
        "converged": bool(rep.converged and rep.all_blocks_converged),
    }


def detect_jumps(ps: np.ndarray, p: np.ndarray, tol: float = 1e-6) -> Dict:
    """Locate 0 -> 1 switches of an assignment probability along a sweep.

    A switch is reported at the midpoint of the two bracketing sweep values.
    """
    on = p > 0.5
    binary = bool(np.all((p <= tol) | (p >= 1 - tol)))
    flips = np.flatnonzero(on[1:] != on[:-1])
    ups = [int(k) for k in flips if not on[k] and on[k + 1]]
    thresholds = [float(0.5 * (ps[k] + ps[k + 1])) for k in ups]
    return {"jumps": len(flips), "up_jumps": len(ups), "binary": binary, "thresholds": thresholds,
            "single_jump": len(flips) == 1 and len(ups) == 1 and not on[0] and on[-1]}


def run_fig5(jobs: int = 1) -> Dict:
    grid = np.round(np.arange(0.0, 1.0 + 1e-9, FIG5["step"]), 10)
    rows = _map(_fig5_point, [float(x) for x in grid], jobs)
    ps = np.array([r["ps"] for r in rows])
    jumps = {f"worker{i + 1}": detect_jumps(ps, np.array([r[f"p{i + 1}"] for r in rows])) for i in range(2)}
    return {"rows": rows, "jumps": jumps,
            "nonconverged": [r["ps"] for r in rows if not r["converged"]]}


def _fig6_point(budget: float):
    workers = [WorkerParams(l, m, FIG6["ps"]) for l, m in zip(FIG6["lam"], FIG6["mu"])]
    policy, utility, rep = alternating_solve(workers, budget)
    orc = oracle_moderate(workers, budget, GridSpec(FIG6["alpha_steps"], FIG6["p_steps"]))
    return {
        "C": budget, "utility_bnb": utility, "utility_oracle": orc.utility,
        "p1": policy.p[0], "p2": policy.p[1], "p3": policy.p[2],
        "alpha": [float(a) for a in policy.alpha], "oracle_grid_error": orc.grid_error,
        "outer_iterations": rep.outer_iterations,
        "converged": bool(rep.converged and rep.all_blocks_converged),
    }


def run_fig6(jobs: int = 1, budgets=None) -> Dict:
    budgets = FIG6["budgets"] if budgets is None else budgets
    rows = _map(_fig6_point, [float(c) for c in budgets], jobs)
    gaps = [abs(r["utility_bnb"] - r["utility_oracle"]) / r["utility_oracle"] for r in rows]
    return {"rows": rows, "max_relative_gap": max(gaps),
            "all_p_one": all(min(r["p1"], r["p2"], r["p3"]) >= 1 - 1e-6 for r in rows),
            "nonconverged": [r["C"] for r in rows if not r["converged"]]}


# ---------------------------------------------------------------------------

COLUMNS = {
    "fig4": ("worker_index", "q", "lambda", "mu", "alpha"),
    "fig5": ("ps", "p1", "p2", "alpha1", "alpha2", "utility"),
    "fig6": ("C", "utility_bnb", "utility_oracle", "p1", "p2", "p3"),
}


def _csv(figure: str, rows: List[Dict]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    cols = COLUMNS[figure]
    wr.writerow(cols)
    for r in rows:
        wr.writerow([fmt(r[c]) for c in cols])
    return buf.getvalue()


def _plot(figure: str, res: Dict) -> str:
    rows = res["rows"]
    if figure == "fig4":
        series = {f"q = {q}": [r["alpha"] for r in rows if r["q"] == q] for q in FIG4["qs"]}
        return svg.bar_chart([str(i) for i in range(1, FIG4["n"] + 1)], series,
                             "Sampling rate per worker", "worker", "alpha")
    if figure == "fig5":
        x = [r["ps"] for r in rows]
        return svg.line_chart(x, {"p1": [r["p1"] for r in rows], "p2": [r["p2"] for r in rows]},
                              "Moderate-state assignment probability", "ps", "p")
    x = [r["C"] for r in rows]
    return svg.line_chart(x, {"branch-and-bound": [r["utility_bnb"] for r in rows],
                              "grid search": [r["utility_oracle"] for r in rows]},
                          "Utility against sampling budget", "C", "utility")


def _summary(figure: str, res: Dict) -> Dict:
    if figure == "fig4":
        return {"figure": figure, "parameters": {k: v for k, v in FIG4.items()},
                "utilities": {str(q): u for q, u in res["utilities"].items()},
                "zero_allocations": {str(q): z for q, z in res["zero_allocations"].items()},
                "rows": res["rows"]}
    params = FIG5 if figure == "fig5" else FIG6
    out = {"figure": figure, "parameters": params}
    out.update({k: v for k, v in res.items()})
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def run_reproduction(figure: str, out_dir=None, jobs: int = 1) -> Dict:
    """Run one study and write ``<figure>.csv``, ``.json`` and ``.svg`` into ``out_dir``."""
    if figure not in FIGURES:
        raise ValueError(f"unknown figure {figure!r}; choose from {FIGURES}")
    out = Path(out_dir or os.environ.get(OUT_ENV, "results"))
    out.mkdir(parents=True, exist_ok=True)
    if figure == "fig4":
        res = run_fig4()
    elif figure == "fig5":
        res = run_fig5(jobs)
    else:
        res = run_fig6(jobs)
    (out / f"{figure}.csv").write_text(_csv(figure, res["rows"]))
    (out / f"{figure}.json").write_text(json.dumps(_jsonable(_summary(figure, res)), indent=2, sort_keys=True) + "\n")
    (out / f"{figure}.svg").write_text(_plot(figure, res))
    res["files"] = [str(out / f"{figure}.{ext}") for ext in ("csv", "json", "svg")]
    return res
