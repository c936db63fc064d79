"""Experiment runner: one CSV row per (instance, algorithm, seed)."""

from __future__ import annotations

import csv
import io
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from pathlib import Path

import numpy as np

from ..bruteforce import EXACT_OPT_MAX_N, exact_opt
from ..core import is_feasible
from ..derandomize import solve_deterministic
from ..enumeration import solve_randomized
from ..errors import InputError
from ..report import COLUMNS, RunReport
from ..rounding import DEFAULT_ATTEMPTS
from .generate import generate
from .instance_io import load_instance, parse_instance, serialize_instance

log = logging.getLogger(__name__)

ALGORITHMS = ("randomized", "deterministic", "bruteforce")


def _instance_from_entry(entry: dict, base_dir: Path):
    if "path" in entry:
        path = Path(entry["path"])
        return load_instance(path if path.is_absolute() else base_dir / path)
    if "generate" in entry:
        g = entry["generate"]
        return generate(g["kind"], g.get("params", {}), int(g.get("seed", 0)))
    raise InputError(f"instance entry needs 'path' or 'generate': {entry}")


@lru_cache(maxsize=64)
def _cached_opt(text: str) -> float:
    return exact_opt(parse_instance(text)).optimum_value


def run_one(inst, algo: dict, seed: int, compute_opt: bool = True,
            raise_errors: bool = False) -> RunReport:
    """Run a single configuration; errors are captured in the report."""
    name = algo.get("algorithm", "randomized")
    eps = float(algo.get("epsilon", 0.3))
    report = RunReport(instance=inst.name or "", algorithm=name,
                       solver=algo.get("solver", "") if name != "bruteforce" else "",
                       epsilon=eps if name != "bruteforce" else None, seed=seed)
    start = time.perf_counter()
    try:
        if name == "randomized":
            _, report = solve_randomized(
                inst, algo.get("solver", "greedy"), eps, algo.get("h"), seed,
                int(algo.get("attempts", DEFAULT_ATTEMPTS)), algo.get("solver_options"))
        elif name == "deterministic":
            _, report = solve_deterministic(inst, algo.get("solver", "greedy"), eps,
                                            algo.get("h"), seed, algo.get("solver_options"))
        elif name == "bruteforce":
            res = exact_opt(inst)
            report.value = res.optimum_value
            report.members = res.optimum_set
            report.feasible = is_feasible(inst, res.optimum_set)
            report.wall_ms = (time.perf_counter() - start) * 1e3
        else:
            raise InputError(f"unknown algorithm {name!r}; choose from {ALGORITHMS}")
        report.instance = inst.name or ""
        if compute_opt and inst.n <= EXACT_OPT_MAX_N:
            report.with_opt(_cached_opt(serialize_instance(inst)))
    except Exception as exc:  # the suite records failures and carries on
        if raise_errors:
            raise
        log.warning("run failed: %s / %s / seed %s: %s", inst.name, name, seed, exc)
        report.error = f"{type(exc).__name__}: {exc}"
        report.wall_ms = (time.perf_counter() - start) * 1e3
    return report


def _task(args):
    text, algo, seed, compute_opt = args
    return run_one(parse_instance(text), algo, seed, compute_opt)


def expand(config: dict, base_dir: Path | str = ".") -> list[tuple]:
    base_dir = Path(base_dir)
    seeds = [int(s) for s in config.get("seeds", [0])]
    compute_opt = bool(config.get("opt", True))
    tasks = []
    for entry in config.get("instances", []):
        inst = _instance_from_entry(entry, base_dir)
        text = serialize_instance(inst)
        for algo in config.get("algorithms", []):
            for seed in seeds:
                tasks.append((text, dict(algo), seed, compute_opt))
    return tasks


def run_suite(config: dict, base_dir: Path | str = ".", jobs: int = 1) -> list[RunReport]:
    """Execute every (instance, algorithm, seed) triple; rows keep config order."""
    tasks = expand(config, base_dir)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_task, tasks))
    return [_task(t) for t in tasks]


def write_csv(reports, fh, timing: bool = True) -> None:
    writer = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    for rep in reports:
        writer.writerow(rep.row(timing))


def csv_text(reports, timing: bool = True) -> str:
    buf = io.StringIO()
    write_csv(reports, buf, timing)
    return buf.getvalue()


def summarize(reports) -> list[dict]:
    """Mean and minimum ratio per (algorithm, solver) over rows with an exact optimum."""
    groups: dict[tuple, list[float]] = {}
    counts: dict[tuple, int] = {}
    for rep in reports:
        key = (rep.algorithm, rep.solver)
        counts[key] = counts.get(key, 0) + 1
        if rep.ratio is not None and not rep.error:
            groups.setdefault(key, []).append(rep.ratio)
    out = []
    for key in counts:
        ratios = groups.get(key, [])
        out.append({"algorithm": key[0], "solver": key[1], "rows": counts[key],
                    "mean_ratio": float(np.mean(ratios)) if ratios else None,
                    "min_ratio": float(np.min(ratios)) if ratios else None})
    return out
