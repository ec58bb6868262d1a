"""Benchmark harness: seeded sweeps over sizes and solvers, flat CSV results.

Every (size, repetition) pair defines one instance; every configured solver
runs on it and produces one ResultRow plus one JSON report. References for
approximation ratios are exact (brute force) up to the enumeration cap and
otherwise the best energy available on the instance, including an optional
long reference annealer. Relative accuracy is min-max normalized across the
compared solvers per instance.

File contents are deterministic for a fixed seed base: rows are ordered by
(experiment, solver, size, seed), and stable-output mode zeroes the volatile
timing columns.
"""
from __future__ import annotations

import json
import math
import multiprocessing as mp
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .annealing import AnnealSchedule, default_schedule, simulated_annealing
from .engine import DqofConfig, run_dqof
from .hubo import (
    BRUTE_FORCE_CAP,
    HuboProblem,
    approximation_ratio,
    brute_force,
    evaluate,
    random_hubo,
    relative_accuracy,
)
from .milp import linearize_to_milp, solve_lp_with_external, write_lp
from .qaoa import QaoaSettings
from .rng import derived_seed

RESULT_COLUMNS = [
    "experiment",
    "solver",
    "n_vars",
    "sub_size",
    "num_subs",
    "instances",
    "iterations",
    "seed",
    "energy",
    "reference_energy",
    "approximation_ratio",
    "relative_accuracy",
    "decompose_s",
    "solve_s",
    "aggregate_s",
    "total_s",
    "config_hash",
]

_TIMING_COLUMNS = ("decompose_s", "solve_s", "aggregate_s", "total_s")

KNOWN_SOLVERS = ("dqof", "sa", "sa-quadratized", "brute", "export-lp")


@dataclass
class ResultRow:
    """One solver run; fields absent for a solver stay empty, never missing."""

    experiment: str
    solver: str
    n_vars: int
    seed: int
    sub_size: int | None = None
    num_subs: int | None = None
    instances: int | None = None
    iterations: int | None = None
    energy: float | None = None
    reference_energy: float | None = None
    approximation_ratio: float | None = None
    relative_accuracy: float | None = None
    decompose_s: float | None = None
    solve_s: float | None = None
    aggregate_s: float | None = None
    total_s: float | None = None
    config_hash: str = ""

    def to_csv_fields(self, stable: bool = False) -> list[str]:
        def fmt(name):
            v = getattr(self, name)
            if stable and name in _TIMING_COLUMNS:
                v = 0.0 if v is not None else None
            if v is None:
                return ""
            if isinstance(v, float):
                return "" if math.isnan(v) else repr(v)
            return str(v)

        return [fmt(name) for name in RESULT_COLUMNS]


def write_results_csv(rows: list[ResultRow], path: str, stable: bool = False) -> None:
    rows = sorted(rows, key=lambda r: (r.experiment, r.solver, r.n_vars, r.seed))
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(RESULT_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(row.to_csv_fields(stable)) + "\n")


def append_result_csv(row: ResultRow, path: str, stable: bool = False) -> None:
    exists = os.path.exists(path)
    with open(path, "a", newline="\n") as fh:
        if not exists:
            fh.write(",".join(RESULT_COLUMNS) + "\n")
        fh.write(",".join(row.to_csv_fields(stable)) + "\n")


def read_results_csv(path: str) -> list[ResultRow]:
    rows = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header != RESULT_COLUMNS:
            raise ValueError("results file header does not match the row schema")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) != len(RESULT_COLUMNS):
                raise ValueError("results row width does not match the header")
            raw = dict(zip(RESULT_COLUMNS, parts))
            rows.append(
                ResultRow(
                    experiment=raw["experiment"],
                    solver=raw["solver"],
                    n_vars=int(raw["n_vars"]),
                    seed=int(raw["seed"]),
                    sub_size=int(raw["sub_size"]) if raw["sub_size"] else None,
                    num_subs=int(raw["num_subs"]) if raw["num_subs"] else None,
                    instances=int(raw["instances"]) if raw["instances"] else None,
                    iterations=int(raw["iterations"]) if raw["iterations"] else None,
                    energy=float(raw["energy"]) if raw["energy"] else None,
                    reference_energy=float(raw["reference_energy"]) if raw["reference_energy"] else None,
                    approximation_ratio=float(raw["approximation_ratio"]) if raw["approximation_ratio"] else None,
                    relative_accuracy=float(raw["relative_accuracy"]) if raw["relative_accuracy"] else None,
                    decompose_s=float(raw["decompose_s"]) if raw["decompose_s"] else None,
                    solve_s=float(raw["solve_s"]) if raw["solve_s"] else None,
                    aggregate_s=float(raw["aggregate_s"]) if raw["aggregate_s"] else None,
                    total_s=float(raw["total_s"]) if raw["total_s"] else None,
                    config_hash=raw["config_hash"],
                )
            )
    return rows


# ---------------------------------------------------------------------------
# solver dispatch


def solver_config_value(cfg: dict, key: str, size: int, default):
    """Per-size override (key_by_size mapping) falling back to a flat value."""
    by_size = cfg.get(f"{key}_by_size")
    if by_size and str(size) in by_size:
        return by_size[str(size)]
    return cfg.get(key, default)


def run_solver(
    problem: HuboProblem,
    solver_cfg: dict,
    seed: int,
    workers: int = 1,
    experiment: str = "adhoc",
    outdir: str | None = None,
    rep_label: str = "",
) -> tuple[ResultRow, dict]:
    """Run one solver on one instance; returns its row and JSON-able report."""
    name = solver_cfg.get("name")
    if name not in KNOWN_SOLVERS:
        raise ValueError(f"unknown solver {name!r}; known: {', '.join(KNOWN_SOLVERS)}")
    size = problem.n_vars
    row = ResultRow(experiment=experiment, solver=name, n_vars=size, seed=seed)
    report: dict = {"experiment": experiment, "solver": name, "n_vars": size, "seed": seed}
    t0 = time.perf_counter()

    if name == "dqof":
        qaoa = QaoaSettings(
            depth=int(solver_cfg.get("depth", 2)),
            shots=int(solver_cfg.get("shots", 10_000)),
            budget=int(solver_cfg.get("budget", 200)),
            shot_objective=bool(solver_cfg.get("shot_objective", False)),
        )
        config = DqofConfig(
            n_vars=size,
            sub_size=int(solver_cfg.get("sub_size", min(8, size))),
            num_subs=solver_cfg.get("num_subs"),
            instances=int(solver_cfg.get("instances", 4)),
            iterations=int(solver_cfg.get("iterations", 50)),
            cluster_size=int(solver_cfg.get("cluster_size", 1)),
            joint_cluster_optimization=bool(solver_cfg.get("joint_cluster_optimization", False)),
            qaoa=qaoa,
            seed=seed,
        )
        result = run_dqof(problem, config, workers=workers)
        row.energy = result.best_energy
        row.sub_size = config.sub_size
        row.num_subs = config.resolved_num_subs()
        row.instances = config.instances
        row.iterations = config.iterations
        row.decompose_s = result.phase_seconds["decompose"]
        row.solve_s = result.phase_seconds["solve"]
        row.aggregate_s = result.phase_seconds["aggregate"]
        row.config_hash = result.config_hash
        report.update(result.to_json_dict())

    elif name in ("sa", "sa-quadratized"):
        sweeps = int(solver_config_value(solver_cfg, "sweeps", size, 2000))
        target = problem
        if name == "sa-quadratized":
            from .quadratization import quadratize

            lam = float(solver_cfg.get("penalty", 5.0))
            target = quadratize(problem, lam)
            report["penalty"] = lam
            report["n_total"] = target.n_total
        if "t_initial" in solver_cfg and "t_final" in solver_cfg:
            schedule = AnnealSchedule(
                t_initial=float(solver_cfg["t_initial"]),
                t_final=float(solver_cfg["t_final"]),
                sweeps=sweeps,
                moves_per_sweep=solver_cfg.get("moves_per_sweep"),
            )
        else:
            schedule = replace(default_schedule(target), sweeps=sweeps)
        bits, energy = simulated_annealing(target, schedule, seed=seed)
        if name == "sa-quadratized":
            report["qubo_energy"] = energy
            bits = target.project(bits)
            energy = evaluate(problem, bits)  # score on the original landscape
        row.energy = energy
        row.iterations = sweeps
        report["assignment"] = [int(b) for b in bits]
        report["energy"] = energy
        report["sweeps"] = sweeps

    elif name == "brute":
        cap = int(solver_cfg.get("cap", BRUTE_FORCE_CAP))
        bits, energy = brute_force(problem, cap)
        row.energy = energy
        report["assignment"] = [int(b) for b in bits]
        report["energy"] = energy

    elif name == "export-lp":
        model = linearize_to_milp(problem)
        base = f"{experiment}_N{size}{rep_label}" if rep_label else f"{experiment}_N{size}"
        lp_path = os.path.join(outdir or ".", base + ".lp")
        write_lp(model, lp_path)
        report["lp_path"] = lp_path
        report["num_variables"] = model.num_variables
        report["num_constraints"] = model.num_constraints
        objective = solve_lp_with_external(lp_path)
        if objective is None:
            report["status"] = "exported only"
        else:
            report["status"] = "solved externally"
            row.energy = objective
            report["energy"] = objective

    row.total_s = time.perf_counter() - t0
    report["total_s"] = row.total_s
    return row, report


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class BenchSpec:
    """A sweep: sizes x repetitions x solvers, plus reference policy."""

    experiment: str
    sizes: list[int]
    solvers: list[dict]
    reps: int = 3
    density: float = 1.0
    seed_base: int = 7
    reference_sa_sweeps: int = 4000
    kind: str = "solve"  # or "depth-width"

    def validate(self) -> None:
        if self.kind not in ("solve", "depth-width"):
            raise ValueError(f"unknown bench kind {self.kind!r}")
        if self.kind == "depth-width":
            return
        if not self.sizes or self.reps < 1:
            raise ValueError("bench needs at least one size and one repetition")
        for cfg in self.solvers:
            name = cfg.get("name")
            if name not in KNOWN_SOLVERS:
                raise ValueError(f"unknown solver {name!r} in bench spec")
            if name == "brute":
                cap = int(cfg.get("cap", BRUTE_FORCE_CAP))
                over = [s for s in self.sizes if s > cap]
                if over:
                    raise ValueError(
                        f"brute solver capped at {cap} variables; sizes {over} exceed it"
                    )
            if name == "dqof":
                sub = cfg.get("sub_size")
                if sub is not None and any(int(sub) > s for s in self.sizes):
                    raise ValueError("dqof sub_size exceeds a swept problem size")

    @classmethod
    def from_json_file(cls, path: str) -> "BenchSpec":
        with open(path) as fh:
            doc = json.load(fh)
        try:
            return cls(
                experiment=doc["experiment"],
                sizes=[int(s) for s in doc.get("sizes", [])],
                solvers=list(doc.get("solvers", [])),
                reps=int(doc.get("reps", 3)),
                density=float(doc.get("density", 1.0)),
                seed_base=int(doc.get("seed_base", 7)),
                reference_sa_sweeps=int(doc.get("reference_sa_sweeps", 4000)),
                kind=doc.get("kind", "solve"),
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed bench spec {path}: {exc}") from exc


def preset(name: str) -> BenchSpec:
    """Built-in sweeps; each reproduces one of the package's headline tables."""
    if name == "fig1b":
        # engine quality and runtime as problem size grows, ten instances each
        return BenchSpec(
            experiment="fig1b",
            sizes=[8, 16, 24, 32, 40],
            reps=3,
            solvers=[{"name": "dqof", "sub_size": 8, "instances": 10, "iterations": 50}],
        )
    if name == "fig3":
        # solver comparison: native engine vs annealing on the reduced and
        # native landscapes; sweep counts trimmed per size to keep runtimes sane
        return BenchSpec(
            experiment="fig3",
            sizes=[20, 100, 500],
            reps=1,
            solvers=[
                {"name": "dqof", "sub_size": 8, "instances": 4, "iterations": 50},
                {
                    "name": "sa-quadratized",
                    "penalty": 5.0,
                    "sweeps_by_size": {"20": 1000, "100": 200, "500": 30},
                },
                {"name": "sa", "sweeps_by_size": {"20": 2000, "100": 1000, "500": 300}},
            ],
        )
    if name == "fig1d":
        return BenchSpec(
            experiment="fig1d", sizes=[], solvers=[], reps=1, kind="depth-width"
        )
    raise ValueError(f"unknown preset {name!r}; known: fig1b, fig3, fig1d")


def _instance_seed(spec: BenchSpec, size: int, rep: int) -> int:
    return derived_seed(spec.seed_base, size, rep)


_BENCH_STATE: tuple | None = None


def _bench_task(task: tuple[int, int, int]) -> tuple[tuple[int, int, int], ResultRow | None, dict]:
    size, rep, job_index = task
    spec, outdir, solve_workers = _BENCH_STATE
    seed = _instance_seed(spec, size, rep)
    problem = random_hubo(size, density=spec.density, seed=seed)
    if job_index == -1:  # reference job
        if size <= BRUTE_FORCE_CAP:
            _, energy = brute_force(problem)
        elif spec.reference_sa_sweeps > 0:
            sched = replace(default_schedule(problem), sweeps=spec.reference_sa_sweeps)
            _, energy = simulated_annealing(problem, sched, seed=derived_seed(seed, 1))
        else:
            return task, None, {}
        return task, None, {"reference_energy": energy}
    cfg = spec.solvers[job_index]
    row, report = run_solver(
        problem,
        cfg,
        seed=seed,
        workers=solve_workers,
        experiment=spec.experiment,
        outdir=outdir,
        rep_label=f"_rep{rep}",
    )
    return task, row, report


def run_bench(spec: BenchSpec, outdir: str, workers: int = 1, stable: bool = False) -> dict:
    """Execute a sweep; writes results.csv, comparison.csv and one report per run.

    Tasks are scheduled concurrently up to the worker budget but files are
    ordered by (experiment, solver, size, seed), never by completion time.
    """
    spec.validate()
    os.makedirs(outdir, exist_ok=True)
    if spec.kind == "depth-width":
        return _run_depth_width(spec, outdir)

    tasks = [
        (size, rep, job)
        for size in spec.sizes
        for rep in range(spec.reps)
        for job in list(range(len(spec.solvers))) + [-1]
    ]

    global _BENCH_STATE
    results: list[tuple[tuple[int, int, int], ResultRow | None, dict]] = []
    if workers > 1 and "fork" in mp.get_all_start_methods():
        _BENCH_STATE = (spec, outdir, 1)
        try:
            with mp.get_context("fork").Pool(processes=int(workers)) as pool:
                results = pool.map(_bench_task, tasks, chunksize=1)
        finally:
            _BENCH_STATE = None
    else:
        _BENCH_STATE = (spec, outdir, workers)
        try:
            results = [_bench_task(t) for t in tasks]
        finally:
            _BENCH_STATE = None

    references: dict[tuple[int, int], float] = {}
    rows: list[ResultRow] = []
    reports: list[tuple[tuple[int, int, int], dict]] = []
    for (size, rep, job), row, payload in results:
        if job == -1:
            if payload:
                references[(size, rep)] = payload["reference_energy"]
        else:
            rows.append(row)
            reports.append(((size, rep, job), payload))

    # reference = best available: exact minimum under the cap, otherwise the
    # consensus minimum of the long annealer and every compared solver
    for (size, rep), ref in list(references.items()):
        if size > BRUTE_FORCE_CAP:
            seen = [
                r.energy
                for r in rows
                if r.n_vars == size and r.seed == _instance_seed(spec, size, rep) and r.energy is not None
            ]
            references[(size, rep)] = min([ref] + seen)

    for row in rows:
        for (size, rep), ref in references.items():
            if row.n_vars == size and row.seed == _instance_seed(spec, size, rep):
                if row.energy is not None:
                    row.reference_energy = ref
                    row.approximation_ratio = approximation_ratio(row.energy, ref)

    fill_relative_accuracy(rows)

    for (size, rep, job), payload in reports:
        solver = spec.solvers[job]["name"]
        path = os.path.join(outdir, f"{spec.experiment}_{solver}_N{size}_rep{rep}.json")
        _write_report(payload, path, stable)

    results_path = os.path.join(outdir, "results.csv")
    write_results_csv(rows, results_path, stable)
    comparison_path = os.path.join(outdir, "comparison.csv")
    write_comparison_csv(compare(rows), comparison_path)
    return {"results": results_path, "comparison": comparison_path, "rows": rows}


def _write_report(payload: dict, path: str, stable: bool) -> None:
    doc = dict(payload)
    if stable:
        for key in ("total_s", "total_seconds"):
            if key in doc:
                doc[key] = 0.0
        if "phase_seconds" in doc:
            doc["phase_seconds"] = {k: 0.0 for k in doc["phase_seconds"]}
        if "created_at" in doc:
            doc["created_at"] = ""
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run_depth_width(spec: BenchSpec, outdir: str) -> dict:
    """Width/depth cost table for cluster counts 1..8 at block width 4."""
    from .cluster import combine, depth_width_report
    from .hubo import extract_sub_hubo

    block, max_m, depth = 4, 8, 2
    problem = random_hubo(block * max_m, density=1.0, seed=spec.seed_base)
    path = os.path.join(outdir, "depth_width.csv")
    with open(path, "w", newline="\n") as fh:
        fh.write(
            "experiment,num_blocks,block_size,depth,width,depth_proxy,"
            "dense_counterfactual_depth_proxy,terms_order1,terms_order2,terms_order3\n"
        )
        for m in range(1, max_m + 1):
            subs = [
                extract_sub_hubo(problem, np.arange(k * block, (k + 1) * block))
                for k in range(m)
            ]
            rep = depth_width_report(combine(subs), depth)
            fh.write(
                f"{spec.experiment},{m},{block},{depth},{rep.width},{rep.depth_proxy},"
                f"{rep.dense_counterfactual_depth_proxy},{rep.gate_counts[1]},"
                f"{rep.gate_counts[2]},{rep.gate_counts[3]}\n"
            )
    return {"results": path, "comparison": None, "rows": []}


# ---------------------------------------------------------------------------
# cross-solver comparison


def fill_relative_accuracy(rows: list[ResultRow]) -> None:
    """Min-max normalize energies per instance across its compared solvers."""
    groups: dict[tuple[str, int, int], list[ResultRow]] = {}
    for row in rows:
        if row.energy is not None:
            groups.setdefault((row.experiment, row.n_vars, row.seed), []).append(row)
    for group in groups.values():
        energies = [r.energy for r in group]
        best, worst = min(energies), max(energies)
        for r in group:
            r.relative_accuracy = relative_accuracy(r.energy, best, worst)


def compare(rows: list[ResultRow]) -> list[dict]:
    """Median and IQR of relative accuracy and runtime per (solver, size)."""
    filled = [r for r in rows if r.relative_accuracy is not None]
    if not filled:
        return []
    instance_sets: dict[tuple[str, str], set] = {}
    for r in filled:
        instance_sets.setdefault((r.experiment, r.solver), set()).add((r.n_vars, r.seed))
    per_experiment: dict[str, set] = {}
    for (exp, _), instances in instance_sets.items():
        if exp in per_experiment and per_experiment[exp] != instances:
            raise ValueError("compared solvers ran on mismatched instance sets")
        per_experiment.setdefault(exp, instances)

    out = []
    keys = sorted({(r.experiment, r.solver, r.n_vars) for r in filled})
    for exp, solver, size in keys:
        sel = [
            r for r in filled
            if (r.experiment, r.solver, r.n_vars) == (exp, solver, size)
        ]
        acc = np.array([r.relative_accuracy for r in sel])
        times = np.array([r.total_s for r in sel if r.total_s is not None])
        out.append(
            {
                "experiment": exp,
                "solver": solver,
                "n_vars": size,
                "runs": len(sel),
                "median_relative_accuracy": float(np.median(acc)),
                "iqr_relative_accuracy": float(
                    np.percentile(acc, 75) - np.percentile(acc, 25)
                ),
                "median_total_s": float(np.median(times)) if times.size else None,
            }
        )
    return out


def write_comparison_csv(comp: list[dict], path: str) -> None:
    cols = [
        "experiment",
        "solver",
        "n_vars",
        "runs",
        "median_relative_accuracy",
        "iqr_relative_accuracy",
        "median_total_s",
    ]
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for row in comp:
            fh.write(
                ",".join("" if row[c] is None else (repr(row[c]) if isinstance(row[c], float) else str(row[c])) for c in cols)
                + "\n"
            )
