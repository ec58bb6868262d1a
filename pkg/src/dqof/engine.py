"""Distributed decompose/solve/aggregate engine.

One instance keeps a global assignment and repeats, for a configured number
of iterations: draw random variable subsets, solve each induced sub-problem
with the QAOA simulator (optionally batching equal-width sub-problems through
the clustering path), then merge the sub-solutions bit by bit, accepting a
bit only when it strictly lowers the global energy. Several independent
instances run in parallel and the lowest-energy final assignment wins.

Determinism contract: every random draw comes from a stream keyed by
(master seed, role, instance, iteration, sub index), so reports are
byte-identical across reruns regardless of worker count.
"""
from __future__ import annotations

import hashlib
import json
import math
import multiprocessing as mp
import os
import time
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone

import numpy as np

from .cluster import combine, depth_width_report, solve_combined
from .hubo import (
    Adjacency,
    HuboProblem,
    SubHubo,
    approximation_ratio,
    as_bits,
    build_adjacency,
    evaluate,
    extract_sub_hubo,
    lex_key,
    random_bits,
)
from .qaoa import QaoaSettings, solve_sub_hubo
from .rng import TAG_DECOMPOSE, TAG_INIT, TAG_QAOA, stream


@dataclass(frozen=True)
class DqofConfig:
    """Run hyperparameters.

    num_subs defaults to ceil(n_vars / sub_size) * 2 so that one iteration's
    subsets cover the variable set in expectation with room to spare.
    cluster_size groups that many equal-width sub-solves into one combined
    circuit (1 disables clustering; a remainder group may be smaller).
    """

    n_vars: int
    sub_size: int
    num_subs: int | None = None
    instances: int = 1
    iterations: int = 50
    cluster_size: int = 1
    joint_cluster_optimization: bool = False
    qaoa: QaoaSettings = field(default_factory=QaoaSettings)
    seed: int = 0

    def resolved_num_subs(self) -> int:
        if self.num_subs is not None:
            return int(self.num_subs)
        return 2 * math.ceil(self.n_vars / self.sub_size)

    def validate(self, problem: HuboProblem) -> None:
        if self.n_vars != problem.n_vars:
            raise ValueError(
                f"config is for {self.n_vars} variables, problem has {problem.n_vars}"
            )
        if not 1 <= self.sub_size <= self.n_vars:
            raise ValueError("sub_size must be in [1, n_vars]")
        if self.resolved_num_subs() < 1:
            raise ValueError("num_subs must be >= 1")
        if self.instances < 1 or self.iterations < 1:
            raise ValueError("instances and iterations must be >= 1")
        if self.cluster_size < 1:
            raise ValueError("cluster_size must be >= 1")

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["num_subs"] = self.resolved_num_subs()
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_json_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


@dataclass
class InstanceState:
    """Final state of one independent instance."""

    instance: int
    assignment: np.ndarray
    energy: float
    trace: list[float]
    phase_seconds: dict[str, float]


@dataclass
class RunReport:
    """Structured result record for one engine run."""

    best_assignment: np.ndarray
    best_energy: float
    instance_energies: list[float]
    traces: list[list[float]]
    phase_seconds: dict[str, float]
    total_seconds: float
    config: dict
    config_hash: str
    n_vars: int
    reference_energy: float | None = None
    approximation_ratio: float | None = None
    relative_accuracy: float | None = None
    depth_width: dict | None = None
    created_at: str = ""

    def to_json_dict(self, stable: bool = False) -> dict:
        d = {
            "best_assignment": [int(b) for b in self.best_assignment],
            "best_energy": self.best_energy,
            "instance_energies": self.instance_energies,
            "traces": self.traces,
            "phase_seconds": self.phase_seconds,
            "total_seconds": self.total_seconds,
            "config": self.config,
            "config_hash": self.config_hash,
            "n_vars": self.n_vars,
            "reference_energy": self.reference_energy,
            "approximation_ratio": self.approximation_ratio,
            "relative_accuracy": self.relative_accuracy,
            "depth_width": self.depth_width,
            "created_at": self.created_at,
        }
        if stable:
            d["phase_seconds"] = {k: 0.0 for k in self.phase_seconds}
            d["total_seconds"] = 0.0
            d["created_at"] = ""
        return d

    def save(self, path: str, stable: bool = False) -> None:
        with open(path, "w", newline="\n") as fh:
            json.dump(self.to_json_dict(stable), fh, indent=2, sort_keys=True)
            fh.write("\n")


def decompose(problem: HuboProblem, sub_size: int, num_subs: int, rng: np.random.Generator) -> list[SubHubo]:
    """num_subs sub-problems over independently drawn size-n index subsets.

    Each subset holds n distinct variables drawn uniformly; different subsets
    may overlap each other.
    """
    if sub_size > problem.n_vars:
        raise ValueError(
            f"sub_size {sub_size} exceeds problem size {problem.n_vars}"
        )
    subs = []
    for _ in range(num_subs):
        subset = np.sort(rng.choice(problem.n_vars, size=sub_size, replace=False))
        subs.append(extract_sub_hubo(problem, subset))
    return subs


def aggregate(
    problem: HuboProblem,
    x,
    sub_solutions: list[tuple[SubHubo, np.ndarray]],
    adjacency: Adjacency | None = None,
) -> np.ndarray:
    """Bitwise energy-improving merge of sub-solutions into an assignment.

    Scans sub-solutions in order and their bits in local order; each proposed
    bit is applied to the continuously updated assignment only if it strictly
    lowers the global energy. The result never has higher energy than the
    input.
    """
    adj = adjacency if adjacency is not None else build_adjacency(problem)
    xf = as_bits(x, problem.n_vars).astype(np.float64)
    _aggregate_inplace(xf, sub_solutions, adj, problem.n_vars)
    return xf.astype(np.uint8)


def _aggregate_inplace(
    xf: np.ndarray,
    sub_solutions: list[tuple[SubHubo, np.ndarray]],
    adj: Adjacency,
    n_vars: int,
) -> float:
    """Apply the acceptance scan to xf in place; returns the energy change."""
    total = 0.0
    for sub, bits in sub_solutions:
        if sub.subset.size != np.asarray(bits).size:
            raise ValueError("sub-solution length does not match its subset")
        if np.any(sub.subset >= n_vars):
            raise ValueError("sub-solution references variables outside the problem")
        for local_j, global_i in enumerate(sub.subset):
            cand = float(bits[local_j])
            gi = int(global_i)
            if cand == xf[gi]:
                continue
            delta = adj.flip_delta(xf, gi)
            if delta < 0.0:
                xf[gi] = cand
                total += delta
    return total


def _solve_iteration(
    subs: list[SubHubo], config: DqofConfig, p: int, t: int
) -> list[tuple[SubHubo, np.ndarray]]:
    """Solve one iteration's sub-problems, grouped per cluster_size.

    Sub-solve RNG streams are keyed by the sub index alone, so grouping
    (cluster_size) has no effect on any individual result.
    """
    out: list[tuple[SubHubo, np.ndarray]] = []
    size = max(1, config.cluster_size)
    for start in range(0, len(subs), size):
        group = subs[start:start + size]
        rngs = [stream(config.seed, TAG_QAOA, p, t, start + i) for i in range(len(group))]
        if len(group) == 1:
            bits, _ = solve_sub_hubo(group[0], config.qaoa, rngs[0])
            out.append((group[0], bits))
        else:
            comb = combine(group, qubit_cap=config.qaoa.qubit_cap)
            solved = solve_combined(
                comb,
                config.qaoa,
                seeds=rngs,
                joint_optimization=config.joint_cluster_optimization,
            )
            out.extend((sub, bits) for sub, (bits, _) in zip(group, solved))
    return out


def run_instance(
    problem: HuboProblem,
    config: DqofConfig,
    p: int,
    adjacency: Adjacency | None = None,
) -> InstanceState:
    """One independent run: random start, then iterate decompose/solve/aggregate.

    The energy trace holds the initial energy followed by one entry per
    iteration; it is non-increasing because only strictly improving bits are
    accepted.
    """
    adj = adjacency if adjacency is not None else build_adjacency(problem)
    n = problem.n_vars
    xf = random_bits(n, stream(config.seed, TAG_INIT, p)).astype(np.float64)
    energy = evaluate(problem, xf.astype(np.uint8))
    trace = [energy]
    phase = {"decompose": 0.0, "solve": 0.0, "aggregate": 0.0}

    m = config.resolved_num_subs()
    for t in range(config.iterations):
        t0 = time.perf_counter()
        subs = decompose(problem, config.sub_size, m, stream(config.seed, TAG_DECOMPOSE, p, t))
        t1 = time.perf_counter()
        solutions = _solve_iteration(subs, config, p, t)
        t2 = time.perf_counter()
        energy += _aggregate_inplace(xf, solutions, adj, n)
        t3 = time.perf_counter()
        trace.append(energy)
        phase["decompose"] += t1 - t0
        phase["solve"] += t2 - t1
        phase["aggregate"] += t3 - t2

    bits = xf.astype(np.uint8)
    exact = evaluate(problem, bits)
    scale = max(1.0, abs(exact))
    if abs(exact - energy) > 1e-6 * scale:
        raise RuntimeError(
            f"accumulated energy {energy} drifted from exact energy {exact}"
        )
    return InstanceState(
        instance=p,
        assignment=bits,
        energy=energy,
        trace=trace,
        phase_seconds=phase,
    )


# Set in the parent before forking workers; children read it via fork COW, so
# the problem is never re-pickled per task.
_FORK_STATE: tuple | None = None


def _instance_entry(p: int) -> InstanceState:
    problem, config, adjacency = _FORK_STATE
    return run_instance(problem, config, p, adjacency)


def run_dqof(
    problem: HuboProblem,
    config: DqofConfig,
    workers: int = 1,
    reference_energy: float | None = None,
) -> RunReport:
    """Run all instances and select the lowest-energy final assignment.

    Instances run in up to `workers` forked processes; the worker count has
    no effect on results. Ties between instances break to the
    lexicographically smallest assignment.
    """
    global _FORK_STATE
    config.validate(problem)
    start = time.perf_counter()
    adjacency = build_adjacency(problem)
    P = config.instances

    n_workers = max(1, min(int(workers), P))
    if n_workers > 1 and "fork" in mp.get_all_start_methods():
        _FORK_STATE = (problem, config, adjacency)
        try:
            with mp.get_context("fork").Pool(processes=n_workers) as pool:
                states = pool.map(_instance_entry, range(P), chunksize=1)
        finally:
            _FORK_STATE = None
    else:
        states = [run_instance(problem, config, p, adjacency) for p in range(P)]

    best = min(states, key=lambda s: (s.energy, lex_key(s.assignment)))
    phase = {
        k: float(sum(s.phase_seconds[k] for s in states))
        for k in ("decompose", "solve", "aggregate")
    }

    depth_width = None
    if config.cluster_size > 1:
        preview = decompose(
            problem,
            config.sub_size,
            min(config.cluster_size, config.resolved_num_subs()),
            stream(config.seed, TAG_DECOMPOSE, 0, 0),
        )
        comb = combine(preview, qubit_cap=config.qaoa.qubit_cap)
        depth_width = depth_width_report(comb, config.qaoa.depth).to_json_dict()

    ratio = None
    if reference_energy is not None:
        ratio = approximation_ratio(best.energy, reference_energy)

    return RunReport(
        best_assignment=best.assignment,
        best_energy=best.energy,
        instance_energies=[s.energy for s in states],
        traces=[s.trace for s in states],
        phase_seconds=phase,
        total_seconds=time.perf_counter() - start,
        config=config.to_json_dict(),
        config_hash=config.config_hash(),
        n_vars=problem.n_vars,
        reference_energy=reference_energy,
        approximation_ratio=ratio,
        depth_width=depth_width,
        created_at=datetime.now(timezone.utc).isoformat(),
    )
