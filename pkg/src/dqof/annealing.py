"""Single-flip Metropolis annealer for binary polynomials.

Works on higher-order problems natively (no reduction) and, through
QuboProblem.as_hubo(), on quadratized instances. Moves cost O(degree of the
flipped variable) via the adjacency structure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hubo import Adjacency, HuboProblem, build_adjacency, evaluate, random_bits
from .rng import as_generator


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric cooling from t_initial down to t_final over `sweeps` sweeps.

    One sweep proposes moves_per_sweep single-bit flips (defaults to the
    variable count).
    """

    t_initial: float
    t_final: float
    sweeps: int
    moves_per_sweep: int | None = None

    def __post_init__(self):
        if not self.t_initial > self.t_final > 0:
            raise ValueError("need t_initial > t_final > 0")
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")

    @property
    def cooling_factor(self) -> float:
        if self.sweeps == 1:
            return 1.0
        return (self.t_final / self.t_initial) ** (1.0 / (self.sweeps - 1))


def default_schedule(problem, sweeps: int = 2000) -> AnnealSchedule:
    """Artifact default: start at 10x the largest coefficient magnitude."""
    hubo = problem.as_hubo() if hasattr(problem, "as_hubo") else problem
    t0 = 10.0 * hubo.max_abs_coeff()
    if t0 <= 0:
        t0 = 1.0
    return AnnealSchedule(t_initial=t0, t_final=1e-3, sweeps=sweeps)


def simulated_annealing(
    problem,
    schedule: AnnealSchedule | None = None,
    seed=0,
    adjacency: Adjacency | None = None,
    return_trace: bool = False,
):
    """Best-ever assignment and its exact energy; deterministic per seed.

    Accepts a HuboProblem or anything exposing as_hubo() (e.g. a quadratized
    QuboProblem). Acceptance rule: always take strictly improving flips,
    otherwise accept with probability exp(-delta / T). With return_trace the
    per-sweep best-ever energies come back as a third element.
    """
    hubo: HuboProblem = problem.as_hubo() if hasattr(problem, "as_hubo") else problem
    sched = schedule if schedule is not None else default_schedule(hubo)
    rng = as_generator(seed)
    adj = adjacency if adjacency is not None else build_adjacency(hubo)
    n = hubo.n_vars
    moves = sched.moves_per_sweep if sched.moves_per_sweep is not None else n

    xf = random_bits(n, rng).astype(np.float64)
    energy = evaluate(hubo, xf.astype(np.uint8))
    best_x = xf.copy()
    best_e = energy
    trace: list[float] = []

    temp = sched.t_initial
    cool = sched.cooling_factor
    for _ in range(sched.sweeps):
        sites = rng.integers(0, n, size=moves)
        uniforms = rng.random(moves)
        for i, u in zip(sites, uniforms):
            delta = adj.flip_delta(xf, i)
            if delta < 0.0 or u < math.exp(-delta / temp):
                xf[i] = 1.0 - xf[i]
                energy += delta
                if energy < best_e:
                    best_e = energy
                    best_x = xf.copy()
        if return_trace:
            trace.append(best_e)
        temp *= cool
    bits = best_x.astype(np.uint8)
    final = evaluate(hubo, bits)
    if return_trace:
        return bits, final, trace
    return bits, final
