"""Exact statevector simulation of depth-l QAOA for diagonal cost operators.

The cost operator of a binary polynomial is diagonal in the computational
basis, so a circuit layer is one elementwise phase multiplication followed by
a product of single-qubit X rotations. Basis index convention: bit j of the
index is the value of variable j.

All public operations are pure; many circuits can run concurrently without
shared state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .hubo import (
    CapExceededError,
    HuboProblem,
    SubHubo,
    cost_table,
    evaluate,
    index_to_bits,
)
from .rng import as_generator

SIM_QUBIT_CAP = 30
# Refuse statevectors whose amplitudes alone would exceed this many bytes.
MEMORY_GUARD_BYTES = 2 << 30


@dataclass(frozen=True)
class QaoaParams:
    """Per-layer phase angles (gammas) and mixer angles (betas), radians."""

    gammas: np.ndarray
    betas: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gammas, dtype=np.float64)
        b = np.asarray(self.betas, dtype=np.float64)
        if g.shape != b.shape or g.ndim != 1:
            raise ValueError("gammas and betas must be 1-D and of equal length")
        if g.size and not (np.all(np.isfinite(g)) and np.all(np.isfinite(b))):
            raise ValueError("angles must be finite")
        object.__setattr__(self, "gammas", g)
        object.__setattr__(self, "betas", b)

    @property
    def depth(self) -> int:
        return int(self.gammas.size)

    @classmethod
    def constant(cls, depth: int, gamma: float, beta: float) -> "QaoaParams":
        return cls(np.full(depth, gamma), np.full(depth, beta))


@dataclass(frozen=True)
class QaoaSettings:
    """Execution settings.

    Defaults follow the standard two-layer configuration: depth 2, 10,000
    shots, a 200-evaluation optimizer budget, and initial angles
    gamma = pi/4, beta = pi/8. The optimizer minimizes the exact expectation;
    set shot_objective to optimize a sampled estimate instead.
    """

    depth: int = 2
    shots: int = 10_000
    budget: int = 200
    gamma_init: float = math.pi / 4
    beta_init: float = math.pi / 8
    shot_objective: bool = False
    qubit_cap: int = SIM_QUBIT_CAP

    def initial_params(self) -> QaoaParams:
        return QaoaParams.constant(self.depth, self.gamma_init, self.beta_init)


@dataclass(frozen=True)
class SampleHistogram:
    """Shot counts per sampled basis index."""

    counts: dict[int, int]
    shots: int
    n_qubits: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise ValueError("histogram counts must sum to the shot total")


def _check_width(n: int, cap: int = SIM_QUBIT_CAP) -> None:
    if n > cap:
        raise CapExceededError(f"{n} qubits exceeds the simulator cap of {cap}")
    if (16 << n) > MEMORY_GUARD_BYTES:
        raise CapExceededError(
            f"a {n}-qubit statevector needs {16 << n} bytes, over the memory guard"
        )


def _qubit_count(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim <= 0 or (1 << n) != dim:
        raise ValueError(f"state dimension {dim} is not a power of two")
    return n


def build_cost_diagonal(sub, cap: int = SIM_QUBIT_CAP) -> np.ndarray:
    """Basis energies of a sub-problem: entry b is the energy of bits(b).

    Accepts a SubHubo or a bare HuboProblem. Built term by term through
    strided updates, not by 2^n full evaluations.
    """
    problem = sub.problem if isinstance(sub, SubHubo) else sub
    _check_width(problem.n_vars, cap)
    return cost_table(problem, cap=cap)


def uniform_state(n: int) -> np.ndarray:
    dim = 1 << n
    return np.full(dim, 1.0 / math.sqrt(dim), dtype=np.complex128)


def apply_phase(state: np.ndarray, diag: np.ndarray, gamma: float) -> np.ndarray:
    """Multiply amplitude b by exp(-i * gamma * diag[b]). Norm preserving."""
    if state.shape != diag.shape:
        raise ValueError(f"state dim {state.shape} != diagonal dim {diag.shape}")
    return state * np.exp(-1j * gamma * diag)


def _mix_inplace(state: np.ndarray, beta: float, n: int) -> None:
    c = math.cos(beta)
    s = math.sin(beta)
    for q in range(n):
        m = state.reshape(-1, 2, 1 << q)
        a0 = m[:, 0, :].copy()
        a1 = m[:, 1, :]
        m[:, 0, :] = c * a0 - 1j * s * a1
        m[:, 1, :] = c * a1 - 1j * s * a0


def apply_mixer(state: np.ndarray, beta: float) -> np.ndarray:
    """Apply exp(-i * beta * X) to every qubit. Norm preserving."""
    out = np.array(state, dtype=np.complex128, copy=True)
    _mix_inplace(out, beta, _qubit_count(out.size))
    return out


def run_circuit(diag: np.ndarray, params: QaoaParams) -> np.ndarray:
    """Variational state after alternating phase and mixer layers on |+...+>."""
    n = _qubit_count(diag.size)
    state = uniform_state(n)
    for gamma, beta in zip(params.gammas, params.betas):
        state *= np.exp(-1j * gamma * diag)
        _mix_inplace(state, beta, n)
    return state


def expectation(state: np.ndarray, diag: np.ndarray) -> float:
    """Mean basis energy of the state: sum of |amplitude|^2 * energy."""
    if state.shape != diag.shape:
        raise ValueError(f"state dim {state.shape} != diagonal dim {diag.shape}")
    p = state.real * state.real + state.imag * state.imag
    return float(np.sum(p * diag))


def probabilities(state: np.ndarray) -> np.ndarray:
    p = state.real * state.real + state.imag * state.imag
    total = p.sum()
    if total <= 0:
        raise ValueError("state has zero norm")
    return p / total


def sample(state: np.ndarray, shots: int, seed) -> SampleHistogram:
    """Multinomial draw from the state's basis distribution."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = as_generator(seed)
    p = probabilities(state)
    counts = rng.multinomial(shots, p)
    nz = np.flatnonzero(counts)
    return SampleHistogram(
        counts={int(b): int(counts[b]) for b in nz},
        shots=int(shots),
        n_qubits=_qubit_count(state.size),
    )


class _BudgetExhausted(Exception):
    pass


# Evaluations granted to the initial point before the seeded restart kicks in
# (half the standard 200-evaluation budget).
_FIRST_STAGE_EVALS = 100


def cost_scale(diag: np.ndarray) -> float:
    """Half-span-around-mean of the diagonal; 1.0 for constant diagonals.

    Phase angles are only meaningful relative to the energy scale of the cost
    operator, so the optimizer searches angles against diag / cost_scale(diag)
    and standard initial angles like pi/4 refer to that normalized operator.
    """
    s = float(np.max(np.abs(diag - diag.mean()))) if diag.size else 0.0
    return s if s > 0 else 1.0


def optimize_params(
    diag: np.ndarray,
    depth: int = 2,
    init: QaoaParams | None = None,
    budget: int = 200,
    shot_objective: bool = False,
    shots: int = 10_000,
    rng=None,
) -> tuple[QaoaParams, float]:
    """Derivative-free angle search (COBYLA) under an evaluation budget.

    `init` gammas are taken in normalized-operator units (see cost_scale);
    betas are scale-free. The returned gammas are mapped back to the raw
    frame, so feeding them to run_circuit(diag, ...) reproduces the optimized
    state. Returns the best parameters seen and their raw-frame expectation,
    so the result is never worse than the initial point and is non-increasing
    in budget. Deterministic given init (and seed, in shot_objective mode).
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if init is None:
        init = QaoaSettings(depth=depth).initial_params()
    if init.depth != depth:
        raise ValueError(f"init has depth {init.depth}, expected {depth}")
    gen = as_generator(rng if rng is not None else 0)
    scale = cost_scale(diag)
    norm_diag = diag / scale

    evals = 0
    best_val = math.inf
    best_theta = np.concatenate([init.gammas, init.betas])

    def objective(theta: np.ndarray) -> float:
        nonlocal evals, best_val, best_theta
        if evals >= budget:
            raise _BudgetExhausted
        evals += 1
        params = QaoaParams(theta[:depth], theta[depth:])
        state = run_circuit(norm_diag, params)
        if shot_objective:
            hist = sample(state, shots, gen)
            value = sum(c * norm_diag[b] for b, c in hist.counts.items()) / hist.shots
        else:
            value = expectation(state, norm_diag)
        if value < best_val:
            best_val = value
            best_theta = theta.copy()
        return value

    # Two-stage search: the standard initial point gets the first stage, then
    # one seeded restart elsewhere in angle space takes whatever budget is
    # left, decorrelating per-task parameter trajectories. The stage boundary
    # is absolute (not budget-relative) so a smaller budget evaluates a prefix
    # of a larger budget's sequence and the best-seen record is monotone.
    try:
        minimize(
            objective,
            np.concatenate([init.gammas, init.betas]),
            method="COBYLA",
            options={"maxiter": min(int(budget), _FIRST_STAGE_EVALS)},
        )
        if evals < budget:
            restart = np.concatenate(
                [gen.uniform(0.1, 1.5, depth), gen.uniform(0.05, 0.8, depth)]
            )
            minimize(
                objective,
                restart,
                method="COBYLA",
                options={"maxiter": int(budget) - evals},
            )
    except _BudgetExhausted:
        pass
    # gamma on diag/s equals gamma/s on diag; expectation rescales linearly
    return QaoaParams(best_theta[:depth] / scale, best_theta[depth:]), float(best_val * scale)


def select_bitstring(hist: SampleHistogram, diag: np.ndarray) -> int:
    """Most frequent sampled index; ties by lower energy, then lexicographic."""
    best_count = max(hist.counts.values())
    candidates = [b for b, c in hist.counts.items() if c == best_count]
    n = hist.n_qubits
    return min(candidates, key=lambda b: (float(diag[b]), tuple(index_to_bits(b, n))))


def solve_sub_hubo(sub: SubHubo, settings: QaoaSettings = QaoaSettings(), seed=0) -> tuple[np.ndarray, float]:
    """Optimize, sample, and return (local assignment, its exact energy)."""
    rng = as_generator(seed)
    diag = build_cost_diagonal(sub, settings.qubit_cap)
    params, _ = optimize_params(
        diag,
        depth=settings.depth,
        init=settings.initial_params(),
        budget=settings.budget,
        shot_objective=settings.shot_objective,
        shots=settings.shots,
        rng=rng,
    )
    state = run_circuit(diag, params)
    hist = sample(state, settings.shots, rng)
    b = select_bitstring(hist, diag)
    bits = index_to_bits(b, sub.size)
    return bits, evaluate(sub.problem, bits)
