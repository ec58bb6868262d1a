"""Self-contained invariant suite behind the `verify` CLI subcommand.

Each check re-derives an expected value through an independent route
(exhaustive enumeration, dense linear algebra, direct definitions) and
compares the production path against it. These are quick smoke versions of
the full pytest properties.
"""
from __future__ import annotations

import numpy as np

from . import cluster, fm, milp, qaoa
from .annealing import AnnealSchedule, simulated_annealing
from .engine import aggregate, decompose
from .hubo import (
    brute_force,
    build_adjacency,
    evaluate,
    evaluate_flip_delta,
    extract_sub_hubo,
    index_to_bits,
    random_bits,
    random_hubo,
)
from .quadratization import penalty_soundness_check, quadratize, sufficient_penalty
from .rng import as_generator
from .serialize import problem_to_text


def _check_flip_consistency(rng) -> str | None:
    for _ in range(50):
        p = random_hubo(int(rng.integers(2, 10)), seed=int(rng.integers(1 << 30)))
        adj = build_adjacency(p)
        x = random_bits(p.n_vars, rng)
        i = int(rng.integers(p.n_vars))
        flipped = x.copy()
        flipped[i] ^= 1
        direct = evaluate(p, flipped) - evaluate(p, x)
        delta = evaluate_flip_delta(p, x, i, adj)
        if abs(direct - delta) > 1e-12 * max(1.0, abs(direct)):
            return f"flip delta mismatch: {direct} vs {delta}"
    return None


def _check_extraction(rng) -> str | None:
    for _ in range(20):
        p = random_hubo(10, seed=int(rng.integers(1 << 30)))
        size = int(rng.integers(1, 11))
        subset = np.sort(rng.choice(10, size=size, replace=False))
        sub = extract_sub_hubo(p, subset)
        x_local = random_bits(size, rng)
        x_global = np.zeros(10, dtype=np.uint8)
        x_global[subset] = x_local
        members = set(subset.tolist())
        inside = 0.0
        terms = [((i,), c) for i, c in p.linear.items()]
        terms += list(p.quadratic.items()) + list(p.cubic.items())
        for idx, c in terms:
            if all(v in members for v in idx):
                inside += c * float(np.prod(x_global[list(idx)]))
        if abs(evaluate(sub.problem, x_local) - inside) > 1e-12:
            return "extraction sum mismatch"
    return None


def _check_brute_lower_bound(rng) -> str | None:
    p = random_hubo(8, seed=11)
    _, e_opt = brute_force(p)
    for _ in range(100):
        x = random_bits(8, rng)
        if evaluate(p, x) < e_opt - 1e-12:
            return "sampled energy below the exhaustive minimum"
    return None


def _check_generator_determinism(rng) -> str | None:
    a = problem_to_text(random_hubo(7, seed=123))
    b = problem_to_text(random_hubo(7, seed=123))
    return None if a == b else "same seed produced different serializations"


def _check_simulator(rng) -> str | None:
    p = random_hubo(3, seed=5)
    diag = qaoa.build_cost_diagonal(p)
    params = qaoa.QaoaParams(np.array([0.7, 0.3]), np.array([0.2, 0.9]))
    state = qaoa.run_circuit(diag, params)
    if abs(np.sum(np.abs(state) ** 2) - 1.0) > 1e-9:
        return "norm not preserved"
    zero = qaoa.run_circuit(diag, qaoa.QaoaParams(np.zeros(1), np.zeros(1)))
    if abs(qaoa.expectation(zero, diag) - float(np.mean(diag))) > 1e-12:
        return "zero-parameter expectation differs from the diagonal mean"
    return None


def _check_blockwise(rng) -> str | None:
    subs = [extract_sub_hubo(random_hubo(3, seed=s), np.arange(3)) for s in (1, 2)]
    comb = cluster.combine(subs)
    params = [
        qaoa.QaoaParams(np.array([0.4, 0.1]), np.array([0.3, 0.2])),
        qaoa.QaoaParams(np.array([0.8, 0.5]), np.array([0.1, 0.6])),
    ]
    states = cluster.simulate_combined_blockwise(comb, params)
    dense = cluster.dense_joint_state(comb, params)
    product = np.kron(states[1], states[0])  # block 0 owns the low bits
    if np.max(np.abs(np.abs(product) ** 2 - np.abs(dense) ** 2)) > 1e-10:
        return "blockwise and dense joint probabilities differ"
    exp_sum = cluster.joint_expectation(states, comb)
    exp_dense = qaoa.expectation(dense, cluster.dense_joint_diagonal(comb))
    if abs(exp_sum - exp_dense) > 1e-10:
        return "joint expectation differs from dense oracle"
    return None


def _check_aggregation(rng) -> str | None:
    for _ in range(30):
        p = random_hubo(9, seed=int(rng.integers(1 << 30)))
        x = random_bits(9, rng)
        subs = decompose(p, 4, 3, rng)
        sols = [(s, random_bits(4, rng)) for s in subs]
        merged = aggregate(p, x, sols)
        if evaluate(p, merged) > evaluate(p, x) + 1e-12:
            return "aggregation increased the energy"
    return None


def _check_quadratization(rng) -> str | None:
    p = random_hubo(7, seed=21)
    q = quadratize(p, sufficient_penalty(p))
    rep = penalty_soundness_check(p, q)
    if not rep.minima_agree:
        return "minima disagree at a provably sufficient penalty"
    x = random_bits(7, rng)
    w = [int(x[i]) * int(x[j]) for _, (i, j) in q.aux_defs]
    full = np.concatenate([x, np.array(w, dtype=np.uint8)])
    if abs(evaluate(q.problem, full) - evaluate(p, x)) > 1e-9:
        return "consistent auxiliaries do not reproduce the original energy"
    return None


def _check_annealer(rng) -> str | None:
    p = random_hubo(8, seed=3)
    bits, energy = simulated_annealing(
        p, AnnealSchedule(t_initial=5.0, t_final=1e-3, sweeps=300), seed=42
    )
    if energy != evaluate(p, bits):
        return "returned energy is not the energy of the returned assignment"
    return None


def _check_fm(rng) -> str | None:
    machine = fm.FactorizationMachine(
        bias=0.3,
        linear=rng.standard_normal(8) * 0.5,
        factors=rng.standard_normal((8, 3)) * 0.5,
    )
    problem, bias = fm.fm_to_hubo(machine)
    for b in range(1 << 8):
        x = index_to_bits(b, 8)
        if abs(fm.fm_predict(machine, x) - (bias + evaluate(problem, x))) > 1e-9:
            return "prediction and extracted energy disagree"
    return None


def _check_milp(rng) -> str | None:
    p = random_hubo(6, seed=17)
    model = milp.linearize_to_milp(p)
    for b in range(1 << 6):
        x = index_to_bits(b, 6)
        values = model.implied_assignment(x)
        if not model.constraints_satisfied(values):
            return "implied products violate linearization constraints"
        if abs(model.objective_value(values) - evaluate(p, x)) > 1e-9:
            return "linearized objective differs from the polynomial energy"
    return None


CHECKS = [
    ("flip-delta-consistency", _check_flip_consistency),
    ("extraction-soundness", _check_extraction),
    ("brute-force-lower-bound", _check_brute_lower_bound),
    ("generator-determinism", _check_generator_determinism),
    ("simulator-basics", _check_simulator),
    ("blockwise-vs-dense", _check_blockwise),
    ("aggregation-monotone", _check_aggregation),
    ("quadratization-soundness", _check_quadratization),
    ("annealer-energy-identity", _check_annealer),
    ("fm-mapping-identity", _check_fm),
    ("milp-objective-identity", _check_milp),
]


def run_all(seed: int = 0) -> list[tuple[str, bool, str]]:
    results = []
    for name, check in CHECKS:
        rng = as_generator(seed)
        try:
            failure = check(rng)
        except Exception as exc:  # a crashing check is a failing check
            failure = f"raised {type(exc).__name__}: {exc}"
        results.append((name, failure is None, failure or "ok"))
    return results
