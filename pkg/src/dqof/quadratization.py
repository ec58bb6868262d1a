"""Reduction of cubic terms to quadratic form with penalty-enforced auxiliaries.

Each cubic term has one of its variable pairs replaced by an auxiliary binary
w constrained toward w = x_i * x_j by the Rosenberg penalty

    lam * (x_i x_j - 2 x_i w - 2 x_j w + 3 w)

which is zero iff w equals the product and at least lam otherwise. One
auxiliary is shared by all cubic terms that substitute the same pair; pairs
are chosen greedily by descending frequency over the cubic terms (ties to the
smaller pair), which keeps the auxiliary count near the used-pair minimum.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hubo import (
    BRUTE_FORCE_CAP,
    CapExceededError,
    HuboProblem,
    as_bits,
    brute_force,
    cost_table,
    evaluate,
    index_to_bits,
    lex_key,
)


@dataclass(frozen=True, eq=False)
class QuboProblem:
    """A quadratic problem produced by quadratize().

    `problem` spans n_total = n_original + len(aux_defs) variables; original
    variables keep indices [0, n_original) and auxiliaries follow. aux_defs
    maps each auxiliary index to the product pair it stands for.
    """

    problem: HuboProblem
    n_original: int
    aux_defs: tuple[tuple[int, tuple[int, int]], ...]
    lam: float

    @property
    def n_total(self) -> int:
        return self.problem.n_vars

    def as_hubo(self) -> HuboProblem:
        return self.problem

    def project(self, x_full) -> np.ndarray:
        """Original-variable part of a full assignment."""
        return as_bits(x_full, self.n_total)[: self.n_original].copy()


def quadratize(hubo: HuboProblem, lam: float) -> QuboProblem:
    # lam = 0 is allowed so the soundness check can demonstrate what an
    # unconstrained auxiliary does to the landscape
    if lam < 0:
        raise ValueError("penalty strength must be non-negative")
    n = hubo.n_vars
    ti, tj, tr = hubo.tri_cols()
    n_tri = ti.size

    if n_tri:
        # Frequency of every pair over the cubic terms, then per-term greedy
        # choice: highest frequency wins, ties to the smaller encoded pair.
        options = np.stack([ti * n + tj, ti * n + tr, tj * n + tr])  # (3, T)
        uniq, counts = np.unique(options, return_counts=True)
        freq = counts[np.searchsorted(uniq, options)]
        score = freq.astype(np.int64) * (np.int64(n) * n + 1) - options
        chosen = options[np.argmax(score, axis=0), np.arange(n_tri)]
        used = np.unique(chosen)
        aux = n + np.searchsorted(used, chosen)  # per-term auxiliary index
        third = (ti + tj + tr) - (chosen // n) - (chosen % n)
    else:
        used = np.zeros(0, dtype=np.int64)
        aux = np.zeros(0, dtype=np.int64)
        third = np.zeros(0, dtype=np.int64)

    n_total = n + used.size
    pi, pj = hubo.pair_cols()
    upi, upj = used // n, used % n
    aux_ids = n + np.arange(used.size, dtype=np.int64)

    quad_keys = np.concatenate([
        pi * n_total + pj,                 # original pairwise terms
        third * n_total + aux,             # substituted cubic terms
        upi * n_total + upj,               # penalty: + lam * x_i x_j
        upi * n_total + aux_ids,           # penalty: - 2 lam * x_i w
        upj * n_total + aux_ids,           # penalty: - 2 lam * x_j w
    ])
    quad_vals = np.concatenate([
        hubo.pair_vals,
        hubo.tri_vals,
        np.full(used.size, lam),
        np.full(used.size, -2.0 * lam),
        np.full(used.size, -2.0 * lam),
    ])
    order = np.argsort(quad_keys, kind="stable")
    quad_keys, quad_vals = quad_keys[order], quad_vals[order]
    if quad_keys.size:
        boundaries = np.flatnonzero(np.diff(quad_keys) != 0) + 1
        starts = np.concatenate([[0], boundaries])
        quad_vals = np.add.reduceat(quad_vals, starts)
        quad_keys = quad_keys[starts]

    lin_keys = np.concatenate([hubo.lin_keys, aux_ids])
    lin_vals = np.concatenate([hubo.lin_vals, np.full(used.size, 3.0 * lam)])

    qp = HuboProblem._from_key_arrays(
        n_total,
        lin_keys, lin_vals,
        quad_keys, quad_vals,
        np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.float64),
    )
    defs = tuple(
        (int(a), (int(p // n), int(p % n))) for a, p in zip(aux_ids, used)
    )
    return QuboProblem(problem=qp, n_original=n, aux_defs=defs, lam=float(lam))


def sufficient_penalty(hubo: HuboProblem) -> float:
    """A penalty strength at which minima provably coincide: sum|cubic| + 1."""
    return float(np.abs(hubo.tri_vals).sum() + 1.0)


def _aux_coupling(qubo: QuboProblem):
    """Per-auxiliary slices of (original var, coefficient) couplings, sorted."""
    qp = qubo.problem
    pi, pj = qp.pair_cols()
    mask = pj >= qubo.n_original  # auxiliaries always carry the larger index
    owners = pj[mask]
    order = np.argsort(owners, kind="stable")
    owners = owners[order]
    partners = pi[mask][order]
    coeffs = qp.pair_vals[mask][order]
    aux_range = np.arange(qubo.n_original, qubo.n_total + 1)
    bounds = np.searchsorted(owners, aux_range)
    return partners, coeffs, bounds


def minimize_auxiliaries(qubo: QuboProblem, x_orig) -> tuple[np.ndarray, float]:
    """Optimal full assignment with original bits fixed, minimized in closed form.

    Auxiliaries never couple to each other, so each one independently takes 1
    iff its conditional coefficient is negative; this is exact.
    """
    xo = as_bits(x_orig, qubo.n_original).astype(np.float64)
    partners, coeffs, bounds = _coupling_cache(qubo)
    n_aux = qubo.n_total - qubo.n_original
    lin = np.zeros(qubo.n_total)
    lin[qubo.problem.lin_keys] = qubo.problem.lin_vals
    sums = np.zeros(n_aux)
    if n_aux and partners.size:
        contrib = coeffs * xo[partners]
        seg = np.add.reduceat(contrib, bounds[:-1])
        nonempty = bounds[:-1] < bounds[1:]  # reduceat garbles empty segments
        sums[nonempty] = seg[nonempty]
    c = lin[qubo.n_original:] + sums
    w = (c < 0).astype(np.uint8)
    full = np.concatenate([xo.astype(np.uint8), w])
    return full, evaluate(qubo.problem, full)


def _coupling_cache(qubo: QuboProblem):
    cache = qubo.problem._cache
    if "aux_coupling" not in cache:
        cache["aux_coupling"] = _aux_coupling(qubo)
    return cache["aux_coupling"]


def brute_force_qubo(qubo: QuboProblem, cap: int = BRUTE_FORCE_CAP) -> tuple[np.ndarray, float]:
    """Exact QUBO minimum by enumerating original bits, auxiliaries closed form."""
    n = qubo.n_original
    if n > cap:
        raise CapExceededError(
            f"exhaustive search over 2^{n} original assignments refused above cap {cap}"
        )
    best_e = np.inf
    best_x: np.ndarray | None = None
    for b in range(1 << n):
        xo = index_to_bits(b, n)
        full, e = minimize_auxiliaries(qubo, xo)
        if e < best_e or (e == best_e and lex_key(full) < lex_key(best_x)):
            best_e, best_x = e, full
    return best_x, float(best_e)


@dataclass(frozen=True)
class PenaltyReport:
    """Outcome of brute-forcing a problem against its quadratization."""

    lam: float
    hubo_energy: float
    qubo_energy: float
    minima_agree: bool
    projection_energy: float
    projection_is_minimizer: bool
    violated_aux_count: int
    min_violation_margin: float | None

    def to_json_dict(self) -> dict:
        from dataclasses import asdict

        return asdict(self)


def penalty_soundness_check(
    hubo: HuboProblem, qubo: QuboProblem, cap: int = BRUTE_FORCE_CAP, atol: float = 1e-9
) -> PenaltyReport:
    """Brute-force both problems and quantify how faithful the reduction is.

    Reports whether the minima agree, whether the QUBO minimizer's projection
    minimizes the original problem, and the smallest energy margin by which a
    violated auxiliary (w != x_i * x_j at the QUBO optimum) was profitable.
    """
    _, e_h = brute_force(hubo, cap)
    xq, e_q = brute_force_qubo(qubo, cap)

    proj = qubo.project(xq)
    e_proj = evaluate(hubo, proj)

    violated = []
    for a, (i, j) in qubo.aux_defs:
        if int(xq[a]) != int(xq[i]) * int(xq[j]):
            violated.append(a)
    min_margin = None
    for a in violated:
        forced = xq.copy()
        i, j = dict(qubo.aux_defs)[a]
        forced[a] = int(xq[i]) * int(xq[j])
        margin = evaluate(qubo.problem, forced) - e_q
        if min_margin is None or margin < min_margin:
            min_margin = float(margin)

    return PenaltyReport(
        lam=qubo.lam,
        hubo_energy=e_h,
        qubo_energy=e_q,
        minima_agree=bool(abs(e_h - e_q) <= atol),
        projection_energy=e_proj,
        projection_is_minimizer=bool(e_proj <= e_h + atol),
        violated_aux_count=len(violated),
        min_violation_margin=min_margin,
    )
