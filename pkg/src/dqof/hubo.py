"""Higher-order binary problem core.

A problem over binary variables x_0..x_{N-1} is the polynomial

    E(x) = sum_i h_i x_i + sum_{i<j} J_ij x_i x_j + sum_{i<j<r} K_ijr x_i x_j x_r

stored sparsely: one sorted array of encoded index keys plus one value array
per interaction order. The encoding keeps terms in canonical ascending order,
gives O(log n_terms) membership lookups for sub-problem extraction, and keeps
a dense 500-variable cubic instance (~2.1e7 terms) under a gigabyte.

Conventions used throughout the package:

* an assignment is a length-N vector of {0,1}, variable j at position j;
* the integer index of an assignment has variable j at bit j (so index 0 is
  the all-zeros assignment);
* tie-breaks pick the lexicographically smallest bit tuple (x_0 first).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

BRUTE_FORCE_CAP = 24


class CapExceededError(ValueError):
    """A problem is larger than a solver's hard size cap."""


# ---------------------------------------------------------------------------
# assignments


def as_bits(x, n_vars: int) -> np.ndarray:
    """Validate and return an assignment as a uint8 array of length n_vars."""
    arr = np.asarray(x)
    if arr.shape != (n_vars,):
        raise ValueError(
            f"assignment has shape {arr.shape}, expected ({n_vars},)"
        )
    out = arr.astype(np.uint8)
    if not np.array_equal(out, arr) or not np.all(out <= 1):
        raise ValueError("assignment entries must be 0 or 1")
    return out


def bits_to_index(x) -> int:
    """Integer basis index of an assignment (variable j at bit j)."""
    arr = np.asarray(x, dtype=np.uint64)
    return int(np.sum(arr << np.arange(arr.size, dtype=np.uint64)))


def index_to_bits(index: int, n_vars: int) -> np.ndarray:
    """Assignment encoded by a basis index (variable j at bit j)."""
    return ((int(index) >> np.arange(n_vars)) & 1).astype(np.uint8)


def random_bits(n_vars: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2, size=n_vars, dtype=np.uint8)


def lex_key(x) -> tuple:
    """Sort key implementing the global lexicographic tie-break."""
    return tuple(int(b) for b in x)


# ---------------------------------------------------------------------------
# term-key encoding

def _encode_pairs(i: np.ndarray, j: np.ndarray, n: int) -> np.ndarray:
    return i.astype(np.int64) * n + j


def _encode_triples(i: np.ndarray, j: np.ndarray, r: np.ndarray, n: int) -> np.ndarray:
    return (i.astype(np.int64) * n + j) * n + r


def _decode_pairs(keys: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    return keys // n, keys % n


def _decode_triples(keys: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    r = keys % n
    ij = keys // n
    return ij // n, ij % n, r


def _pair_index_cols(n: int) -> tuple[np.ndarray, np.ndarray]:
    """All (i, j) with i < j < n, lexicographically ascending."""
    i, j = np.triu_indices(n, k=1)
    return i.astype(np.int64), j.astype(np.int64)


def _triple_index_cols(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All (i, j, r) with i < j < r < n, lexicographically ascending."""
    ii, jj, rr = [], [], []
    for a in range(n - 2):
        j, r = np.triu_indices(n - a - 1, k=1)
        ii.append(np.full(j.size, a, dtype=np.int64))
        jj.append(j.astype(np.int64) + a + 1)
        rr.append(r.astype(np.int64) + a + 1)
    if not ii:
        z = np.zeros(0, dtype=np.int64)
        return z, z.copy(), z.copy()
    return np.concatenate(ii), np.concatenate(jj), np.concatenate(rr)


# ---------------------------------------------------------------------------
# problem type


@dataclass(frozen=True, eq=False)
class HuboProblem:
    """Sparse store for linear, pairwise and three-variable coefficients.

    Keys per order are encoded index tuples in strictly ascending canonical
    order; construct through :meth:`from_terms` unless you already hold
    validated arrays.
    """

    n_vars: int
    lin_keys: np.ndarray   # int64, variable index
    lin_vals: np.ndarray   # float64
    pair_keys: np.ndarray  # int64, i*n + j with i < j
    pair_vals: np.ndarray
    tri_keys: np.ndarray   # int64, (i*n + j)*n + r with i < j < r
    tri_vals: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    # -- construction -------------------------------------------------------

    @classmethod
    def from_terms(
        cls,
        n_vars: int,
        linear: Mapping[int, float] | None = None,
        quadratic: Mapping[tuple[int, int], float] | None = None,
        cubic: Mapping[tuple[int, int, int], float] | None = None,
    ) -> "HuboProblem":
        if n_vars < 1:
            raise ValueError(f"invalid problem size {n_vars}; need at least 1 variable")
        n = int(n_vars)

        def check(idx: tuple[int, ...]) -> None:
            if any(not (0 <= v < n) for v in idx):
                raise ValueError(f"term index {idx} out of range for {n} variables")
            if any(a >= b for a, b in zip(idx, idx[1:])):
                raise ValueError(f"term indices {idx} must be strictly increasing")

        lin_k, lin_v = [], []
        for i, c in (linear or {}).items():
            check((int(i),))
            lin_k.append(int(i))
            lin_v.append(float(c))
        pair_k, pair_v = [], []
        for (i, j), c in (quadratic or {}).items():
            check((int(i), int(j)))
            pair_k.append(int(i) * n + int(j))
            pair_v.append(float(c))
        tri_k, tri_v = [], []
        for (i, j, r), c in (cubic or {}).items():
            check((int(i), int(j), int(r)))
            tri_k.append((int(i) * n + int(j)) * n + int(r))
            tri_v.append(float(c))

        return cls._from_key_arrays(
            n,
            np.asarray(lin_k, dtype=np.int64), np.asarray(lin_v, dtype=np.float64),
            np.asarray(pair_k, dtype=np.int64), np.asarray(pair_v, dtype=np.float64),
            np.asarray(tri_k, dtype=np.int64), np.asarray(tri_v, dtype=np.float64),
        )

    @classmethod
    def _from_key_arrays(cls, n_vars, lin_k, lin_v, pair_k, pair_v, tri_k, tri_v) -> "HuboProblem":
        def canon(keys, vals):
            keys = np.asarray(keys, dtype=np.int64)
            vals = np.asarray(vals, dtype=np.float64)
            if keys.shape != vals.shape:
                raise ValueError("key/value arrays differ in length")
            order = np.argsort(keys, kind="stable")
            keys, vals = keys[order], vals[order]
            if keys.size and np.any(np.diff(keys) == 0):
                raise ValueError("duplicate term keys")
            if vals.size and not np.all(np.isfinite(vals)):
                raise ValueError("coefficients must be finite")
            return keys, vals

        lin_k, lin_v = canon(lin_k, lin_v)
        pair_k, pair_v = canon(pair_k, pair_v)
        tri_k, tri_v = canon(tri_k, tri_v)
        return cls(int(n_vars), lin_k, lin_v, pair_k, pair_v, tri_k, tri_v)

    # -- views ---------------------------------------------------------------

    @property
    def linear(self) -> dict[int, float]:
        return {int(k): float(v) for k, v in zip(self.lin_keys, self.lin_vals)}

    @property
    def quadratic(self) -> dict[tuple[int, int], float]:
        i, j = self.pair_cols()
        return {(int(a), int(b)): float(v) for a, b, v in zip(i, j, self.pair_vals)}

    @property
    def cubic(self) -> dict[tuple[int, int, int], float]:
        i, j, r = self.tri_cols()
        return {
            (int(a), int(b), int(c)): float(v)
            for a, b, c, v in zip(i, j, r, self.tri_vals)
        }

    def pair_cols(self) -> tuple[np.ndarray, np.ndarray]:
        if "pair_cols" not in self._cache:
            self._cache["pair_cols"] = _decode_pairs(self.pair_keys, self.n_vars)
        return self._cache["pair_cols"]

    def tri_cols(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if "tri_cols" not in self._cache:
            self._cache["tri_cols"] = _decode_triples(self.tri_keys, self.n_vars)
        return self._cache["tri_cols"]

    @property
    def num_terms(self) -> int:
        return int(self.lin_keys.size + self.pair_keys.size + self.tri_keys.size)

    def max_abs_coeff(self) -> float:
        parts = [np.abs(v).max() for v in (self.lin_vals, self.pair_vals, self.tri_vals) if v.size]
        return float(max(parts)) if parts else 0.0

    def term_tuples(self) -> list[tuple[int, ...]]:
        """Index tuples of every stored term, orders ascending (no values)."""
        out: list[tuple[int, ...]] = [(int(i),) for i in self.lin_keys]
        pi, pj = self.pair_cols()
        out += [(int(a), int(b)) for a, b in zip(pi, pj)]
        ti, tj, tr = self.tri_cols()
        out += [(int(a), int(b), int(c)) for a, b, c in zip(ti, tj, tr)]
        return out


@dataclass(frozen=True, eq=False)
class SubHubo:
    """A sub-problem over a strictly increasing subset of parent variables.

    `problem` is re-indexed to local coordinates 0..n-1, position in `subset`
    giving the local index. Cross-boundary terms are absent by construction.
    """

    subset: np.ndarray
    problem: HuboProblem
    origin: object = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return int(self.subset.size)


# ---------------------------------------------------------------------------
# evaluation


def evaluate(problem: HuboProblem, x) -> float:
    """Exact energy of an assignment, term by term as stored."""
    xb = as_bits(x, problem.n_vars).astype(np.float64)
    e = 0.0
    if problem.lin_keys.size:
        e += float(np.sum(problem.lin_vals * xb[problem.lin_keys]))
    if problem.pair_keys.size:
        i, j = problem.pair_cols()
        e += float(np.sum(problem.pair_vals * xb[i] * xb[j]))
    if problem.tri_keys.size:
        i, j, r = problem.tri_cols()
        e += float(np.sum(problem.tri_vals * xb[i] * xb[j] * xb[r]))
    return e


class Adjacency:
    """Per-variable term lists giving O(degree) single-flip energy deltas."""

    __slots__ = ("n_vars", "lin", "pair_other", "pair_coeff", "tri_other", "tri_coeff")

    def __init__(self, problem: HuboProblem):
        n = problem.n_vars
        self.n_vars = n
        self.lin = np.zeros(n, dtype=np.float64)
        if problem.lin_keys.size:
            self.lin[problem.lin_keys] = problem.lin_vals

        pi, pj = problem.pair_cols()
        owner = np.concatenate([pi, pj])
        other = np.concatenate([pj, pi]).astype(np.int32)
        coeff = np.concatenate([problem.pair_vals, problem.pair_vals])
        self.pair_other, self.pair_coeff = _group_by_owner(owner, n, other, coeff)

        ti, tj, tr = problem.tri_cols()
        owner = np.concatenate([ti, tj, tr])
        o1 = np.concatenate([tj, ti, ti]).astype(np.int32)
        o2 = np.concatenate([tr, tr, tj]).astype(np.int32)
        pair = np.stack([o1, o2], axis=1)
        coeff = np.concatenate([problem.tri_vals] * 3)
        self.tri_other, self.tri_coeff = _group_by_owner(owner, n, pair, coeff)

    def flip_delta(self, xf: np.ndarray, i: int) -> float:
        """Energy change from flipping bit i of float-valued bits xf."""
        s = self.lin[i]
        po = self.pair_other[i]
        if po.size:
            s += np.sum(self.pair_coeff[i] * xf[po])
        to = self.tri_other[i]
        if to.size:
            s += np.sum(self.tri_coeff[i] * xf[to[:, 0]] * xf[to[:, 1]])
        return (1.0 - 2.0 * xf[i]) * s


def _group_by_owner(owner, n, *payloads):
    """Split payload rows into per-owner arrays; owners in [0, n)."""
    order = np.argsort(owner, kind="stable")
    owner_sorted = owner[order]
    bounds = np.searchsorted(owner_sorted, np.arange(n + 1))
    grouped = []
    for payload in payloads:
        p = payload[order]
        grouped.append([p[bounds[v]:bounds[v + 1]] for v in range(n)])
    return tuple(grouped)


def build_adjacency(problem: HuboProblem) -> Adjacency:
    return Adjacency(problem)


def evaluate_flip_delta(problem: HuboProblem, x, i: int, adjacency: Adjacency | None = None) -> float:
    """evaluate(problem, flip(x, i)) - evaluate(problem, x), via terms touching i.

    Pass a prebuilt adjacency when calling repeatedly; building one is
    O(total terms).
    """
    if not 0 <= i < problem.n_vars:
        raise ValueError(f"variable index {i} out of range for {problem.n_vars} variables")
    adj = adjacency if adjacency is not None else Adjacency(problem)
    xf = as_bits(x, problem.n_vars).astype(np.float64)
    return float(adj.flip_delta(xf, i))


# ---------------------------------------------------------------------------
# generation and extraction


CoeffLaw = "str | Callable[[np.random.Generator, int], np.ndarray]"


def _draw_coeffs(law, rng: np.random.Generator, size: int) -> np.ndarray:
    if callable(law):
        out = np.asarray(law(rng, size), dtype=np.float64)
        if out.shape != (size,):
            raise ValueError("coefficient law returned wrong shape")
        if size and not np.all(np.isfinite(out)):
            raise ValueError("coefficient law produced non-finite values")
        return out
    if law == "normal":
        return rng.standard_normal(size)
    if law == "uniform":
        return rng.uniform(-1.0, 1.0, size)
    raise ValueError(f"unknown coefficient law {law!r}")


def random_hubo(n_vars: int, density: float = 1.0, coeff_law="normal", seed: int = 0) -> HuboProblem:
    """Random instance with each candidate term kept with probability `density`.

    density=1.0 (the default) gives the fully connected case: all C(N,1),
    C(N,2), C(N,3) terms present. Deterministic for a fixed seed: keys are
    generated in canonical ascending order and coefficients are drawn in that
    order (linear, then pairs, then triples).
    """
    if n_vars < 1:
        raise ValueError(f"invalid problem size {n_vars}; need at least 1 variable")
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must be in (0, 1], got {density}")
    from .rng import stream, TAG_PROBLEM

    rng = stream(seed, TAG_PROBLEM)
    n = int(n_vars)

    lin_k = np.arange(n, dtype=np.int64)
    pi, pj = _pair_index_cols(n)
    pair_k = _encode_pairs(pi, pj, n)
    ti, tj, tr = _triple_index_cols(n)
    tri_k = _encode_triples(ti, tj, tr, n)

    if density < 1.0:
        lin_k = lin_k[rng.random(lin_k.size) < density]
        pair_k = pair_k[rng.random(pair_k.size) < density]
        tri_k = tri_k[rng.random(tri_k.size) < density]

    lin_v = _draw_coeffs(coeff_law, rng, lin_k.size)
    pair_v = _draw_coeffs(coeff_law, rng, pair_k.size)
    tri_v = _draw_coeffs(coeff_law, rng, tri_k.size)
    return HuboProblem._from_key_arrays(n, lin_k, lin_v, pair_k, pair_v, tri_k, tri_v)


def _lookup(keys_sorted: np.ndarray, vals: np.ndarray, wanted: np.ndarray):
    """Values for wanted keys present in a sorted key array."""
    if keys_sorted.size == 0 or wanted.size == 0:
        return np.zeros(0, dtype=bool), np.zeros(0, dtype=np.float64)
    pos = np.searchsorted(keys_sorted, wanted)
    pos_c = np.minimum(pos, keys_sorted.size - 1)
    found = keys_sorted[pos_c] == wanted
    return found, vals[pos_c[found]]


def extract_sub_hubo(problem: HuboProblem, subset) -> SubHubo:
    """Restrict to the terms whose indices all lie in `subset`, re-indexed locally.

    Cross-boundary terms are dropped; nothing is clamped against any global
    assignment.
    """
    sub = np.asarray(subset, dtype=np.int64)
    if sub.ndim != 1 or sub.size < 1:
        raise ValueError("subset must be a non-empty 1-D index collection")
    if np.any(sub < 0) or np.any(sub >= problem.n_vars):
        raise ValueError("subset index out of range")
    if np.any(np.diff(sub) <= 0):
        raise ValueError("subset must be strictly increasing (no duplicates)")
    n_loc = int(sub.size)
    N = problem.n_vars

    found, vals = _lookup(problem.lin_keys, problem.lin_vals, sub)
    lin_k = np.flatnonzero(found).astype(np.int64)
    lin_v = vals

    li, lj = _pair_index_cols(n_loc)
    found, vals = _lookup(problem.pair_keys, problem.pair_vals, _encode_pairs(sub[li], sub[lj], N))
    pair_k = _encode_pairs(li[found], lj[found], n_loc)
    pair_v = vals

    li, lj, lr = _triple_index_cols(n_loc)
    found, vals = _lookup(
        problem.tri_keys, problem.tri_vals, _encode_triples(sub[li], sub[lj], sub[lr], N)
    )
    tri_k = _encode_triples(li[found], lj[found], lr[found], n_loc)
    tri_v = vals

    local = HuboProblem._from_key_arrays(n_loc, lin_k, lin_v, pair_k, pair_v, tri_k, tri_v)
    return SubHubo(subset=sub, problem=local, origin=problem)


# ---------------------------------------------------------------------------
# exact reference solver


def cost_table(problem: HuboProblem, cap: int = BRUTE_FORCE_CAP) -> np.ndarray:
    """Energies of all 2^N assignments, indexed with variable j at bit j.

    Built incrementally: each order-t term updates its 2^(N-t) matching
    entries through a strided view, never by evaluating 2^N assignments.
    """
    n = problem.n_vars
    if n > cap:
        raise CapExceededError(
            f"exhaustive table needs 2^{n} entries; refusing above cap of {cap} variables"
        )
    table = np.zeros(1 << n, dtype=np.float64)
    view = table.reshape([2] * n)

    def bump(idx_tuple: tuple[int, ...], c: float) -> None:
        sl: list = [slice(None)] * n
        for v in idx_tuple:
            sl[n - 1 - v] = 1
        view[tuple(sl)] += c

    for i, c in zip(problem.lin_keys, problem.lin_vals):
        bump((int(i),), float(c))
    pi, pj = problem.pair_cols()
    for i, j, c in zip(pi, pj, problem.pair_vals):
        bump((int(i), int(j)), float(c))
    ti, tj, tr = problem.tri_cols()
    for i, j, r, c in zip(ti, tj, tr, problem.tri_vals):
        bump((int(i), int(j), int(r)), float(c))
    return table


def _lex_smallest_index(indices: np.ndarray, n: int) -> int:
    """Among basis indices, the one whose bit tuple is lexicographically least."""
    rev = np.zeros(indices.shape, dtype=np.int64)
    for j in range(n):
        rev |= ((indices >> j) & 1) << (n - 1 - j)
    return int(indices[np.argmin(rev)])


def brute_force(problem: HuboProblem, cap: int = BRUTE_FORCE_CAP) -> tuple[np.ndarray, float]:
    """Exact global minimizer by exhaustive enumeration.

    Ties break to the lexicographically smallest assignment. The returned
    energy is evaluate() at the minimizer, so it is bitwise consistent with
    every other energy reported by this package.
    """
    table = cost_table(problem, cap)
    best = table.min()
    candidates = np.flatnonzero(table == best)
    idx = _lex_smallest_index(candidates, problem.n_vars)
    x = index_to_bits(idx, problem.n_vars)
    return x, evaluate(problem, x)


# ---------------------------------------------------------------------------
# quality metrics


@dataclass(frozen=True)
class QualityMetrics:
    energy: float
    reference_energy: float
    approximation_ratio: float
    relative_accuracy: float


def approximation_ratio(energy: float, optimal_energy: float) -> float:
    """energy / optimal_energy for negative optima.

    Returns 1.0 when both are exactly zero. Any other non-negative optimum
    makes the ratio meaningless for minimization; NaN is returned as the
    non-comparable flag.
    """
    if optimal_energy < 0:
        return float(energy) / float(optimal_energy)
    if energy == optimal_energy:
        return 1.0
    return float("nan")


def relative_accuracy(energy: float, best_energy: float, worst_energy: float) -> float:
    """Min-max normalized quality: 1 at the best known energy, 0 at the worst.

    The normalization baseline is the best available result among compared
    solvers; `worst_energy` defaults (at the caller) to the worst observed.
    Degenerate spans (best == worst) score 1.0.
    """
    if worst_energy < best_energy:
        raise ValueError("worst_energy must be >= best_energy")
    if worst_energy == best_energy:
        return 1.0
    value = (worst_energy - energy) / (worst_energy - best_energy)
    return float(min(1.0, max(0.0, value)))
