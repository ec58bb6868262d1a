import numpy as np
import pytest

from dqof.hubo import (
    BRUTE_FORCE_CAP,
    CapExceededError,
    HuboProblem,
    approximation_ratio,
    brute_force,
    build_adjacency,
    cost_table,
    evaluate,
    evaluate_flip_delta,
    extract_sub_hubo,
    index_to_bits,
    bits_to_index,
    random_bits,
    random_hubo,
    relative_accuracy,
)
from dqof.rng import as_generator

from conftest import energy_by_hand, exhaustive_minima


# ---------------------------------------------------------------------------
# construction


def test_from_terms_validates_indices():
    with pytest.raises(ValueError):
        HuboProblem.from_terms(3, quadratic={(1, 0): 1.0})
    with pytest.raises(ValueError):
        HuboProblem.from_terms(3, cubic={(0, 1, 3): 1.0})
    with pytest.raises(ValueError):
        HuboProblem.from_terms(3, linear={-1: 1.0})
    with pytest.raises(ValueError):
        HuboProblem.from_terms(0)
    with pytest.raises(ValueError):
        HuboProblem.from_terms(2, linear={0: float("inf")})


def test_dict_views_round_trip(instance3):
    assert instance3.linear == {0: 1.0, 1: -1.0, 2: 0.0}
    assert instance3.quadratic == {(0, 1): 2.0}
    assert instance3.cubic == {(0, 1, 2): -3.0}
    rebuilt = HuboProblem.from_terms(
        3, instance3.linear, instance3.quadratic, instance3.cubic
    )
    assert np.array_equal(rebuilt.lin_vals, instance3.lin_vals)
    assert np.array_equal(rebuilt.tri_keys, instance3.tri_keys)


# ---------------------------------------------------------------------------
# evaluation


def test_evaluate_all_zeros_is_zero(instance3):
    assert evaluate(instance3, [0, 0, 0]) == 0.0


def test_evaluate_instance3_all_ones(instance3):
    # frozen expected value -1.0; re-derived by the independent hand-summation
    assert energy_by_hand(instance3, (1, 1, 1)) == -1.0
    assert evaluate(instance3, [1, 1, 1]) == -1.0


def test_evaluate_pair_needs_both_bits():
    p = HuboProblem.from_terms(2, linear={0: 0.0, 1: 0.0}, quadratic={(0, 1): 5.0})
    assert evaluate(p, [1, 0]) == 0.0


def test_evaluate_size_mismatch(instance3):
    with pytest.raises(ValueError):
        evaluate(instance3, [1, 0])
    with pytest.raises(ValueError):
        evaluate(instance3, [1, 0, 2])


def test_evaluate_matches_hand_sum_randomly():
    rng = as_generator(7)
    for _ in range(50):
        n = int(rng.integers(1, 9))
        p = random_hubo(n, seed=int(rng.integers(1 << 30)))
        x = random_bits(n, rng)
        assert evaluate(p, x) == pytest.approx(energy_by_hand(p, x), abs=1e-12)


# ---------------------------------------------------------------------------
# flip deltas


def test_flip_delta_single_linear_term():
    p = HuboProblem.from_terms(3, linear={1: 3.0})
    assert evaluate_flip_delta(p, [0, 0, 0], 1) == 3.0


def test_flip_delta_instance3_bit2(instance3):
    # evaluate((1,1,0)) - evaluate((1,1,1)) = 2 - (-1) = +3
    assert energy_by_hand(instance3, (1, 1, 0)) - energy_by_hand(instance3, (1, 1, 1)) == 3.0
    assert evaluate_flip_delta(instance3, [1, 1, 1], 2) == pytest.approx(3.0, abs=1e-12)


def test_flip_delta_involution(instance3):
    adj = build_adjacency(instance3)
    rng = as_generator(3)
    for _ in range(20):
        x = random_bits(3, rng)
        for i in range(3):
            d1 = evaluate_flip_delta(instance3, x, i, adj)
            y = x.copy()
            y[i] ^= 1
            d2 = evaluate_flip_delta(instance3, y, i, adj)
            assert d1 + d2 == pytest.approx(0.0, abs=1e-12)


def test_flip_delta_consistency_property():
    # spec invariant: 1000 random (problem, x, i) triples at 1e-12 relative
    rng = as_generator(11)
    for _ in range(1000):
        n = int(rng.integers(2, 12))
        p = random_hubo(n, seed=int(rng.integers(1 << 30)))
        adj = build_adjacency(p)
        x = random_bits(n, rng)
        i = int(rng.integers(n))
        flipped = x.copy()
        flipped[i] ^= 1
        direct = evaluate(p, flipped) - evaluate(p, x)
        delta = evaluate_flip_delta(p, x, i, adj)
        assert abs(direct - delta) <= 1e-12 * max(1.0, abs(direct))


def test_flip_delta_index_error(instance3):
    with pytest.raises(ValueError):
        evaluate_flip_delta(instance3, [0, 0, 0], 3)


# ---------------------------------------------------------------------------
# generation


def test_random_hubo_dense_counts():
    p = random_hubo(4, density=1.0, seed=1)
    assert (p.lin_keys.size, p.pair_keys.size, p.tri_keys.size) == (4, 6, 4)
    p20 = random_hubo(20, density=1.0, seed=1)
    assert p20.num_terms == 20 + 190 + 1140


def test_random_hubo_determinism():
    a = random_hubo(6, seed=42)
    b = random_hubo(6, seed=42)
    assert a.linear == b.linear and a.quadratic == b.quadratic and a.cubic == b.cubic
    c = random_hubo(6, seed=43)
    assert a.cubic != c.cubic


def test_random_hubo_density_thins_terms():
    dense = random_hubo(12, density=1.0, seed=5)
    thin = random_hubo(12, density=0.3, seed=5)
    assert 0 < thin.num_terms < dense.num_terms


def test_random_hubo_invalid_args():
    with pytest.raises(ValueError):
        random_hubo(0)
    with pytest.raises(ValueError):
        random_hubo(4, density=0.0)
    with pytest.raises(ValueError):
        random_hubo(4, coeff_law="bogus")


def test_random_hubo_custom_law():
    p = random_hubo(5, coeff_law=lambda rng, size: np.full(size, 2.5), seed=0)
    assert all(v == 2.5 for v in p.linear.values())


# ---------------------------------------------------------------------------
# extraction


def test_extract_full_subset_is_identity(instance3):
    sub = extract_sub_hubo(instance3, [0, 1, 2])
    assert np.array_equal(sub.problem.lin_vals, instance3.lin_vals)
    assert np.array_equal(sub.problem.pair_keys, instance3.pair_keys)
    assert np.array_equal(sub.problem.tri_vals, instance3.tri_vals)


def test_extract_drops_cross_boundary_terms(instance3):
    sub = extract_sub_hubo(instance3, [0, 1])
    assert sub.problem.linear == {0: 1.0, 1: -1.0}
    assert sub.problem.quadratic == {(0, 1): 2.0}
    assert sub.problem.cubic == {}


def test_extract_soundness_property():
    rng = as_generator(19)
    for _ in range(50):
        p = random_hubo(11, seed=int(rng.integers(1 << 30)))
        size = int(rng.integers(1, 12))
        subset = np.sort(rng.choice(11, size=size, replace=False))
        sub = extract_sub_hubo(p, subset)
        x_local = random_bits(size, rng)
        x_global = np.zeros(11, dtype=np.uint8)
        x_global[subset] = x_local
        members = set(subset.tolist())
        expected = 0.0
        for idx, c in [((i,), c) for i, c in p.linear.items()] + list(
            p.quadratic.items()
        ) + list(p.cubic.items()):
            if all(v in members for v in idx):
                expected += c * float(np.prod(x_global[list(idx)]))
        assert evaluate(sub.problem, x_local) == pytest.approx(expected, abs=1e-12)


def test_extract_disjoint_subsets_partition_terms():
    p = random_hubo(8, seed=2)
    a = extract_sub_hubo(p, [0, 1, 2, 3])
    b = extract_sub_hubo(p, [4, 5, 6, 7])
    # retained monomials partition: nothing is counted twice, cross terms drop
    assert a.problem.num_terms + b.problem.num_terms < p.num_terms


def test_extract_errors(instance3):
    with pytest.raises(ValueError):
        extract_sub_hubo(instance3, [0, 0, 1])
    with pytest.raises(ValueError):
        extract_sub_hubo(instance3, [1, 3])
    with pytest.raises(ValueError):
        extract_sub_hubo(instance3, [])


# ---------------------------------------------------------------------------
# exhaustive reference


def test_brute_force_single_variable():
    x, e = brute_force(HuboProblem.from_terms(1, linear={0: 5.0}))
    assert (list(x), e) == ([0], 0.0)
    x, e = brute_force(HuboProblem.from_terms(1, linear={0: -5.0}))
    assert (list(x), e) == ([1], -5.0)


def test_brute_force_instance3_vs_enumeration(instance3):
    argmins, best = exhaustive_minima(instance3)
    assert best == -1.0
    assert (1, 1, 1) in argmins  # degenerate with (0,1,0)
    x, e = brute_force(instance3)
    assert e == pytest.approx(-1.0, abs=1e-12)
    assert tuple(int(b) for b in x) == min(argmins)  # lexicographic tie-break


def test_brute_force_matches_enumeration_randomly():
    rng = as_generator(23)
    for _ in range(20):
        n = int(rng.integers(1, 9))
        p = random_hubo(n, seed=int(rng.integers(1 << 30)))
        argmins, best = exhaustive_minima(p)
        x, e = brute_force(p)
        assert e == pytest.approx(best, abs=1e-10)
        assert tuple(int(b) for b in x) == min(argmins)


def test_brute_force_is_lower_bound():
    p = random_hubo(10, seed=31)
    _, e_opt = brute_force(p)
    rng = as_generator(31)
    for _ in range(200):
        assert evaluate(p, random_bits(10, rng)) >= e_opt - 1e-12


def test_brute_force_cap_message():
    p = random_hubo(4, seed=0)
    with pytest.raises(CapExceededError, match="cap of 3"):
        brute_force(p, cap=3)
    assert BRUTE_FORCE_CAP == 24


def test_cost_table_matches_evaluate():
    p = random_hubo(7, seed=13)
    table = cost_table(p)
    for b in range(1 << 7):
        assert table[b] == pytest.approx(evaluate(p, index_to_bits(b, 7)), abs=1e-12)
    assert table[0] == 0.0


def test_bit_index_round_trip():
    for b in range(32):
        assert bits_to_index(index_to_bits(b, 5)) == b


# ---------------------------------------------------------------------------
# metrics


def test_approximation_ratio_examples():
    assert approximation_ratio(-10.0, -10.0) == 1.0
    assert approximation_ratio(-9.9, -10.0) == pytest.approx(0.99)
    assert approximation_ratio(0.0, -10.0) == 0.0
    assert approximation_ratio(0.0, 0.0) == 1.0
    assert np.isnan(approximation_ratio(1.0, 0.0))
    assert np.isnan(approximation_ratio(-1.0, 2.0))


def test_relative_accuracy_examples():
    assert relative_accuracy(-10.0, -10.0, -2.0) == 1.0
    assert relative_accuracy(-2.0, -10.0, -2.0) == 0.0
    assert relative_accuracy(-6.0, -10.0, -2.0) == 0.5
    assert relative_accuracy(-3.0, -3.0, -3.0) == 1.0  # degenerate span
    assert relative_accuracy(-12.0, -10.0, -2.0) == 1.0  # clipped
    with pytest.raises(ValueError):
        relative_accuracy(-5.0, -2.0, -10.0)
