import json

import numpy as np
import pytest

from dqof.hubo import HuboProblem, random_hubo
from dqof.serialize import (
    load_problem,
    parse_text,
    problem_from_dict,
    problem_to_dict,
    problem_to_text,
    save_problem,
)

AWKWARD = {
    "linear": {0: 0.1, 1: -1.0 / 3.0, 2: 1e-300},
    "quadratic": {(0, 1): 1e308, (1, 3): -0.0},
    "cubic": {(0, 2, 3): 4.9e-324, (1, 2, 3): -2.5000000000000004},
}


def test_text_round_trip_exact_floats():
    p = HuboProblem.from_terms(4, **AWKWARD)
    q = parse_text(problem_to_text(p))
    assert q.n_vars == 4
    assert np.array_equal(q.lin_vals, p.lin_vals)
    assert np.array_equal(q.pair_vals, p.pair_vals)
    assert np.array_equal(q.tri_vals, p.tri_vals)
    assert np.array_equal(q.tri_keys, p.tri_keys)


def test_text_canonical_and_deterministic():
    a = problem_to_text(random_hubo(7, seed=99))
    b = problem_to_text(random_hubo(7, seed=99))
    assert a == b
    lines = a.splitlines()
    assert lines[0] == "HUBO N=7"
    orders = [int(l.split()[0]) for l in lines[1:]]
    assert orders == sorted(orders)


def test_text_round_trip_random_problem():
    p = random_hubo(9, density=0.4, seed=3)
    q = parse_text(problem_to_text(p))
    assert problem_to_text(q) == problem_to_text(p)


def test_empty_problem_round_trip():
    p = HuboProblem.from_terms(5)
    q = parse_text(problem_to_text(p))
    assert q.n_vars == 5 and q.num_terms == 0


def test_parse_rejects_malformed():
    with pytest.raises(ValueError):
        parse_text("NOPE N=3\n")
    with pytest.raises(ValueError):
        parse_text("HUBO N=x\n")
    with pytest.raises(ValueError):
        parse_text("HUBO N=3\n4 0 1 2 3 1.0\n")  # unsupported order
    with pytest.raises(ValueError):
        parse_text("HUBO N=3\n2 1 0 1.0\n")  # indices must ascend
    with pytest.raises(ValueError):
        parse_text("HUBO N=3\n1 5 1.0\n")  # out of range
    with pytest.raises(ValueError):
        parse_text("HUBO N=3\n2 0 1.0\n")  # wrong field count
    with pytest.raises(ValueError):
        parse_text("HUBO N=3\n1 0 1.0 2.0\n")  # too many fields


def test_json_round_trip(tmp_path):
    p = HuboProblem.from_terms(4, **AWKWARD)
    doc = problem_to_dict(p)
    q = problem_from_dict(json.loads(json.dumps(doc)))
    assert np.array_equal(q.pair_vals, p.pair_vals)
    assert np.array_equal(q.tri_vals, p.tri_vals)

    path = tmp_path / "p.json"
    save_problem(p, str(path), fmt="json")
    r = load_problem(str(path))
    assert np.array_equal(r.lin_vals, p.lin_vals)


def test_load_sniffs_format(tmp_path):
    p = random_hubo(5, seed=8)
    t_path, j_path = tmp_path / "p.hubo", tmp_path / "p.json"
    save_problem(p, str(t_path), fmt="text")
    save_problem(p, str(j_path), fmt="json")
    a, b = load_problem(str(t_path)), load_problem(str(j_path))
    assert problem_to_text(a) == problem_to_text(b) == problem_to_text(p)


def test_save_problem_bytes_stable(tmp_path):
    p1, p2 = tmp_path / "a.hubo", tmp_path / "b.hubo"
    save_problem(random_hubo(6, seed=4), str(p1))
    save_problem(random_hubo(6, seed=4), str(p2))
    assert p1.read_bytes() == p2.read_bytes()
