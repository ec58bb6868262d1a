"""Problem file formats.

Text format (canonical, line oriented):

    HUBO N=<int>
    1 <i> <coeff>
    2 <i> <j> <coeff>
    3 <i> <j> <r> <coeff>

Indices within a line ascend; the writer additionally emits terms grouped by
order with keys ascending, so identical problems serialize to identical
bytes. Coefficients are written as shortest round-trip decimals and parsed
back exactly, so round-trips are lossless for IEEE doubles.

The structured-object format is a JSON document with the same content,
intended for tooling.
"""
from __future__ import annotations

import io
import json
import os

import numpy as np

from .hubo import HuboProblem

_TEXT_HEADER = "HUBO N="
_CHUNK = 200_000


def _write_term_lines(fh, order: int, cols: list[np.ndarray], vals: np.ndarray) -> None:
    for start in range(0, vals.size, _CHUNK):
        stop = min(start + _CHUNK, vals.size)
        rows = []
        idx = [c[start:stop] for c in cols]
        for k, v in enumerate(vals[start:stop]):
            ix = " ".join(str(int(c[k])) for c in idx)
            rows.append(f"{order} {ix} {v!r}\n")
        fh.write("".join(rows))


def dump_text(problem: HuboProblem, fh) -> None:
    fh.write(f"{_TEXT_HEADER}{problem.n_vars}\n")
    _write_term_lines(fh, 1, [problem.lin_keys], problem.lin_vals)
    pi, pj = problem.pair_cols()
    _write_term_lines(fh, 2, [pi, pj], problem.pair_vals)
    ti, tj, tr = problem.tri_cols()
    _write_term_lines(fh, 3, [ti, tj, tr], problem.tri_vals)


def problem_to_text(problem: HuboProblem) -> str:
    buf = io.StringIO()
    dump_text(problem, buf)
    return buf.getvalue()


def parse_text(text_or_fh) -> HuboProblem:
    if isinstance(text_or_fh, str):
        text_or_fh = io.StringIO(text_or_fh)
    header = text_or_fh.readline().strip()
    if not header.startswith(_TEXT_HEADER):
        raise ValueError(f"bad problem header {header!r}; expected '{_TEXT_HEADER}<int>'")
    try:
        n_vars = int(header[len(_TEXT_HEADER):])
    except ValueError:
        raise ValueError(f"bad problem header {header!r}; size is not an integer") from None

    # pandas' C parser handles the ragged 3/4/5-field rows and parses floats
    # with exact round-trip semantics; a Python line loop is far too slow for
    # dense 500-variable files (~2e7 lines).
    import pandas as pd

    try:
        df = pd.read_csv(
            text_or_fh,
            sep=r"\s+",
            header=None,
            names=["order", "a", "b", "c", "d"],
            float_precision="round_trip",
        )
    except pd.errors.EmptyDataError:
        return HuboProblem.from_terms(n_vars)

    order = df["order"].to_numpy()
    if not np.isin(order, (1, 2, 3)).all():
        bad = order[~np.isin(order, (1, 2, 3))][0]
        raise ValueError(f"unsupported term order {bad}; only orders 1..3 exist")

    def cols(mask, names):
        sub = df.loc[mask, names]
        if sub.isna().to_numpy().any():
            raise ValueError("malformed term line: wrong field count for its order")
        return [sub[c].to_numpy() for c in names]

    m1 = order == 1
    m2 = order == 2
    m3 = order == 3
    if (df.loc[m1, ["c", "d"]].notna().to_numpy().any()
            or df.loc[m2, "d"].notna().to_numpy().any()):
        raise ValueError("malformed term line: too many fields for its order")

    lin_i, lin_c = cols(m1, ["a", "b"])
    pr_i, pr_j, pr_c = cols(m2, ["a", "b", "c"])
    tr_i, tr_j, tr_r, tr_c = cols(m3, ["a", "b", "c", "d"])

    def as_idx(arr):
        out = arr.astype(np.int64)
        if not np.array_equal(out, arr):
            raise ValueError("term indices must be integers")
        return out

    n = n_vars
    lin_k = as_idx(lin_i)
    pi, pj = as_idx(pr_i), as_idx(pr_j)
    ti, tj, tr = as_idx(tr_i), as_idx(tr_j), as_idx(tr_r)
    for idx in (lin_k, pi, pj, ti, tj, tr):
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise ValueError(f"term index out of range for {n} variables")
    if np.any(pi >= pj) or np.any(ti >= tj) or np.any(tj >= tr):
        raise ValueError("term indices must ascend within a line")
    return HuboProblem._from_key_arrays(
        n,
        lin_k, lin_c.astype(np.float64),
        pi * n + pj, pr_c.astype(np.float64),
        (ti * n + tj) * n + tr, tr_c.astype(np.float64),
    )


def problem_to_dict(problem: HuboProblem) -> dict:
    pi, pj = problem.pair_cols()
    ti, tj, tr = problem.tri_cols()
    return {
        "format": "hubo",
        "n_vars": problem.n_vars,
        "linear": [[int(i), float(c)] for i, c in zip(problem.lin_keys, problem.lin_vals)],
        "quadratic": [
            [int(i), int(j), float(c)] for i, j, c in zip(pi, pj, problem.pair_vals)
        ],
        "cubic": [
            [int(i), int(j), int(r), float(c)]
            for i, j, r, c in zip(ti, tj, tr, problem.tri_vals)
        ],
    }


def problem_from_dict(doc: dict) -> HuboProblem:
    if doc.get("format") != "hubo":
        raise ValueError("not a hubo document (missing format marker)")
    return HuboProblem.from_terms(
        int(doc["n_vars"]),
        {int(i): c for i, c in doc.get("linear", [])},
        {(int(i), int(j)): c for i, j, c in doc.get("quadratic", [])},
        {(int(i), int(j), int(r)): c for i, j, r, c in doc.get("cubic", [])},
    )


def save_problem(problem: HuboProblem, path: str, fmt: str = "text") -> None:
    if fmt == "text":
        with open(path, "w", newline="\n") as fh:
            dump_text(problem, fh)
    elif fmt == "json":
        with open(path, "w", newline="\n") as fh:
            json.dump(problem_to_dict(problem), fh)
            fh.write("\n")
    else:
        raise ValueError(f"unknown problem format {fmt!r}")


def load_problem(path: str) -> HuboProblem:
    """Load either format; sniffs JSON by its leading brace."""
    with open(path, "r") as fh:
        first = fh.read(1)
        fh.seek(0)
        if first == "{":
            return problem_from_dict(json.load(fh))
        return parse_text(fh)
