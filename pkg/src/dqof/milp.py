"""Linearization of binary polynomials to mixed-integer linear models.

Every pairwise term gets a product variable y_ij with the standard three
inequalities (y <= x_i, y <= x_j, y >= x_i + x_j - 1); every cubic term gets
z_ijr with the four-inequality analogue. The model is written in the CPLEX LP
text dialect; rows are generated lazily so that exports of dense large
instances stream instead of materializing tens of millions of strings.

Solving is delegated: if the environment variable DQOF_MILP_SOLVER names an
executable, it is invoked on the written file and the objective value is
scraped from its output; otherwise exports are files only.
"""
from __future__ import annotations

import os
import re
import subprocess
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .hubo import HuboProblem, as_bits

SOLVER_ENV_VAR = "DQOF_MILP_SOLVER"


@dataclass(frozen=True, eq=False)
class MilpModel:
    """Lazy view of the linearized model for one problem."""

    hubo: HuboProblem

    # -- naming --------------------------------------------------------------

    @staticmethod
    def x(i: int) -> str:
        return f"x{i}"

    @staticmethod
    def y(i: int, j: int) -> str:
        return f"y_{i}_{j}"

    @staticmethod
    def z(i: int, j: int, r: int) -> str:
        return f"z_{i}_{j}_{r}"

    # -- counts ---------------------------------------------------------------

    @property
    def num_product_vars(self) -> int:
        return int(self.hubo.pair_keys.size + self.hubo.tri_keys.size)

    @property
    def num_variables(self) -> int:
        return self.hubo.n_vars + self.num_product_vars

    @property
    def num_constraints(self) -> int:
        return int(3 * self.hubo.pair_keys.size + 4 * self.hubo.tri_keys.size)

    # -- rows ------------------------------------------------------------------

    def variable_names(self) -> Iterator[str]:
        for i in range(self.hubo.n_vars):
            yield self.x(i)
        pi, pj = self.hubo.pair_cols()
        for i, j in zip(pi, pj):
            yield self.y(int(i), int(j))
        ti, tj, tr = self.hubo.tri_cols()
        for i, j, r in zip(ti, tj, tr):
            yield self.z(int(i), int(j), int(r))

    def objective_terms(self) -> Iterator[tuple[float, str]]:
        for i, c in zip(self.hubo.lin_keys, self.hubo.lin_vals):
            yield float(c), self.x(int(i))
        pi, pj = self.hubo.pair_cols()
        for i, j, c in zip(pi, pj, self.hubo.pair_vals):
            yield float(c), self.y(int(i), int(j))
        ti, tj, tr = self.hubo.tri_cols()
        for i, j, r, c in zip(ti, tj, tr, self.hubo.tri_vals):
            yield float(c), self.z(int(i), int(j), int(r))

    def constraints(self) -> Iterator[tuple[str, list[tuple[float, str]], str, float]]:
        """Rows as (name, [(coeff, var)...], sense, rhs); sense in {<=, >=}."""
        idx = 0
        pi, pj = self.hubo.pair_cols()
        for i, j in zip(pi, pj):
            i, j = int(i), int(j)
            prod = self.y(i, j)
            yield f"c{idx}", [(1.0, prod), (-1.0, self.x(i))], "<=", 0.0
            yield f"c{idx + 1}", [(1.0, prod), (-1.0, self.x(j))], "<=", 0.0
            yield (
                f"c{idx + 2}",
                [(1.0, prod), (-1.0, self.x(i)), (-1.0, self.x(j))],
                ">=",
                -1.0,
            )
            idx += 3
        ti, tj, tr = self.hubo.tri_cols()
        for i, j, r in zip(ti, tj, tr):
            i, j, r = int(i), int(j), int(r)
            prod = self.z(i, j, r)
            yield f"c{idx}", [(1.0, prod), (-1.0, self.x(i))], "<=", 0.0
            yield f"c{idx + 1}", [(1.0, prod), (-1.0, self.x(j))], "<=", 0.0
            yield f"c{idx + 2}", [(1.0, prod), (-1.0, self.x(r))], "<=", 0.0
            yield (
                f"c{idx + 3}",
                [(1.0, prod), (-1.0, self.x(i)), (-1.0, self.x(j)), (-1.0, self.x(r))],
                ">=",
                -2.0,
            )
            idx += 4

    # -- evaluation -------------------------------------------------------------

    def implied_assignment(self, x) -> dict[str, int]:
        """x plus the product-variable values it implies (all constraints tight)."""
        bits = as_bits(x, self.hubo.n_vars)
        values = {self.x(i): int(b) for i, b in enumerate(bits)}
        pi, pj = self.hubo.pair_cols()
        for i, j in zip(pi, pj):
            values[self.y(int(i), int(j))] = int(bits[i]) * int(bits[j])
        ti, tj, tr = self.hubo.tri_cols()
        for i, j, r in zip(ti, tj, tr):
            values[self.z(int(i), int(j), int(r))] = int(bits[i]) * int(bits[j]) * int(bits[r])
        return values

    def objective_value(self, values: dict[str, int]) -> float:
        return float(sum(c * values[name] for c, name in self.objective_terms()))

    def constraints_satisfied(self, values: dict[str, int]) -> bool:
        for _, row, sense, rhs in self.constraints():
            lhs = sum(c * values[v] for c, v in row)
            if sense == "<=" and lhs > rhs + 1e-12:
                return False
            if sense == ">=" and lhs < rhs - 1e-12:
                return False
        return True


def linearize_to_milp(hubo: HuboProblem) -> MilpModel:
    return MilpModel(hubo=hubo)


def _fmt(c: float) -> str:
    return f"+ {c!r}" if c >= 0 else f"- {-c!r}"


def write_lp(model: MilpModel, path: str) -> None:
    """Write the model in CPLEX LP format (streaming; rows never materialize)."""
    with open(path, "w", newline="\n") as fh:
        fh.write("\\ binary polynomial linearization\n")
        fh.write("Minimize\n obj:")
        wrote_any = False
        col = 5
        for c, name in model.objective_terms():
            tok = f" {_fmt(c)} {name}"
            if col + len(tok) > 220:
                fh.write("\n   ")
                col = 3
            fh.write(tok)
            col += len(tok)
            wrote_any = True
        if not wrote_any:
            fh.write(f" 0 {MilpModel.x(0)}")
        fh.write("\nSubject To\n")
        for name, row, sense, rhs in model.constraints():
            terms = " ".join(f"{_fmt(c)} {v}" for c, v in row)
            fh.write(f" {name}: {terms} {sense} {rhs!r}\n")
        fh.write("Binaries\n")
        col = 0
        for name in model.variable_names():
            if col + len(name) + 1 > 220:
                fh.write("\n")
                col = 0
            fh.write(f" {name}")
            col += len(name) + 1
        fh.write("\nEnd\n")


_OBJECTIVE_RE = re.compile(
    r"objective[^-+0-9]*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)", re.IGNORECASE
)


def external_solver_path() -> str | None:
    exe = os.environ.get(SOLVER_ENV_VAR, "").strip()
    return exe or None


def solve_lp_with_external(lp_path: str, timeout: float | None = None) -> float | None:
    """Run the configured solver on a written LP file; None when unconfigured.

    The solver's stdout is scanned for a line mentioning an objective value;
    a run that produces none raises.
    """
    exe = external_solver_path()
    if exe is None:
        return None
    proc = subprocess.run(
        [exe, lp_path], capture_output=True, text=True, timeout=timeout
    )
    if proc.returncode != 0:
        raise RuntimeError(
            f"external solver exited with status {proc.returncode}: {proc.stderr.strip()[:500]}"
        )
    match = _OBJECTIVE_RE.search(proc.stdout)
    if match is None:
        raise RuntimeError("external solver output contained no objective value")
    return float(match.group(1))
