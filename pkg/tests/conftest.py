"""Shared fixtures and independent oracle helpers.

The oracles here deliberately avoid the production code paths they check:
energies are summed with explicit Python loops over the dict views, and
exhaustive minimization enumerates assignments with itertools.
"""
from __future__ import annotations

import itertools

import numpy as np
import pytest

from dqof.hubo import HuboProblem


@pytest.fixture
def instance3() -> HuboProblem:
    """Three variables: h=(1,-1,0), one pair (0,1)->2, one triple (0,1,2)->-3."""
    return HuboProblem.from_terms(
        3,
        linear={0: 1.0, 1: -1.0, 2: 0.0},
        quadratic={(0, 1): 2.0},
        cubic={(0, 1, 2): -3.0},
    )


def energy_by_hand(problem: HuboProblem, bits) -> float:
    """Term-by-term energy via the dict views and explicit Python loops."""
    x = [int(b) for b in bits]
    total = 0.0
    for i, c in problem.linear.items():
        total += c * x[i]
    for (i, j), c in problem.quadratic.items():
        total += c * x[i] * x[j]
    for (i, j, r), c in problem.cubic.items():
        total += c * x[i] * x[j] * x[r]
    return total


def exhaustive_minima(problem: HuboProblem):
    """All minimizing assignments and the minimum energy, by enumeration."""
    best = None
    argmins = []
    for bits in itertools.product((0, 1), repeat=problem.n_vars):
        e = energy_by_hand(problem, bits)
        if best is None or e < best - 1e-15:
            best, argmins = e, [bits]
        elif abs(e - best) <= 1e-15:
            argmins.append(bits)
    return argmins, best


def dense_circuit_oracle(diag: np.ndarray, gammas, betas) -> np.ndarray:
    """QAOA state via explicit 2^n x 2^n matrix products.

    Qubit j is bit j of the basis index, so the single-qubit factor for
    qubit 0 sits rightmost in the Kronecker product.
    """
    dim = diag.size
    n = dim.bit_length() - 1
    state = np.full(dim, 1.0 / np.sqrt(dim), dtype=complex)
    for gamma, beta in zip(gammas, betas):
        phase = np.diag(np.exp(-1j * gamma * diag))
        rx = np.array(
            [

                [np.cos(beta), -1j * np.sin(beta)],
                [-1j * np.sin(beta), np.cos(beta)],
            ]
        )
        mixer = np.array([[1.0]])
        for _ in range(n):
            mixer = np.kron(rx, mixer)
        state = mixer @ (phase @ state)
    return state
