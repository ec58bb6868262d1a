"""Toolkit for dense higher-order binary optimization.

Core pieces: a sparse cubic-polynomial problem type with exact evaluation and
an exhaustive reference solver; an exact QAOA statevector simulator for
sub-problem solves; a clustering layer that batches equal-width sub-problems
into one wide circuit at unchanged depth; the distributed
decompose/solve/aggregate engine; classical baselines (native and quadratized
annealing, MILP linearization export); and a surrogate-model bridge that
extracts problem coefficients from a trained third-order factorization
machine.
"""

from .annealing import AnnealSchedule, default_schedule, simulated_annealing
from .cluster import (
    CombinedHamiltonian,
    DepthWidthReport,
    combine,
    depth_width_report,
    joint_expectation,
    simulate_combined_blockwise,
    split_bitstring,
)
from .engine import DqofConfig, InstanceState, RunReport, aggregate, decompose, run_dqof, run_instance
from .fm import FactorizationMachine, fm_fit, fm_predict, fm_to_hubo
from .hubo import (
    Adjacency,
    BRUTE_FORCE_CAP,
    CapExceededError,
    HuboProblem,
    QualityMetrics,
    SubHubo,
    approximation_ratio,
    brute_force,
    build_adjacency,
    evaluate,
    evaluate_flip_delta,
    extract_sub_hubo,
    random_hubo,
    relative_accuracy,
)
from .milp import MilpModel, linearize_to_milp, write_lp
from .qaoa import (
    QaoaParams,
    QaoaSettings,
    SampleHistogram,
    apply_mixer,
    apply_phase,
    build_cost_diagonal,
    expectation,
    optimize_params,
    run_circuit,
    sample,
    solve_sub_hubo,
)
from .quadratization import QuboProblem, penalty_soundness_check, quadratize, sufficient_penalty
from .serialize import load_problem, save_problem

__version__ = "0.1.0"
