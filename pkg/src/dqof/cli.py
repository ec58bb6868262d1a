"""Command-line front end.

Subcommands: generate (write a problem file), solve (run one solver on a
problem file), bench (run a sweep from a preset or JSON spec), fm (fit /
extract / verify a surrogate), verify (run the invariant suite).

Exit statuses: 0 success, 1 unexpected error, 2 usage (argparse), 3 malformed
input file or configuration, 4 size-cap violation, 5 a verify check failed.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .bench import (
    BenchSpec,
    ResultRow,
    append_result_csv,
    preset,
    run_bench,
    run_solver,
)
from .hubo import BRUTE_FORCE_CAP, CapExceededError, brute_force, random_hubo
from .serialize import load_problem, save_problem


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    parser.add_argument(
        "--workers", type=int, default=1, help="parallel worker budget (no effect on results)"
    )
    parser.add_argument(
        "--stable-output",
        action="store_true",
        help="zero volatile fields (timings, timestamps) for byte-stable files",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dqof",
        description="higher-order binary optimization toolkit: generator, solvers, benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a random problem file")
    _add_common(p)
    p.add_argument("--n-vars", type=int, required=True)
    p.add_argument("--density", type=float, default=1.0)
    p.add_argument("--coeff-law", choices=["normal", "uniform"], default="normal")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("-o", "--out", required=True, help="output problem file")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="run one solver on a problem file")
    _add_common(p)
    p.add_argument("--problem", required=True, help="problem file (text or json)")
    p.add_argument(
        "--solver",
        required=True,
        choices=["dqof", "sa", "sa-quadratized", "brute", "export-lp"],
    )
    p.add_argument("-o", "--out", default=".", help="output directory")
    p.add_argument("--experiment", default="adhoc")
    p.add_argument("--reference-energy", type=float, default=None)
    # engine knobs
    p.add_argument("--sub-size", type=int, default=None)
    p.add_argument("--num-subs", type=int, default=None)
    p.add_argument("--instances", type=int, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--cluster-size", type=int, default=None)
    p.add_argument("--joint-cluster-opt", action="store_true")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--budget", type=int, default=None)
    # annealer knobs
    p.add_argument("--sweeps", type=int, default=None)
    p.add_argument("--t-initial", type=float, default=None)
    p.add_argument("--t-final", type=float, default=None)
    p.add_argument("--penalty", type=float, default=None, help="quadratization strength")
    # brute knob
    p.add_argument("--cap", type=int, default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run a sweep from a preset or a JSON spec")
    _add_common(p)
    p.add_argument("spec", help="preset name (fig1b, fig3, fig1d) or path to a JSON spec")
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.add_argument("--sizes", default=None, help="comma-separated size override")
    p.add_argument("--reps", type=int, default=None, help="repetition override")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("fm", help="surrogate model operations")
    _add_common(p)
    fm_sub = p.add_subparsers(dest="fm_command", required=True)

    pf = fm_sub.add_parser("fit", help="fit a surrogate to a bit/target CSV dataset")
    _add_common(pf)
    pf.add_argument("--data", required=True)
    pf.add_argument("--rank", type=int, required=True)
    pf.add_argument("--epochs", type=int, default=300)
    pf.add_argument("--learning-rate", type=float, default=0.02)
    pf.add_argument("--l2", type=float, default=0.0)
    pf.add_argument("-o", "--out", required=True, help="model JSON path")
    pf.set_defaults(func=cmd_fm_fit)

    pe = fm_sub.add_parser("extract", help="map a fitted model to a problem file")
    _add_common(pe)
    pe.add_argument("--model", required=True)
    pe.add_argument("--format", choices=["text", "json"], default="text")
    pe.add_argument("-o", "--out", required=True, help="problem file path")
    pe.set_defaults(func=cmd_fm_extract)

    pv = fm_sub.add_parser("verify", help="exhaustively check model vs extracted problem")
    _add_common(pv)
    pv.add_argument("--model", required=True)
    pv.add_argument("--cap", type=int, default=16)
    pv.set_defaults(func=cmd_fm_verify)

    p = sub.add_parser("verify", help="run the invariant suite")
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    return parser


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> int:
    problem = random_hubo(args.n_vars, density=args.density, coeff_law=args.coeff_law, seed=args.seed)
    save_problem(problem, args.out, fmt=args.format)
    print(f"wrote {args.out}: {problem.n_vars} variables, {problem.num_terms} terms")
    return 0


def _solver_cfg_from_args(args) -> dict:
    cfg: dict = {"name": args.solver}
    mapping = {
        "sub_size": args.sub_size,
        "num_subs": args.num_subs,
        "instances": args.instances,
        "iterations": args.iterations,
        "cluster_size": args.cluster_size,
        "depth": args.depth,
        "shots": args.shots,
        "budget": args.budget,
        "sweeps": args.sweeps,
        "t_initial": args.t_initial,
        "t_final": args.t_final,
        "penalty": args.penalty,
        "cap": args.cap,
    }
    cfg.update({k: v for k, v in mapping.items() if v is not None})
    if args.joint_cluster_opt:
        cfg["joint_cluster_optimization"] = True
    if args.solver in ("sa", "sa-quadratized") and args.iterations is not None:
        cfg.pop("iterations", None)  # annealer length is --sweeps
    return cfg


def cmd_solve(args) -> int:
    problem = load_problem(args.problem)
    os.makedirs(args.out, exist_ok=True)
    row, report = run_solver(
        problem,
        _solver_cfg_from_args(args),
        seed=args.seed,
        workers=args.workers,
        experiment=args.experiment,
        outdir=args.out,
    )
    if args.reference_energy is not None and row.energy is not None:
        from .hubo import approximation_ratio

        row.reference_energy = args.reference_energy
        row.approximation_ratio = approximation_ratio(row.energy, args.reference_energy)
        report["reference_energy"] = row.reference_energy
        report["approximation_ratio"] = row.approximation_ratio

    report_path = os.path.join(
        args.out, f"{args.experiment}_{args.solver}_N{problem.n_vars}_seed{args.seed}.json"
    )
    from .bench import _write_report

    _write_report(report, report_path, args.stable_output)
    append_result_csv(row, os.path.join(args.out, "results.csv"), args.stable_output)

    if row.energy is not None:
        line = f"{args.solver}: energy {row.energy!r}"
        if row.approximation_ratio is not None:
            line += f", approximation ratio {row.approximation_ratio!r}"
        print(line)
    else:
        print(f"{args.solver}: {report.get('status', 'done')}")
    print(f"report: {report_path}")
    return 0


def cmd_bench(args) -> int:
    if os.path.exists(args.spec):
        spec = BenchSpec.from_json_file(args.spec)
    else:
        spec = preset(args.spec)
    if args.seed:
        spec.seed_base = args.seed
    if args.sizes:
        try:
            spec.sizes = [int(s) for s in args.sizes.split(",") if s]
        except ValueError:
            raise ValueError(f"bad --sizes value {args.sizes!r}") from None
    if args.reps:
        spec.reps = args.reps
    out = run_bench(spec, args.out, workers=args.workers, stable=args.stable_output)
    print(f"results: {out['results']}")
    if out["comparison"]:
        print(f"comparison: {out['comparison']}")
    return 0


def cmd_fm_fit(args) -> int:
    from .fm import fm_fit, load_dataset

    X, y = load_dataset(args.data)
    model = fm_fit(
        X,
        y,
        rank=args.rank,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        seed=args.seed,
        l2=args.l2,
    )
    model.save(args.out)
    print(f"wrote {args.out}: {model.n_vars} variables, rank {model.rank}")
    return 0


def cmd_fm_extract(args) -> int:
    from .fm import FactorizationMachine, fm_to_hubo

    model = FactorizationMachine.load(args.model)
    problem, bias = fm_to_hubo(model)
    save_problem(problem, args.out, fmt=args.format)
    print(f"wrote {args.out}: {problem.num_terms} terms; constant offset {bias!r}")
    return 0


def cmd_fm_verify(args) -> int:
    from .fm import FactorizationMachine, fm_predict, fm_to_hubo
    from .hubo import evaluate, index_to_bits

    model = FactorizationMachine.load(args.model)
    if model.n_vars > args.cap:
        raise CapExceededError(
            f"exhaustive verification refused above {args.cap} variables"
        )
    problem, bias = fm_to_hubo(model)
    worst = 0.0
    for b in range(1 << model.n_vars):
        x = index_to_bits(b, model.n_vars)
        worst = max(worst, abs(fm_predict(model, x) - (bias + evaluate(problem, x))))
    ok = worst <= 1e-9
    print(f"{'PASS' if ok else 'FAIL'}: max |prediction - (bias + energy)| = {worst:.3e}")
    return 0 if ok else 5


def cmd_verify(args) -> int:
    from .verify import run_all

    failures = 0
    for name, passed, detail in run_all(seed=args.seed):
        print(f"{'PASS' if passed else 'FAIL'} {name}" + ("" if passed else f": {detail}"))
        failures += 0 if passed else 1
    return 0 if failures == 0 else 5


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CapExceededError as exc:
        print(f"error (size cap): {exc}", file=sys.stderr)
        return 4
    except (ValueError, json.JSONDecodeError, OSError) as exc:
        print(f"error (bad input): {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - last resort
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
