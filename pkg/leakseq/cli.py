"""
Command-line entry point.

    leakseq sweep --lengths 1-16 --out results
    leakseq sweep --lengths 1-16 --local-noise --sigma-local 0.002
    leakseq sigma-grid --archive results/solutions_zz.json --n 16
    leakseq baseline --eval-m 1000
    leakseq verify --archive results/solutions_zz.json

Defaults come from the environment (.env is honoured), flags override them.
"""

import argparse
import dataclasses
import json
import logging
import os
import sys
from typing import Dict, List, Optional

from dotenv import load_dotenv

from .archive import (
    RunManifest,
    SolutionRecord,
    archive_by_length,
    options_snapshot,
    read_archive,
    write_archive,
    write_grid_csv,
    write_manifest,
    write_sweep_csv,
)
from .engine import SequenceEngine, divisor_chain, verify_archive
from .exceptions import DomainError, LeakSeqError
from .noise import NoiseConfig
from .optimizer import OptimizerOptions
from .sequence_model import InteractionKind
from .utils import format_fidelity, parse_axis, parse_lengths

load_dotenv()

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURES = 1
EXIT_USAGE = 2


def _env(name: str, default, cast=str):
    value = os.getenv(name)
    return default if value in (None, "") else cast(value)


def _argtype(parse):
    def convert(text):
        try:
            return parse(text)
        except DomainError as e:
            raise argparse.ArgumentTypeError(str(e)) from e

    return convert


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--interaction", choices=[k.value for k in InteractionKind], default="zz")
    common.add_argument("--m", type=int, default=_env("LEAKSEQ_M", 100, int), help="training ensemble size")
    common.add_argument("--eval-m", type=int, default=_env("LEAKSEQ_EVAL_M", 1000, int), help="out-of-sample ensemble size")
    common.add_argument("--sigma-logical", type=float, default=_env("LEAKSEQ_SIGMA_NONLOCAL", 0.065, float))
    common.add_argument("--sigma-leakage", type=float, default=_env("LEAKSEQ_SIGMA_NONLOCAL", 0.065, float))
    common.add_argument("--sigma-local", type=float, default=_env("LEAKSEQ_SIGMA_LOCAL", 0.002, float))
    common.add_argument("--local-noise", action="store_true", help="perturb the interleaved rotations")
    common.add_argument("--virtual-z", action="store_true", help="error-free sigma_z (gamma) rotations")
    common.add_argument("--shared-local-coefficient", action="store_true",
                        help="one multiplicative angle error per step instead of one per angle")
    common.add_argument("--gamma-outside-magnitude", dest="gamma_in_magnitude", action="store_false",
                        help="leave gamma angles out of the leakage-factor magnitudes")
    common.add_argument("--seed", type=int, default=_env("LEAKSEQ_SEED", 1234, int))
    common.add_argument("--restarts", type=int, default=0, help="extra random-start local searches per length")
    common.add_argument("--max-iterations", type=int, default=15000)
    common.add_argument("--workers", type=int, default=1, help="processes for sigma-grid cells")
    common.add_argument("--out", default=_env("LEAKSEQ_OUT", "results"), help="output directory")
    common.add_argument("--db", nargs="?", const=_env("DATABASE_URL", "sqlite:///./leakseq.db"), default=None,
                        help="record runs and solutions in a SQL database")
    common.add_argument("--log-level", default=_env("LEAKSEQ_LOG_LEVEL", "INFO"),
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], type=str.upper)

    parser = argparse.ArgumentParser(prog="leakseq", description="Leakage-suppressing composite entangling sequences")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", parents=[common], help="solve one length (and its divisor chain)")
    p.add_argument("--n", type=int, required=True)

    p = sub.add_parser("sweep", parents=[common], help="solve a range of lengths")
    p.add_argument("--lengths", type=_argtype(parse_lengths), default=parse_lengths("1-16"))
    p.add_argument("--resume", action="store_true", help="reuse stored solutions as warm starts")

    p = sub.add_parser("sigma-grid", parents=[common], help="noise-sensitivity grid of a stored solution")
    p.add_argument("--archive", required=True)
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--sigma-logical-axis", type=_argtype(parse_axis), default=parse_axis("0:0.13:5"))
    p.add_argument("--sigma-leakage-axis", type=_argtype(parse_axis), default=parse_axis("0:0.13:5"))

    p = sub.add_parser("baseline", parents=[common], help="gate error without interleaved rotations")
    p.add_argument("--n", type=int, default=16)

    p = sub.add_parser("local-fidelity", parents=[common], help="average fidelity of noisy local rotations")
    p.add_argument("--samples", type=int, default=1000)

    p = sub.add_parser("verify", parents=[common], help="re-evaluate every record of an archive")
    p.add_argument("--archive", required=True)
    p.add_argument("--tol", type=float, default=1e-10)

    p = sub.add_parser("evaluate", parents=[common], help="evaluate a stored solution under other noise settings")
    p.add_argument("--archive", required=True)
    p.add_argument("--n", type=int, required=True)

    return parser


def config_from_args(args) -> NoiseConfig:
    return NoiseConfig(
        sigma_logical=args.sigma_logical,
        sigma_leakage=args.sigma_leakage,
        sigma_local=args.sigma_local,
        local_enabled=args.local_noise,
        virtual_z=args.virtual_z,
        m_realizations=args.m,
        seed=args.seed,
        shared_local_coefficient=args.shared_local_coefficient,
        gamma_in_magnitude=args.gamma_in_magnitude,
    )


def engine_from_args(args, config: Optional[NoiseConfig] = None) -> SequenceEngine:
    opts = OptimizerOptions(max_iterations=args.max_iterations, max_evaluations=args.max_iterations,
                            restarts=args.restarts)
    return SequenceEngine(
        interaction=InteractionKind(args.interaction),
        config=config or config_from_args(args),
        opts=opts,
        eval_m=args.eval_m,
        workers=args.workers,
    )


def _find_record(path: str, n: int, interaction: InteractionKind) -> SolutionRecord:
    for record in read_archive(path):
        if record.n_steps == n and record.interaction is interaction:
            return record
    raise DomainError(f"{path} holds no {interaction.value} solution for N={n}")


def _print_sweep(rows: List[Dict]):
    print(f"{'N':>4}  {'in-sample':>12}  {'out-of-sample':>13}  {'fidelity':>9}  {'PE error':>10}  iterations")
    for row in rows:
        if row["status"] != "completed":
            print(f"{row['N']:>4}  failed: {row['error']}")
            continue
        print(f"{row['N']:>4}  {row['in_sample_error']:>12.6g}  {row['oos_error']:>13.6g}  "
              f"{format_fidelity(row['oos_error']):>9}  {row['pe_error']:>10.3g}  {row['iterations']}")


def _solve(args, lengths: List[int]) -> int:
    config = config_from_args(args)
    engine = engine_from_args(args, config)
    interaction = engine.interaction
    archive_path = os.path.join(args.out, f"solutions_{interaction.value}.json")
    manifest_name = f"manifest_{args.command}_{interaction.value}.json"

    previous: Dict[int, SolutionRecord] = {}
    warm_start = {}
    if getattr(args, "resume", False):
        if os.path.exists(archive_path):
            previous = {r.n_steps: r for r in read_archive(archive_path)
                        if r.interaction is interaction and r.config == config}
            warm_start.update(archive_by_length(previous.values(), interaction))
        if args.db:
            from .database import session_scope
            from .models import load_archive

            with session_scope() as db:
                warm_start.update(load_archive(db, interaction, config))
        logger.info("resuming with stored solutions for N=%s", sorted(warm_start))

    manifest = RunManifest(
        command=args.command,
        seed=config.seed,
        config=config.to_dict(),
        options={**options_snapshot(engine.opts), "interaction": interaction.value, "eval_m": engine.eval_m},
    )
    run = None
    if args.db:
        from .database import session_scope
        from .models import save_run

        with session_scope() as db:
            run = save_run(db, manifest).id

    rows, records = engine.run_length_sweep(lengths, warm_start)
    records = [dataclasses.replace(r, manifest=manifest_name) for r in records]
    manifest.iterations = {r.n_steps: r.iterations for r in records}
    failed = any(row["status"] != "completed" for row in rows)

    merged = {**previous, **{r.n_steps: r for r in records}}
    write_archive(merged.values(), archive_path)
    write_sweep_csv(rows, os.path.join(args.out, f"sweep_{interaction.value}.csv"))
    write_manifest(manifest, os.path.join(args.out, manifest_name))

    if args.db:
        from .database import session_scope
        from .models import Run, finish_run, save_solution

        with session_scope() as db:
            stored = db.query(Run).get(run)
            for record in records:
                save_solution(db, stored, record)
            finish_run(db, stored, manifest, failed=failed)

    _print_sweep(rows)
    return EXIT_FAILURES if failed else EXIT_OK


def cmd_optimize(args) -> int:
    if args.n < 1:
        raise DomainError(f"--n must be >= 1, got {args.n}")
    return _solve(args, divisor_chain(args.n))


def cmd_sweep(args) -> int:
    return _solve(args, args.lengths)


def cmd_sigma_grid(args) -> int:
    engine = engine_from_args(args)
    record = _find_record(args.archive, args.n, engine.interaction)
    rows = engine.run_sigma_grid(record, args.sigma_logical_axis, args.sigma_leakage_axis, args.eval_m, args.seed)
    write_grid_csv(rows, os.path.join(args.out, f"sigma_grid_{record.interaction.value}_N{record.n_steps}.csv"))
    for row in rows:
        print(f"sigma_logical={row['sigma_logical']:.4g}  sigma_leakage={row['sigma_leakage']:.4g}  "
              f"gate error={row['gate_error']:.6g}")
    return EXIT_OK


def cmd_baseline(args) -> int:
    engine = engine_from_args(args)
    error = engine.run_baseline(args.n, args.eval_m)
    print(f"baseline gate error (N={args.n}, {engine.interaction.value}): {error:.6g} ({format_fidelity(error)} fidelity)")
    return EXIT_OK


def cmd_local_fidelity(args) -> int:
    fidelity = engine_from_args(args).local_fidelity(args.sigma_local, args.samples, args.seed)
    print(f"local rotation fidelity at sigma_local={args.sigma_local:g}: {fidelity:.6f}")
    return EXIT_OK


def cmd_verify(args) -> int:
    mismatches = verify_archive(args.archive, args.tol)
    for item in mismatches:
        print(json.dumps(item))
    if mismatches:
        print(f"{len(mismatches)} mismatching value(s) in {args.archive}")
        return EXIT_FAILURES
    print(f"all records in {args.archive} reproduce")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    engine = engine_from_args(args)
    record = _find_record(args.archive, args.n, engine.interaction)
    metrics = engine.evaluate_solution(record, engine.config, args.eval_m, args.seed)
    print(json.dumps(metrics, indent=2))
    return EXIT_OK


COMMANDS = {
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "sigma-grid": cmd_sigma_grid,
    "baseline": cmd_baseline,
    "local-fidelity": cmd_local_fidelity,
    "verify": cmd_verify,
    "evaluate": cmd_evaluate,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    if args.db:
        from .database import configure, create_tables

        configure(args.db)
        create_tables()

    try:
        return COMMANDS[args.command](args)
    except DomainError as e:
        logger.error("%s", e)
        return EXIT_USAGE
    except LeakSeqError as e:
        logger.error("%s failed: %s", args.command, e)
        return EXIT_FAILURES


if __name__ == "__main__":
    sys.exit(main())
