"""
Experiment orchestration: length sweeps, sigma-sensitivity grids, baselines
and re-evaluation of archived solutions.

Per-item work reports a dict with a `status` of "completed" or "error" so a
sweep can carry on past a failed length.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .archive import SolutionRecord, read_archive
from .exceptions import DomainError, LeakSeqError
from .noise import NoiseConfig, local_rotation_fidelity, sample_ensemble
from .optimizer import OptimizerOptions, evaluate_sequence, greatest_proper_divisor, optimize_sequence
from .sequence_model import InteractionKind, SequenceParams, evolution_operators, target_operator
from .metrics import gate_errors

logger = logging.getLogger(__name__)

VERIFY_TOL = 1e-10
RECOVERABLE_ERRORS = (LeakSeqError, np.linalg.LinAlgError)


def divisor_chain(n: int) -> List[int]:
    """Lengths that must be solved before n, ascending and ending in n"""
    chain = [n]
    while chain[0] > 1:
        d = greatest_proper_divisor(chain[0])
        if d == 1:
            break
        chain.insert(0, d)
    return chain


def _grid_cell(args: Tuple[SequenceParams, NoiseConfig]) -> float:
    params, config = args
    us = evolution_operators(params, sample_ensemble(config, params.n_steps))
    values = gate_errors(us, target_operator(params)).tolist()
    return sum(values) / len(values)


class SequenceEngine:
    def __init__(
        self,
        interaction: InteractionKind = InteractionKind.ZZ,
        config: NoiseConfig = NoiseConfig(),
        opts: OptimizerOptions = OptimizerOptions(),
        eval_m: int = 1000,
        workers: int = 1,
    ):
        if eval_m < 1:
            raise DomainError(f"eval_m must be >= 1, got {eval_m}")
        if workers < 1:
            raise DomainError(f"workers must be >= 1, got {workers}")
        self.interaction = InteractionKind(interaction)
        self.config = config
        self.opts = opts
        self.eval_m = eval_m
        self.workers = workers

    def optimize(self, n: int, archive: Mapping[int, SequenceParams]) -> Dict[str, Any]:
        """Solve one length; the result dict carries the record on success"""
        try:
            result = optimize_sequence(n, self.interaction, self.config, self.opts, archive, self.eval_m)
        except RECOVERABLE_ERRORS as e:
            logger.error("N=%d failed: %s", n, e)
            return {"status": "error", "N": n, "error": str(e)}

        record = SolutionRecord.from_result(result, self.config)
        return {
            "status": "completed",
            "N": n,
            "record": record,
            "in_sample_error": record.in_sample_error,
            "oos_error": record.oos_error,
            "pe_error": record.pe_error,
            "iterations": record.iterations,
            "converged": record.converged,
        }

    def run_length_sweep(
        self,
        lengths: Sequence[int],
        archive: Optional[Mapping[int, SequenceParams]] = None,
    ) -> Tuple[List[Dict[str, Any]], List[SolutionRecord]]:
        """Solve every length in ascending order, tiling earlier solutions as warm starts.

        Lengths already present in `archive` are reused as bootstrap sources
        but still re-optimized when listed.
        """
        lengths = [int(n) for n in lengths]
        if not lengths:
            raise DomainError("no lengths given")
        if any(n < 1 for n in lengths):
            raise DomainError(f"lengths must be >= 1, got {lengths}")
        if lengths != sorted(set(lengths)):
            raise DomainError(f"lengths must be strictly ascending, got {lengths}")

        solved: Dict[int, SequenceParams] = dict(archive or {})
        rows: List[Dict[str, Any]] = []
        records: List[SolutionRecord] = []
        for n in lengths:
            logger.info("sweep: N=%d (%d of %d)", n, len(rows) + 1, len(lengths))
            outcome = self.optimize(n, solved)
            record = outcome.pop("record", None)
            if record is not None:
                solved[n] = record.params
                records.append(record)
            else:
                solved.pop(n, None)
            rows.append(outcome)

        failed = [row["N"] for row in rows if row["status"] != "completed"]
        if failed:
            logger.warning("sweep finished with failures at N=%s", failed)
        return rows, records

    def run_sigma_grid(
        self,
        solution: SolutionRecord,
        sigma_logical_axis: Iterable[float],
        sigma_leakage_axis: Iterable[float],
        eval_m: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> List[Dict[str, Any]]:
        """Mean gate error of a fixed solution at every (sigma_logical, sigma_leakage)"""
        logical_axis = [float(s) for s in sigma_logical_axis]
        leakage_axis = [float(s) for s in sigma_leakage_axis]
        if not logical_axis or not leakage_axis:
            raise DomainError("sigma axes must be non-empty")

        eval_m = eval_m or self.eval_m
        seed = solution.eval_seed if seed is None else seed
        params = solution.params
        cells = [(a, b) for a in logical_axis for b in leakage_axis]
        jobs = [
            (params, solution.config.replace(sigma_logical=a, sigma_leakage=b, m_realizations=eval_m, seed=seed))
            for a, b in cells
        ]
        logger.info("sigma grid: %d cells, M=%d, seed=%d, workers=%d", len(jobs), eval_m, seed, self.workers)

        if self.workers > 1:
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                errors = list(pool.map(_grid_cell, jobs))
        else:
            errors = [_grid_cell(job) for job in jobs]

        return [
            {"sigma_logical": a, "sigma_leakage": b, "gate_error": error}
            for (a, b), error in zip(cells, errors)
        ]

    def run_baseline(self, n_steps: int = 16, eval_m: Optional[int] = None) -> float:
        """Gate error of the sequence with all rotations switched off"""
        config = self.config.replace(m_realizations=eval_m or self.eval_m)
        params = SequenceParams.zeros(self.interaction, n_steps)
        error = _grid_cell((params, config))
        logger.info("baseline N=%d (%s, M=%d): gate error %.6g", n_steps, self.interaction.value, config.m_realizations, error)
        return error

    def evaluate_solution(
        self,
        record: SolutionRecord,
        config: Optional[NoiseConfig] = None,
        eval_m: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> Dict[str, Any]:
        """Metrics of a stored solution under another noise configuration"""
        config = config or record.config
        config = config.replace(
            m_realizations=eval_m or record.eval_m,
            seed=record.eval_seed if seed is None else seed,
        )
        gate_error, pe_error = evaluate_sequence(record.params, sample_ensemble(config, record.n_steps))
        return {
            "N": record.n_steps,
            "interaction": record.interaction.value,
            "gate_error": gate_error,
            "fidelity": 1.0 - gate_error,
            "pe_error": pe_error,
            "config": config.to_dict(),
        }

    def local_fidelity(self, sigma_local: float, samples: int = 1000, seed: int = 0) -> float:
        return local_rotation_fidelity(
            sigma_local, samples, samples, seed=seed, gamma_in_magnitude=self.config.gamma_in_magnitude
        )


def reevaluate(record: SolutionRecord) -> Dict[str, float]:
    """Recompute the recorded metrics from the angles and the recorded config.

    Without local noise the step-1 rotation cancels in tr(O^dag U) and is a
    local factor of the projected block, so its angles leave every metric
    unchanged and edits to them cannot be detected here.
    """
    params = record.params
    in_gate, in_pe = evaluate_sequence(params, sample_ensemble(record.config, record.n_steps))
    eval_config = record.config.replace(seed=record.eval_seed, m_realizations=record.eval_m)
    out_gate, out_pe = evaluate_sequence(params, sample_ensemble(eval_config, record.n_steps))
    return {"in_sample_error": in_gate, "pe_error": in_pe, "oos_error": out_gate, "oos_pe_error": out_pe}


def verify_records(records: Iterable[SolutionRecord], tol: float = VERIFY_TOL) -> List[Dict[str, Any]]:
    """Records whose recomputed metrics differ from the stored ones by more than tol"""
    mismatches = []
    for record in records:
        try:
            recomputed = reevaluate(record)
        except RECOVERABLE_ERRORS as e:
            mismatches.append({"N": record.n_steps, "interaction": record.interaction.value, "error": str(e)})
            continue
        for name, value in recomputed.items():
            stored = getattr(record, name)
            if abs(value - stored) > tol:
                mismatches.append({
                    "N": record.n_steps,
                    "interaction": record.interaction.value,
                    "field": name,
                    "stored": stored,
                    "recomputed": value,
                })
    return mismatches


def verify_archive(path: str, tol: float = VERIFY_TOL) -> List[Dict[str, Any]]:
    """Mismatches for every record of an archive; step-1 angles are not checked, see reevaluate"""
    records = read_archive(path)
    mismatches = verify_records(records, tol)
    logger.info("verified %d records from %s: %d mismatches", len(records), path, len(mismatches))
    return mismatches
