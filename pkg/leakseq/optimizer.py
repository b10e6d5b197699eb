"""
Ensemble-averaged functional and its local minimisation.

J = mean over realizations of (gate error + perfect-entangler distance D),
minimised over the 6N rotation angles with L-BFGS and forward-difference
gradients. Longer sequences are warm-started by tiling the solution of their
greatest proper divisor.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Optional, Tuple

import numpy as np
import scipy.optimize

from .exceptions import DependencyError, DomainError, NumericError
from .metrics import gate_errors, pe_error_ensemble, pe_metric_ensemble
from .noise import RNG_ALGORITHM, NoiseConfig, NoiseEnsemble, sample_ensemble
from .sequence_model import InteractionKind, SequenceParams, evolution_operators, target_operator

logger = logging.getLogger(__name__)

FD_STEP_SCALE = float(np.sqrt(np.finfo(float).eps))


@dataclass(frozen=True)
class OptimizerOptions:
    history_size: int = 10
    grad_tol: float = 1e-5
    rel_f_tol: float = 2.2e-9
    max_iterations: int = 15000
    max_evaluations: int = 15000
    fd_step_scale: float = FD_STEP_SCALE
    restarts: int = 0

    def __post_init__(self):
        for name in ("history_size", "grad_tol", "rel_f_tol", "max_iterations", "max_evaluations", "fd_step_scale"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        if self.restarts < 0:
            raise DomainError(f"restarts must be >= 0, got {self.restarts}")


@dataclass(frozen=True)
class MinimizeDiagnostics:
    iterations: int
    evaluations: int
    converged: bool
    message: str
    history: Tuple[float, ...] = field(default=(), repr=False)


@dataclass(frozen=True)
class OptimizationResult:
    params: SequenceParams
    j_value: float
    in_sample_gate_error: float
    in_sample_pe_error: float
    out_of_sample_gate_error: float
    out_of_sample_pe_error: float
    iterations: int
    converged: bool
    seed: int
    eval_seed: int
    eval_m: int
    rng_algorithm: str = RNG_ALGORITHM
    message: str = ""


def _mean_in_order(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=float).tolist()
    return sum(values) / len(values)


def functional_j(seq: SequenceParams, ensemble: NoiseEnsemble) -> float:
    """Mean of gate error plus PE distance over the frozen realizations"""
    us = evolution_operators(seq, ensemble)
    target = target_operator(seq)
    return _mean_in_order(gate_errors(us, target) + pe_metric_ensemble(us))


def evaluate_sequence(seq: SequenceParams, ensemble: NoiseEnsemble) -> Tuple[float, float]:
    """(mean gate error, PE error) of a sequence on an ensemble"""
    us = evolution_operators(seq, ensemble)
    return _mean_in_order(gate_errors(us, target_operator(seq))), pe_error_ensemble(us)


def numerical_gradient(
    f: Callable[[np.ndarray], float], x, step_scale: float = FD_STEP_SCALE
) -> np.ndarray:
    """Forward differences with steps step_scale * max(1, |x_i|)"""
    x = np.asarray(x, dtype=float)
    steps = step_scale * np.maximum(1.0, np.abs(x))

    def checked(point):
        value = f(point)
        if not np.isfinite(value):
            moved = np.flatnonzero(point != x)
            coordinate = int(moved[0]) if moved.size else None
            where = "at the base point" if coordinate is None else f"at coordinate {coordinate}"
            raise NumericError(f"objective is not finite {where}", coordinate=coordinate)
        return value

    return scipy.optimize.approx_fprime(x, checked, steps)


def lbfgs_minimize(
    f: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    x0,
    opts: OptimizerOptions = OptimizerOptions(),
) -> Tuple[np.ndarray, float, MinimizeDiagnostics]:
    """Unconstrained limited-memory BFGS; never returns a point worse than x0"""
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim != 1 or x0.size < 1:
        raise DomainError(f"x0 must be a non-empty vector, got shape {x0.shape}")
    f0 = float(f(x0))
    history = [f0]

    def record(intermediate_result):
        history.append(float(intermediate_result.fun))
        logger.debug("iteration %d: J = %.12g", len(history) - 1, history[-1])

    result = scipy.optimize.minimize(
        f,
        x0,
        jac=grad,
        method="L-BFGS-B",
        callback=record,
        options={
            "maxcor": opts.history_size,
            "ftol": opts.rel_f_tol,
            "gtol": opts.grad_tol,
            "maxiter": opts.max_iterations,
            "maxfun": opts.max_evaluations,
        },
    )
    x, fx = np.asarray(result.x, dtype=float), float(result.fun)
    if not fx <= f0:
        x, fx = x0.copy(), f0

    diagnostics = MinimizeDiagnostics(
        iterations=int(result.nit),
        evaluations=int(result.nfev),
        converged=bool(result.success),
        message=str(result.message),
        history=tuple(history),
    )
    if not diagnostics.converged:
        logger.warning("L-BFGS stopped without converging: %s", diagnostics.message)
    return x, fx, diagnostics


def greatest_proper_divisor(n: int) -> int:
    """Largest divisor of n below n (1 for primes and for n = 1)"""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    p = 2
    while p * p <= n:
        if n % p == 0:
            return n // p
        p += 1
    return 1


def bootstrap_guess(
    n: int,
    archive: Mapping[int, SequenceParams],
    interaction: InteractionKind = InteractionKind.ZZ,
) -> SequenceParams:
    """Tile the solution of the greatest proper divisor, or start from zeros"""
    d = greatest_proper_divisor(n)
    if d == 1:
        return SequenceParams.zeros(interaction, n)
    if d not in archive:
        raise DependencyError(f"length {n} needs the solution for its divisor {d}", divisor=d)
    source = archive[d]
    if source.n_steps != d:
        raise DomainError(f"archive entry for length {d} has {source.n_steps} steps")
    if source.interaction != InteractionKind(interaction):
        raise DomainError(f"archive entry for length {d} uses interaction {source.interaction.value}")
    return source.tiled(n // d)


def optimize_sequence(
    n: int,
    interaction: InteractionKind,
    config: NoiseConfig,
    opts: OptimizerOptions = OptimizerOptions(),
    archive: Optional[Mapping[int, SequenceParams]] = None,
    eval_m: Optional[int] = None,
) -> OptimizationResult:
    """Train on the ensemble seeded by config.seed, report in- and out-of-sample metrics"""
    interaction = InteractionKind(interaction)
    archive = archive if archive is not None else {}
    training = sample_ensemble(config, n)
    guess = bootstrap_guess(n, archive, interaction)

    def objective(x: np.ndarray) -> float:
        return functional_j(SequenceParams.from_vector(interaction, x), training)

    def gradient(x: np.ndarray) -> np.ndarray:
        return numerical_gradient(objective, x, opts.fd_step_scale)

    logger.info("optimizing N=%d (%s, seed=%d, M=%d)", n, interaction.value, config.seed, config.m_realizations)
    x, j_value, diagnostics = lbfgs_minimize(objective, gradient, guess.to_vector(), opts)

    rng = np.random.default_rng([config.seed, n])
    for attempt in range(opts.restarts):
        start = rng.uniform(-np.pi, np.pi, size=6 * n)
        x_r, j_r, diag_r = lbfgs_minimize(objective, gradient, start, opts)
        logger.info("restart %d for N=%d: J = %.6g (best %.6g)", attempt + 1, n, j_r, j_value)
        if j_r < j_value:
            x, j_value, diagnostics = x_r, j_r, diag_r

    params = SequenceParams.from_vector(interaction, x)
    in_gate, in_pe = evaluate_sequence(params, training)

    eval_config = config.replace(seed=config.seed + 1, m_realizations=eval_m or config.m_realizations)
    out_gate, out_pe = evaluate_sequence(params, sample_ensemble(eval_config, n))

    logger.info(
        "N=%d done: J=%.6g in-sample error=%.6g out-of-sample error=%.6g PE error=%.3g (%d iterations)",
        n, j_value, in_gate, out_gate, in_pe, diagnostics.iterations,
    )
    return OptimizationResult(
        params=params,
        j_value=j_value,
        in_sample_gate_error=in_gate,
        in_sample_pe_error=in_pe,
        out_of_sample_gate_error=out_gate,
        out_of_sample_pe_error=out_pe,
        iterations=diagnostics.iterations,
        converged=diagnostics.converged,
        seed=config.seed,
        eval_seed=eval_config.seed,
        eval_m=eval_config.m_realizations,
        message=diagnostics.message,
    )


def solved_archive(results: Mapping[int, OptimizationResult]) -> Dict[int, SequenceParams]:
    return {n: result.params for n, result in results.items()}
