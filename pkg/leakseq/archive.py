"""
Solution archive and run manifest persistence.

Archives are versioned JSON documents; floats are written with repr so a
write/read cycle is lossless. Sweep and sigma-grid tables are emitted as CSV
with a fixed column order.
"""

import csv
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .exceptions import ArchiveError, DomainError
from .noise import RNG_ALGORITHM, NoiseConfig
from .optimizer import OptimizationResult, OptimizerOptions
from .sequence_model import InteractionKind, SequenceParams

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "leakseq-archive/1"

SWEEP_COLUMNS = ("N", "in_sample_error", "oos_error", "pe_error", "iterations", "converged", "status", "error")
GRID_COLUMNS = ("sigma_logical", "sigma_leakage", "gate_error")


@dataclass
class RunManifest:
    """Everything needed to re-derive the numbers of one invocation"""

    command: str
    seed: int
    config: Dict[str, Any]
    options: Dict[str, Any] = field(default_factory=dict)
    iterations: Dict[int, int] = field(default_factory=dict)
    rng_algorithm: str = RNG_ALGORITHM
    schema_version: str = SCHEMA_VERSION
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["iterations"] = {str(n): count for n, count in sorted(self.iterations.items())}
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], path: Optional[str] = None) -> "RunManifest":
        _check_schema(data, path)
        try:
            return cls(
                command=str(_require(data, "command", path)),
                seed=int(_require(data, "seed", path)),
                config=dict(_require(data, "config", path)),
                options=dict(data.get("options", {})),
                iterations={int(n): int(count) for n, count in data.get("iterations", {}).items()},
                rng_algorithm=str(_require(data, "rng_algorithm", path)),
                timestamp=str(_require(data, "timestamp", path)),
            )
        except (TypeError, ValueError) as e:
            raise ArchiveError(f"malformed manifest: {e}", path=path) from e


@dataclass(frozen=True)
class SolutionRecord:
    interaction: InteractionKind
    n_steps: int
    angles: Tuple[Tuple[float, ...], ...]
    config: NoiseConfig
    eval_m: int
    eval_seed: int
    in_sample_error: float
    oos_error: float
    pe_error: float
    oos_pe_error: float
    j_value: float
    iterations: int
    converged: bool
    manifest: str = ""

    def __post_init__(self):
        object.__setattr__(self, "interaction", InteractionKind(self.interaction))
        angles = tuple(tuple(float(a) for a in row) for row in self.angles)
        if len(angles) != self.n_steps or any(len(row) != 6 for row in angles):
            raise DomainError(f"angles must be a {self.n_steps}x6 table")
        object.__setattr__(self, "angles", angles)
        for name in ("in_sample_error", "oos_error", "pe_error", "oos_pe_error"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {value}")

    @property
    def params(self) -> SequenceParams:
        return SequenceParams.from_vector(self.interaction, [a for row in self.angles for a in row])

    @classmethod
    def from_result(cls, result: OptimizationResult, config: NoiseConfig, manifest: str = "") -> "SolutionRecord":
        return cls(
            interaction=result.params.interaction,
            n_steps=result.params.n_steps,
            angles=tuple(tuple(row) for row in result.params.angles().tolist()),
            config=config,
            eval_m=result.eval_m,
            eval_seed=result.eval_seed,
            in_sample_error=result.in_sample_gate_error,
            oos_error=result.out_of_sample_gate_error,
            pe_error=result.in_sample_pe_error,
            oos_pe_error=result.out_of_sample_pe_error,
            j_value=result.j_value,
            iterations=result.iterations,
            converged=result.converged,
            manifest=manifest,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "interaction": self.interaction.value,
            "n_steps": self.n_steps,
            "angles": [list(row) for row in self.angles],
            "config": self.config.to_dict(),
            "eval_m": self.eval_m,
            "eval_seed": self.eval_seed,
            "in_sample_error": self.in_sample_error,
            "oos_error": self.oos_error,
            "pe_error": self.pe_error,
            "oos_pe_error": self.oos_pe_error,
            "j_value": self.j_value,
            "iterations": self.iterations,
            "converged": self.converged,
            "manifest": self.manifest,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], path: Optional[str] = None) -> "SolutionRecord":
        values = {name: _require(data, name, path) for name in (
            "interaction", "n_steps", "angles", "config", "eval_m", "eval_seed", "in_sample_error",
            "oos_error", "pe_error", "oos_pe_error", "j_value", "iterations", "converged",
        )}
        try:
            values["interaction"] = InteractionKind(values["interaction"])
        except ValueError as e:
            raise ArchiveError(f"unknown interaction {values['interaction']!r}", path=path, field="interaction") from e
        try:
            values["config"] = NoiseConfig.from_dict(values["config"])
        except (TypeError, DomainError) as e:
            raise ArchiveError(f"invalid noise config: {e}", path=path, field="config") from e
        try:
            return cls(manifest=str(data.get("manifest", "")), **values)
        except (TypeError, ValueError) as e:
            first_word = str(e).split(" ", 1)[0]
            field_name = first_word if first_word in data else None
            raise ArchiveError(f"invalid solution record: {e}", path=path, field=field_name) from e


def _require(data: Mapping[str, Any], name: str, path: Optional[str]):
    if name not in data:
        raise ArchiveError("missing field", path=path, field=name)
    return data[name]


def _check_schema(data: Mapping[str, Any], path: Optional[str]):
    version = _require(data, "schema_version", path)
    if version != SCHEMA_VERSION:
        raise ArchiveError(f"unsupported schema version {version!r}", path=path, field="schema_version")


def _load_json(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise ArchiveError(f"cannot read archive: {e}", path=path) from e
    except json.JSONDecodeError as e:
        raise ArchiveError(f"parse failure at line {e.lineno}: {e.msg}", path=path) from e
    if not isinstance(data, dict):
        raise ArchiveError("top level must be an object", path=path)
    return data


def _dump_json(data: Mapping[str, Any], path: str):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=False)
        f.write("\n")


def write_archive(records: Iterable[SolutionRecord], path: str) -> str:
    records = sorted(records, key=lambda r: (r.interaction.value, r.n_steps))
    _dump_json({"schema_version": SCHEMA_VERSION, "solutions": [r.to_dict() for r in records]}, path)
    logger.info("wrote %d solutions to %s", len(records), path)
    return path


def read_archive(path: str) -> List[SolutionRecord]:
    data = _load_json(path)
    _check_schema(data, path)
    solutions = _require(data, "solutions", path)
    if not isinstance(solutions, list):
        raise ArchiveError("solutions must be a list", path=path, field="solutions")
    return [SolutionRecord.from_dict(entry, path) for entry in solutions]


def archive_by_length(records: Iterable[SolutionRecord], interaction: InteractionKind) -> Dict[int, SequenceParams]:
    """Bootstrap archive (n_steps -> params) for one interaction kind"""
    interaction = InteractionKind(interaction)
    return {r.n_steps: r.params for r in records if r.interaction is interaction}


def write_manifest(manifest: RunManifest, path: str) -> str:
    _dump_json(manifest.to_dict(), path)
    logger.info("wrote run manifest to %s", path)
    return path


def read_manifest(path: str) -> RunManifest:
    return RunManifest.from_dict(_load_json(path), path)


def _write_rows(rows: Sequence[Mapping[str, Any]], columns: Sequence[str], path: str) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({name: "" if row.get(name) is None else row.get(name) for name in columns})
    logger.info("wrote %d rows to %s", len(rows), path)
    return path


def write_sweep_csv(rows: Sequence[Mapping[str, Any]], path: str) -> str:
    return _write_rows(sorted(rows, key=lambda row: row["N"]), SWEEP_COLUMNS, path)


def write_grid_csv(rows: Sequence[Mapping[str, Any]], path: str) -> str:
    ordered = sorted(rows, key=lambda row: (row["sigma_logical"], row["sigma_leakage"]))
    return _write_rows(ordered, GRID_COLUMNS, path)


def options_snapshot(opts: OptimizerOptions) -> Dict[str, Any]:
    return asdict(opts)
