import json
from datetime import datetime
from typing import Dict

from sqlalchemy import JSON, Boolean, Column, DateTime, Float, ForeignKey, Integer, String
from sqlalchemy.orm import Session, relationship

from .archive import RunManifest, SolutionRecord
from .database import Base
from .noise import NoiseConfig
from .sequence_model import InteractionKind, SequenceParams


def config_key(config: NoiseConfig) -> str:
    return json.dumps(config.to_dict(), sort_keys=True)


class Run(Base):
    __tablename__ = "runs"

    id = Column(Integer, primary_key=True, index=True)
    command = Column(String, index=True)
    seed = Column(Integer)
    rng_algorithm = Column(String)
    schema_version = Column(String)
    config = Column(JSON)
    options = Column(JSON)
    iterations = Column(JSON)
    status = Column(String, default="running")  # running, completed, failed
    created_at = Column(DateTime, default=datetime.utcnow)
    updated_at = Column(DateTime, default=datetime.utcnow, onupdate=datetime.utcnow)

    solutions = relationship("Solution", back_populates="run")


class Solution(Base):
    __tablename__ = "solutions"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("runs.id"))

    interaction = Column(String, index=True)
    n_steps = Column(Integer, index=True)
    config_key = Column(String, index=True)

    in_sample_error = Column(Float)
    oos_error = Column(Float)
    pe_error = Column(Float)
    converged = Column(Boolean)

    # full SolutionRecord document, angles included
    record = Column(JSON)

    created_at = Column(DateTime, default=datetime.utcnow)

    run = relationship("Run", back_populates="solutions")

    def to_record(self) -> SolutionRecord:
        return SolutionRecord.from_dict(self.record)


def save_run(db: Session, manifest: RunManifest) -> Run:
    run = Run(
        command=manifest.command,
        seed=manifest.seed,
        rng_algorithm=manifest.rng_algorithm,
        schema_version=manifest.schema_version,
        config=manifest.config,
        options=manifest.options,
        iterations={str(n): count for n, count in manifest.iterations.items()},
    )
    db.add(run)
    db.commit()
    db.refresh(run)
    return run


def finish_run(db: Session, run: Run, manifest: RunManifest, failed: bool = False) -> Run:
    run.iterations = {str(n): count for n, count in manifest.iterations.items()}
    run.status = "failed" if failed else "completed"
    db.commit()
    return run


def save_solution(db: Session, run: Run, record: SolutionRecord) -> Solution:
    solution = Solution(
        run_id=run.id,
        interaction=record.interaction.value,
        n_steps=record.n_steps,
        config_key=config_key(record.config),
        in_sample_error=record.in_sample_error,
        oos_error=record.oos_error,
        pe_error=record.pe_error,
        converged=record.converged,
        record=record.to_dict(),
    )
    db.add(solution)
    db.commit()
    return solution


def load_archive(db: Session, interaction: InteractionKind, config: NoiseConfig) -> Dict[int, SequenceParams]:
    """Latest stored solution per length for this interaction and noise configuration"""
    rows = (
        db.query(Solution)
        .filter(Solution.interaction == InteractionKind(interaction).value, Solution.config_key == config_key(config))
        .order_by(Solution.id)
        .all()
    )
    return {row.n_steps: row.to_record().params for row in rows}
