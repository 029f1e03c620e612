"""Pydantic models for every JSON document the CLI reads or writes.

Field names are snake_case in Python and camelCase on the wire.
``qrace schemas --out DIR`` writes each model's JSON schema to DIR.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic.alias_generators import to_camel

from qrace.engine.numerics import json_number
from qrace.engine.reports import BoundReport

Value = float | int | str


class _Doc(BaseModel):
    model_config = ConfigDict(alias_generator=to_camel, populate_by_name=True)

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True) + "\n"


def values(seq: Any) -> list[Value]:
    return [json_number(v) for v in seq]


def _count(value: Any) -> Any:
    """YAML reads ``1e6`` as a string; counts may be written that way."""
    return int(float(value)) if isinstance(value, str) else value


# --- Inputs ---


class ScheduleDoc(_Doc):
    """Schedule file: success probabilities p_1..p_K."""

    probs: list[Value]


class PlayerWeights(_Doc):
    weights: list[Value]


class ProfileDoc(_Doc):
    """Strategy profile file: one weight vector per player, or a solver output.

    Exactly one shape is used, in this order: ``players``, ``row``/``col``,
    ``n``/``strategy``. Other keys of a solver output are ignored.
    """

    players: list[PlayerWeights] | None = None
    row: list[Value] | None = None
    col: list[Value] | None = None
    n: int | None = Field(None, ge=1)
    strategy: list[Value] | None = None

    @model_validator(mode="after")
    def check_shape(self) -> ProfileDoc:
        if self.players is not None:
            return self
        if self.row is not None and self.col is not None:
            return self
        if self.n is not None and self.strategy is not None:
            return self
        raise ValueError('needs "players", "row"/"col" or "n"/"strategy"')


class SweepConfigDoc(_Doc):
    """YAML sweep configuration for ``simulate --sweep-config``."""

    sizes: list[int]
    players: list[int]
    trials: int = 0
    seed: int = 0
    difficulties: list[float] = Field(default_factory=list)

    @field_validator("sizes", mode="before")
    @classmethod
    def parse_sizes(cls, value: Any) -> Any:
        if isinstance(value, list):
            return [_count(v) for v in value]
        return value

    @field_validator("trials", mode="before")
    @classmethod
    def parse_trials(cls, value: Any) -> Any:
        return _count(value)


# --- Shared ---


class BoundCheckOut(_Doc):
    name: str
    verdict: str
    value: float | None = None
    bound: float | None = None
    relation: str
    detail: str = ""


class BoundReportOut(_Doc):
    name: str
    holds: bool
    checks: list[BoundCheckOut]

    @classmethod
    def from_report(cls, report: BoundReport) -> BoundReportOut:
        return cls(
            name=report.name,
            holds=report.holds,
            checks=[
                BoundCheckOut(
                    name=c.name,
                    verdict=str(c.verdict),
                    value=c.value,
                    bound=c.bound,
                    relation=c.relation,
                    detail=c.detail,
                )
                for c in report.checks
            ],
        )


def reports_out(reports: list[BoundReport]) -> dict[str, BoundReportOut]:
    return {r.name: BoundReportOut.from_report(r) for r in reports}


# --- Outputs ---


class ScheduleReportOut(_Doc):
    k: int = Field(serialization_alias="K", validation_alias="K")
    ell: float
    ratio: float
    convex: bool
    worst_convexity_violation: float
    probs: list[Value]


class Solve2Out(_Doc):
    """A two-player equilibrium, or the verdict that none of the requested kind exists."""

    kind: str
    exists: bool = True
    reason: str = ""
    k: int = Field(serialization_alias="K", validation_alias="K")
    tstar: int | None = Field(None, serialization_alias="Tstar", validation_alias="Tstar")
    start_t: int | None = Field(None, serialization_alias="startT", validation_alias="startT")
    change_c: int | None = None
    row: list[Value] = Field(default_factory=list)
    col: list[Value] = Field(default_factory=list)
    payoff_row: float | None = None
    payoff_col: float | None = None
    sigma: float | None = None
    tie_probability: float | None = None
    no_winner_probability: float | None = None
    swapped_exists: bool = False
    bounds: dict[str, BoundReportOut] = Field(default_factory=dict)


class AltCoincidingOut(_Doc):
    k: int = Field(serialization_alias="K", validation_alias="K")
    equilibria: list[Solve2Out]
    bounds: dict[str, BoundReportOut] = Field(default_factory=dict)


class MultiOut(_Doc):
    n: int
    k: int = Field(serialization_alias="K", validation_alias="K")
    tstar: int = Field(serialization_alias="Tstar", validation_alias="Tstar")
    strategy: list[Value]
    per_player_payoff: float
    total_tie_probability: float | None = None
    worst_regret: float
    reduction_residual: float
    bounds: dict[str, BoundReportOut] = Field(default_factory=dict)


class DeviationOut(_Doc):
    player: int
    best_time: int
    gain: float


class VerifyOut(_Doc):
    game: str
    is_exact: bool
    epsilon_approx: float
    epsilon_well_supported: float
    payoffs: list[float]
    deviations: list[DeviationOut]
    mangasarian_stone: float | None = None
    bounds: dict[str, BoundReportOut] = Field(default_factory=dict)


class CertificateOut(_Doc):
    c: float
    s: int | None = Field(None, serialization_alias="S", validation_alias="S")
    lam: float = Field(serialization_alias="lambda", validation_alias="lambda")
    d: float
    beta: float | None = None
    objective: float
    feasible: bool
    certifies: bool
    trivial: bool


class SweepPointOut(_Doc):
    c: float
    beta: float | None = None
    objective: float
    certifies: bool
    beta_limit: float


class BoundOut(_Doc):
    k: int = Field(serialization_alias="K", validation_alias="K")
    ell: float
    analytic_only: bool = False
    constants: dict[str, float] = Field(default_factory=dict)
    certificate: CertificateOut | None = None
    dual_sweep: list[SweepPointOut] = Field(default_factory=list)
    smallest_certified: float | None = None
    weak_duality_gap: float | None = None
    bounds: dict[str, BoundReportOut] = Field(default_factory=dict)


class SimulateOut(_Doc):
    n: int
    variant: str
    trials: int
    seed: int
    win_frequency: list[float]
    tie_frequency: float
    tie_frequency_by_multiplicity: dict[str, float]
    no_winner_frequency: float
    payoff_estimate: list[float]
    payoff_standard_error: list[float]
    consistency: BoundReportOut | None = None


class SweepRowOut(_Doc):
    big_n: float = Field(serialization_alias="N", validation_alias="N")
    k: int = Field(serialization_alias="K", validation_alias="K")
    n: int
    ell: float
    tstar: int | None = Field(None, serialization_alias="Tstar", validation_alias="Tstar")
    analytic_payoff: float | None = None
    analytic_tie: float | None = None
    empirical_tie: float | None = None
    bound_8enl_over_k: float = Field(
        serialization_alias="bound8enlOverK", validation_alias="bound8enlOverK"
    )
    trials: int
    seed: int


class SweepOut(_Doc):
    rows: list[SweepRowOut]


class BitcoinOut(_Doc):
    difficulty: float
    big_n: float = Field(serialization_alias="N", validation_alias="N")
    k: int = Field(serialization_alias="K", validation_alias="K")
    ell: float
    epsilon_bound: float
    tie_bounds: dict[str, float]
    materializable: bool


# --- Schema export ---

SCHEMAS: dict[str, type[BaseModel]] = {
    "schedule": ScheduleDoc,
    "profile": ProfileDoc,
    "sweep-config": SweepConfigDoc,
    "schedule-report": ScheduleReportOut,
    "solve2": Solve2Out,
    "altcoinc": AltCoincidingOut,
    "solven": MultiOut,
    "verify": VerifyOut,
    "bound": BoundOut,
    "simulate": SimulateOut,
    "sweep": SweepOut,
    "bitcoin": BitcoinOut,
}


def export_schemas(out_dir: str | Path) -> list[Path]:
    """Write ``<name>.schema.json`` for every document model; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, model in SCHEMAS.items():
        path = out / f"{name}.schema.json"
        schema = model.model_json_schema(by_alias=True, mode="serialization")
        path.write_text(json.dumps(schema, indent=2, sort_keys=True) + "\n")
        written.append(path)
    return written
