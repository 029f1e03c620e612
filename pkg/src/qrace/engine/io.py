"""JSON and CSV reading and writing for schedules, matrices, profiles and sweeps.

JSON numbers use Python's shortest round-tripping repr; CSV numbers use
``settings.float_format`` (17 significant digits). Exact ``Fraction`` values
travel as ``"p/q"`` strings in both formats.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from collections.abc import Iterable, Sequence
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from qrace.config import settings
from qrace.engine.errors import DimensionError, ScheduleError
from qrace.engine.numerics import Number, json_number
from qrace.engine.payoff import MixedStrategy, PayoffMatrix
from qrace.engine.schedules import ProbabilitySchedule, custom_schedule, exact_schedule
from qrace.engine.sim import SWEEP_COLUMNS, SweepRow
from qrace.schemas import ProfileDoc, ScheduleDoc

logger = logging.getLogger(__name__)


# --- Numbers ---


def csv_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return settings.float_format % float(value)
    return str(value)


def _parse_values(values: Sequence[Any]) -> tuple[list[Number], bool]:
    """Numbers from JSON/CSV cells; any ``"p/q"`` string makes the whole vector exact."""
    if any(isinstance(v, str) and "/" in v for v in values):
        return [Fraction(str(v)) for v in values], True
    return [float(v) for v in values], False


# --- Schedules ---


def schedule_to_json(schedule: ProbabilitySchedule) -> str:
    return json.dumps({"probs": [json_number(v) for v in schedule.probs]}) + "\n"


def schedule_to_csv(schedule: ProbabilitySchedule) -> str:
    lines = ["p"] + [csv_cell(v) for v in schedule.probs]
    return "\n".join(lines) + "\n"


def schedule_from_values(values: Sequence[Any]) -> ProbabilitySchedule:
    parsed, exact = _parse_values(values)
    return exact_schedule(parsed) if exact else custom_schedule(parsed)


def schedule_from_json(text: str) -> ProbabilitySchedule:
    try:
        doc = ScheduleDoc.model_validate_json(text)
    except ValidationError as e:
        raise ScheduleError(f'Malformed schedule JSON, expected {{"probs": [...]}}: {e}') from e
    return schedule_from_values(doc.probs)


def schedule_from_csv(text: str) -> ProbabilitySchedule:
    cells = [row[0].strip() for row in csv.reader(io.StringIO(text)) if row and row[0].strip()]
    if cells and cells[0].lower() == "p":
        cells = cells[1:]
    try:
        return schedule_from_values(cells)
    except ScheduleError:
        raise
    except (ValueError, ZeroDivisionError) as e:
        raise ScheduleError(f"Malformed schedule CSV: {e}") from e


def schedule_from_file(path: str | Path) -> ProbabilitySchedule:
    """Read a schedule; ``.csv`` files are CSV, everything else JSON."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".csv":
        schedule = schedule_from_csv(text)
    else:
        schedule = schedule_from_json(text)
    logger.debug(f"Loaded schedule with K={schedule.k} from {path}")
    return schedule


# --- Matrices ---


def matrix_to_csv(matrix: PayoffMatrix | np.ndarray) -> str:
    entries = matrix.entries if isinstance(matrix, PayoffMatrix) else np.asarray(matrix)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in entries:
        writer.writerow([csv_cell(v) for v in row])
    return buf.getvalue()


# --- Profiles ---


def _strategy(values: Sequence[Any], k: int | None) -> MixedStrategy:
    parsed, _ = _parse_values(values)
    if k is not None and len(parsed) != k:
        raise DimensionError(f"Strategy has {len(parsed)} weights, schedule has K={k}")
    return MixedStrategy.from_weights(parsed, tolerance=settings.tolerance)


def profile_from_data(data: Any, k: int | None = None) -> tuple[MixedStrategy, ...]:
    """Profile from a players document or from a solver output document.

    Accepted shapes: ``{"players": [{"weights": [...]}, ...]}``, a two-player
    solution ``{"row": [...], "col": [...]}`` and a multiplayer solution
    ``{"n": n, "strategy": [...]}``.
    """
    if not isinstance(data, dict):
        raise ValueError("Profile document must be a JSON object")
    try:
        doc = ProfileDoc.model_validate(data)
    except ValidationError as e:
        raise ValueError(f"Invalid profile document: {e}") from e
    if doc.players is not None:
        return tuple(_strategy(p.weights, k) for p in doc.players)
    if doc.row is not None and doc.col is not None:
        return (_strategy(doc.row, k), _strategy(doc.col, k))
    return (_strategy(doc.strategy, k),) * doc.n


def profile_from_file(path: str | Path, k: int | None = None) -> tuple[MixedStrategy, ...]:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ValueError(f"Malformed profile JSON in {path}: {e}") from e
    return profile_from_data(data, k)


def profile_to_json(profile: Iterable[MixedStrategy]) -> str:
    players = [{"weights": [json_number(w) for w in s.weights]} for s in profile]
    return json.dumps({"players": players}) + "\n"


# --- Sweeps ---


def rows_to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([csv_cell(v) for v in row])
    return buf.getvalue()


def sweep_to_csv(rows: Iterable[SweepRow]) -> str:
    return rows_to_csv(SWEEP_COLUMNS, (r.as_tuple() for r in rows))


def write_text(text: str, path: str | Path | None = None) -> None:
    """Write to ``path``, or to stdout when no path is given."""
    if path is None:
        print(text, end="")
        return
    Path(path).write_text(text)
    logger.info(f"Wrote {len(text)} bytes to {path}")
