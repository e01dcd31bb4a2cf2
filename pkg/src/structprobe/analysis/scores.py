"""Externally produced task scores."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

COLUMNS = ("model", "task", "language", "setting_id", "metric", "score")


class ScoreTableError(ValueError):
    pass


@dataclass(frozen=True)
class ScoreRow:
    model: str
    task: str
    language: str
    setting_id: str
    metric_name: str
    score: float


@dataclass(frozen=True)
class ScoreTable:
    rows: tuple[ScoreRow, ...]

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def metric_names(self) -> list[str]:
        return sorted({r.metric_name for r in self.rows})


def build_table(rows) -> ScoreTable:
    """Validate uniqueness and finiteness; ``rows`` are (line number, ScoreRow) pairs."""
    seen: dict[tuple, int] = {}
    out = []
    for lineno, row in rows:
        if not math.isfinite(row.score):
            raise ScoreTableError(f"row {lineno}: score must be finite, got {row.score!r}")
        key = (row.model, row.task, row.language, row.setting_id)
        if key in seen:
            raise ScoreTableError(
                f"row {lineno}: duplicate (model, task, language, setting_id) {key}, "
                f"first seen at row {seen[key]}"
            )
        seen[key] = lineno
        out.append(row)
    return ScoreTable(tuple(out))


def ingest_scores(path: Union[str, Path]) -> ScoreTable:
    """Read a ``model,task,language,setting_id,metric,score`` CSV.

    Row numbers in errors count the header as row 1.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in COLUMNS if c not in header]
        if missing:
            raise ScoreTableError(f"{path}: missing columns {missing}")
        parsed = []
        for lineno, raw in enumerate(reader, start=2):
            values = {c: (raw.get(c) or "").strip() for c in COLUMNS}
            empty = [c for c in COLUMNS if not values[c]]
            if empty:
                raise ScoreTableError(f"row {lineno}: empty {empty}")
            try:
                score = float(values["score"])
            except ValueError:
                raise ScoreTableError(
                    f"row {lineno}: score {values['score']!r} is not numeric"
                ) from None
            parsed.append(
                (
                    lineno,
                    ScoreRow(
                        model=values["model"],
                        task=values["task"],
                        language=values["language"].lower(),
                        setting_id=values["setting_id"],
                        metric_name=values["metric"],
                        score=score,
                    ),
                )
            )
    return build_table(parsed)


def write_scores(table: ScoreTable, path: Union[str, Path]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for r in table.rows:
            writer.writerow([r.model, r.task, r.language, r.setting_id, r.metric_name, repr(r.score)])
