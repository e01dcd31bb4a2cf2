"""Rank correlation between perturbation metrics and task scores."""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

from .scores import ScoreRow, ScoreTable
from .scripts import LanguageInfo
from .sweep import SweepReport, aggregate_rows

log = logging.getLogger(__name__)

GROUPINGS = ("model", "task", "script", "family")
DEFAULT_METRICS = ("chrf", "idc", "comp")
MIN_LANGUAGES = {"script": 3, "family": 3}
MIN_SAMPLES = 3


def rankdata(values: Sequence[float]) -> list[float]:
    """1-based ranks; tied values share the mean of their positions."""
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def pearson(xs: Sequence[float], ys: Sequence[float]) -> Optional[float]:
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0.0 or syy == 0.0:
        return None
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    return max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))


def _check_lengths(xs: Sequence[float], ys: Sequence[float]) -> None:
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} != {len(ys)}")
    if len(xs) < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} pairs, got {len(xs)}")


def spearman(xs: Sequence[float], ys: Sequence[float]) -> Optional[float]:
    """Spearman's rho with average ranks for ties; ``None`` if a side is constant."""
    _check_lengths(xs, ys)
    return pearson(rankdata(xs), rankdata(ys))


def kendall_tau_b(xs: Sequence[float], ys: Sequence[float]) -> Optional[float]:
    _check_lengths(xs, ys)
    n = len(xs)
    concordant = discordant = ties_x = ties_y = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = xs[i] - xs[j]
            dy = ys[i] - ys[j]
            if dx == 0 and dy == 0:
                ties_x += 1
                ties_y += 1
            elif dx == 0:
                ties_x += 1
            elif dy == 0:
                ties_y += 1
            elif (dx > 0) == (dy > 0):
                concordant += 1
            else:
                discordant += 1
    n0 = n * (n - 1) // 2
    denom = (n0 - ties_x) * (n0 - ties_y)
    if denom == 0:
        return None
    return (concordant - discordant) / math.sqrt(denom)


METHODS: dict[str, Callable] = {"spearman": spearman, "kendall": kendall_tau_b}


@dataclass(frozen=True)
class Cell:
    rho: float
    n: int


@dataclass
class CorrelationMatrix:
    grouping: str
    method: str
    metrics: tuple[str, ...]
    groups: list[str]
    cells: dict[tuple[str, str], Cell]
    n_languages: dict[str, int] = field(default_factory=dict)
    excluded: list[str] = field(default_factory=list)
    unmatched_scores: int = 0

    def get(self, group: str, metric: str) -> Optional[float]:
        cell = self.cells.get((group, metric))
        return None if cell is None else cell.rho

    def is_empty(self) -> bool:
        return not self.groups

    def to_dict(self) -> dict:
        return {
            "grouping": self.grouping,
            "method": self.method,
            "metrics": list(self.metrics),
            "groups": [
                {
                    "group": g,
                    "n_languages": self.n_languages.get(g, 0),
                    "cells": {
                        m: (
                            {"rho": self.cells[(g, m)].rho, "n": self.cells[(g, m)].n}
                            if (g, m) in self.cells
                            else None
                        )
                        for m in self.metrics
                    },
                }
                for g in self.groups
            ],
            "excluded_groups": self.excluded,
            "unmatched_scores": self.unmatched_scores,
        }


def _group_key(
    grouping: str,
    row: ScoreRow,
    sweep: SweepReport,
    lang_meta: Mapping[str, LanguageInfo],
) -> Optional[str]:
    if grouping == "model":
        return row.model
    if grouping == "task":
        return row.task
    info = lang_meta.get(row.language)
    if grouping == "script":
        if info is not None and info.script_override:
            return info.script_override
        lang = sweep.languages.get(row.language)
        return lang["script"] if lang else None
    if grouping == "family":
        return info.family if info is not None else None
    raise ValueError(f"unknown grouping {grouping!r}; expected one of {GROUPINGS}")


def _metric_table(sweep: SweepReport, per_record: bool) -> dict[tuple[str, str], list[dict]]:
    """(language, setting) -> list of metric dicts to join against one score."""
    if not per_record:
        return {
            (agg.language, agg.setting_id): [agg.means]
            for agg in aggregate_rows(sweep.rows).values()
        }
    by_record: dict[tuple, list] = defaultdict(list)
    for row in sweep.rows:
        by_record[(row.language, row.setting_id, row.record_id)].append(row)
    table: dict[tuple[str, str], list[dict]] = defaultdict(list)
    for (lang, setting, _rid), rows in sorted(by_record.items()):
        agg = aggregate_rows(rows)[(setting, lang)]
        table[(lang, setting)].append(agg.means)
    return dict(table)


def correlate(
    sweep: SweepReport,
    scores: ScoreTable,
    grouping: str,
    lang_meta: Optional[Mapping[str, LanguageInfo]] = None,
    metrics: Sequence[str] = DEFAULT_METRICS,
    method: str = "spearman",
    per_record: bool = False,
    min_languages: Optional[int] = None,
) -> CorrelationMatrix:
    """Correlate each metric with task scores inside every group.

    Metric values are averaged over records and seeds per (language,
    setting) and joined to score rows on that key. With ``per_record`` the
    join is made per record instead (seeds still averaged). Script and
    family groups spanning fewer than three languages are dropped.
    """
    if grouping not in GROUPINGS:
        raise ValueError(f"unknown grouping {grouping!r}; expected one of {GROUPINGS}")
    corr = METHODS[method]
    lang_meta = lang_meta or {}
    if min_languages is None:
        min_languages = MIN_LANGUAGES.get(grouping, 0)
    table = _metric_table(sweep, per_record)

    points: dict[str, list[tuple[dict, float]]] = defaultdict(list)
    languages: dict[str, set] = defaultdict(set)
    unmatched = 0
    # canonical order so the result is independent of input row order
    for row in sorted(scores.rows, key=lambda r: (r.model, r.task, r.language, r.setting_id)):
        joined = table.get((row.language, row.setting_id))
        if joined is None:
            unmatched += 1
            continue
        group = _group_key(grouping, row, sweep, lang_meta)
        if group is None:
            continue
        languages[group].add(row.language)
        for means in joined:
            points[group].append((means, row.score))
    if unmatched:
        log.warning("%d score rows have no matching (language, setting) in the sweep", unmatched)

    groups, excluded = [], []
    cells: dict[tuple[str, str], Cell] = {}
    for group in sorted(points):
        if len(languages[group]) < min_languages:
            excluded.append(group)
            continue
        groups.append(group)
        for metric in metrics:
            pairs = [(m[metric], s) for m, s in points[group] if m.get(metric) is not None]
            if len(pairs) < MIN_SAMPLES:
                continue
            rho = corr([p[0] for p in pairs], [p[1] for p in pairs])
            if rho is not None:
                cells[(group, metric)] = Cell(rho, len(pairs))
    return CorrelationMatrix(
        grouping=grouping,
        method=method,
        metrics=tuple(metrics),
        groups=groups,
        cells=cells,
        n_languages={g: len(languages[g]) for g in groups},
        excluded=excluded,
        unmatched_scores=unmatched,
    )
