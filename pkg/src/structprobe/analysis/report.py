"""Report emission: CSV, JSON and SVG views of sweeps and correlation matrices."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from collections import defaultdict
from pathlib import Path
from typing import Optional, Union

from . import svg
from .correlation import CorrelationMatrix
from .scores import ScoreTable
from .sweep import SweepReport, aggregate_rows

log = logging.getLogger(__name__)

SCATTER_METRICS = ("chrf", "idc", "comp")
_LABELS = {"chrf": "chrF", "idc": "IDC", "comp": "compression rate", "dnd": "DND"}


class ReportError(ValueError):
    pass


def _num(v) -> str:
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else str(v)


def matrix_csv(matrix: CorrelationMatrix) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([matrix.grouping, *matrix.metrics])
    for g in matrix.groups:
        writer.writerow([g, *(_num(matrix.get(g, m)) for m in matrix.metrics)])
    return buf.getvalue()


def matrix_json(matrix: CorrelationMatrix) -> str:
    return json.dumps(matrix.to_dict(), indent=2, ensure_ascii=False, sort_keys=True) + "\n"


def matrix_svg(matrix: CorrelationMatrix) -> str:
    values = {(g, m): matrix.get(g, m) for g in matrix.groups for m in matrix.metrics}
    cols = [_LABELS.get(m, m) for m in matrix.metrics]
    relabeled = {(g, _LABELS.get(m, m)): v for (g, m), v in values.items()}
    return svg.heatmap(matrix.groups, cols, relabeled, title=f"{matrix.method} by {matrix.grouping}")


def setting_summary(sweep: SweepReport, scores: ScoreTable) -> list[dict]:
    """One row per setting: mean score and the mean of each metric over the joined points."""
    if len(scores.metric_names) > 1:
        log.warning(
            "score table mixes metrics %s; averaging them on one axis assumes a shared scale",
            scores.metric_names,
        )
    aggs = aggregate_rows(sweep.rows)
    acc: dict[str, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for row in scores.rows:
        agg = aggs.get((row.setting_id, row.language))
        if agg is None:
            continue
        acc[row.setting_id]["score"].append(row.score)
        for name, value in agg.means.items():
            if value is not None:
                acc[row.setting_id][name].append(value)
    out = []
    for spec in sweep.specs:
        if spec.setting_id not in acc:
            continue
        vals = acc[spec.setting_id]
        entry = {
            "setting_id": spec.setting_id,
            "kind": spec.kind.value,
            "granularity": spec.granularity.value,
            "rho": spec.rho,
            "n": len(vals["score"]),
        }
        for name in ("score", "chrf", "idc", "dnd", "comp"):
            entry[name] = math.fsum(vals[name]) / len(vals[name]) if vals.get(name) else None
        out.append(entry)
    return out


def summary_csv(summary: list[dict]) -> str:
    cols = ["setting_id", "kind", "granularity", "rho", "n", "score", "chrf", "idc", "dnd", "comp"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for entry in summary:
        writer.writerow([_num(entry[c]) for c in cols])
    return buf.getvalue()


def scatter_svg(summary: list[dict], metric: str) -> str:
    """Metric on x, mean score on y, one series per operator kind.

    Circles are character settings, squares subword settings. The IDC axis
    runs right to left so that "more perturbed" is always to the left.
    """
    series: dict[str, list] = {}
    for entry in summary:
        if entry[metric] is None or entry["score"] is None:
            continue
        marker = "square" if entry["granularity"] == "subword" else "circle"
        series.setdefault(entry["kind"], []).append((entry[metric], entry["score"], marker))
    return svg.scatter(
        series,
        x_label=_LABELS.get(metric, metric),
        y_label="mean score",
        title=f"score vs {_LABELS.get(metric, metric)}",
        invert_x=(metric == "idc"),
    )


def _write(path: Path, content: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def emit_matrix(matrix: CorrelationMatrix, fmt: str, out_dir: Union[str, Path]) -> list[Path]:
    if matrix.is_empty():
        raise ReportError(f"correlation matrix for {matrix.grouping!r} is empty")
    out = Path(out_dir)
    stem = f"correlations_{matrix.grouping}"
    if fmt == "csv":
        return [_write(out / f"{stem}.csv", matrix_csv(matrix))]
    if fmt == "json":
        return [_write(out / f"{stem}.json", matrix_json(matrix))]
    if fmt == "svg":
        return [_write(out / "figures" / f"{stem}.svg", matrix_svg(matrix))]
    raise ReportError(f"unknown format {fmt!r}")


def emit_sweep(
    sweep: SweepReport,
    scores: ScoreTable,
    fmt: str,
    out_dir: Union[str, Path],
    metrics=SCATTER_METRICS,
) -> list[Path]:
    summary = setting_summary(sweep, scores)
    if not summary:
        raise ReportError("no score rows join the sweep; nothing to report")
    out = Path(out_dir)
    if fmt == "csv":
        return [_write(out / "settings_summary.csv", summary_csv(summary))]
    if fmt == "json":
        text = json.dumps(summary, indent=2, ensure_ascii=False, sort_keys=True) + "\n"
        return [_write(out / "settings_summary.json", text)]
    if fmt == "svg":
        return [_write(out / "figures" / f"scatter_{m}.svg", scatter_svg(summary, m)) for m in metrics]
    raise ReportError(f"unknown format {fmt!r}")


def emit_report(
    obj: Union[CorrelationMatrix, SweepReport],
    fmt: str,
    out_dir: Union[str, Path],
    scores: Optional[ScoreTable] = None,
) -> list[Path]:
    if isinstance(obj, CorrelationMatrix):
        return emit_matrix(obj, fmt, out_dir)
    if not obj.rows:
        raise ReportError("sweep is empty")
    if scores is None:
        raise ReportError("a sweep report needs a score table")
    return emit_sweep(obj, scores, fmt, out_dir)
