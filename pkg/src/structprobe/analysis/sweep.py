"""Perturbation sweeps over a corpus."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import statistics
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from ..core_text import Granularity, TokenSequence
from ..metrics import DEFAULT_CHRF, ChrfConfig, ChrfScorer, measure
from ..perturb import Kind, PerturbationSpec, perturb
from ..rng import SeedPolicy
from .corpus import CorpusRecord, Malformed
from .scripts import majority_script, script_counts

log = logging.getLogger(__name__)

SWEEP_METRICS = ("chrf", "idc", "dnd", "comp")
MAX_SKIP_FRACTION = 0.10


class SweepError(RuntimeError):
    pass


@dataclass(frozen=True)
class SweepRow:
    record_id: str
    language: str
    setting_id: str
    seed_index: int
    seed: int
    chrf: float
    idc: float
    dnd: float
    comp: Optional[float]
    length: int
    text_digest: str
    task: Optional[str] = None
    perturbed_text: Optional[str] = None

    def to_json(self) -> str:
        obj = asdict(self)
        if obj["perturbed_text"] is None:
            del obj["perturbed_text"]
        return json.dumps(obj, ensure_ascii=False, sort_keys=True)


@dataclass(frozen=True)
class Aggregate:
    setting_id: str
    language: str
    n: int
    means: dict
    stds: dict


@dataclass
class SweepReport:
    specs: list[PerturbationSpec]
    rows: list[SweepRow]
    languages: dict[str, dict] = field(default_factory=dict)
    skipped: list[str] = field(default_factory=list)
    n_seeds: int = 1

    @property
    def aggregates(self) -> dict[tuple[str, str], Aggregate]:
        return aggregate_rows(self.rows)

    def spec_by_id(self) -> dict[str, PerturbationSpec]:
        return {s.setting_id: s for s in self.specs}


def aggregate_rows(
    rows: Iterable[SweepRow], weighting: str = "macro"
) -> dict[tuple[str, str], Aggregate]:
    """Mean and population std of each metric per (setting, language)."""
    groups: dict[tuple[str, str], list[SweepRow]] = defaultdict(list)
    for row in rows:
        groups[(row.setting_id, row.language)].append(row)
    out = {}
    for key in sorted(groups):
        members = groups[key]
        means, stds = {}, {}
        for name in SWEEP_METRICS:
            vals = [(getattr(r, name), r.length) for r in members if getattr(r, name) is not None]
            if not vals:
                means[name] = stds[name] = None
                continue
            if weighting == "length":
                total = sum(w for _, w in vals)
                mean = math.fsum(v * w for v, w in vals) / total
                var = math.fsum(w * (v - mean) ** 2 for v, w in vals) / total
                means[name], stds[name] = mean, math.sqrt(var)
            else:
                xs = [v for v, _ in vals]
                means[name] = math.fsum(xs) / len(xs)
                stds[name] = statistics.pstdev(xs)
        out[key] = Aggregate(key[0], key[1], len(members), means, stds)
    return out


def _digest(text: str) -> str:
    return hashlib.blake2b(text.encode("utf-8"), digest_size=8).hexdigest()


@dataclass(frozen=True)
class _Job:
    specs: tuple
    tokenizers: Mapping
    comp_tokenizer: object
    policy: SeedPolicy
    n_seeds: int
    cfg: ChrfConfig
    keep_text: bool


def _sweep_record(job: _Job, record: CorpusRecord) -> list[SweepRow]:
    seqs: dict[Granularity, TokenSequence] = {}
    scorer = None
    rows = []
    for spec in job.specs:
        gran = spec.granularity
        if gran not in seqs:
            seqs[gran] = job.tokenizers[gran](record.text)
        seq = seqs[gran]
        if scorer is None:
            scorer = ChrfScorer(seq.units, job.cfg)
        for k in range(job.n_seeds):
            seed = job.policy.derive(record.record_id, spec.setting_id, k)
            result = perturb(seq, spec, seed)
            rep = measure(
                record.text, result, job.comp_tokenizer, job.cfg, record.record_id, scorer, seq.units
            )
            rows.append(
                SweepRow(
                    record_id=record.record_id,
                    language=record.language,
                    setting_id=spec.setting_id,
                    seed_index=k,
                    seed=seed,
                    chrf=rep.chrf,
                    idc=rep.idc,
                    dnd=rep.dnd,
                    comp=rep.comp,
                    length=rep.length,
                    text_digest=_digest(result.perturbed_text),
                    task=record.task,
                    perturbed_text=result.perturbed_text if job.keep_text else None,
                )
            )
    return rows


def _sweep_chunk(job: _Job, records: Sequence[CorpusRecord]) -> list[list[SweepRow]]:
    return [_sweep_record(job, r) for r in records]


def run_sweep(
    corpus: Iterable[Union[CorpusRecord, Malformed]],
    sweep: Sequence[PerturbationSpec],
    tokenizers: Mapping[Granularity, object],
    seed_policy: SeedPolicy = SeedPolicy(),
    n_seeds: int = 5,
    comp_tokenizer=None,
    cfg: ChrfConfig = DEFAULT_CHRF,
    keep_text: bool = False,
    workers: int = 1,
    chunk_size: int = 32,
) -> SweepReport:
    """Perturb and measure every (record, setting, seed) triple.

    Seeds derive from the record id, the setting id and the seed index, so
    the result does not depend on record order or on ``workers``. The
    benchmark (``kind=none``) is run ``n_seeds`` times like every other
    setting; its duplicate rows are kept.
    """
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    if not sweep:
        raise ValueError("empty sweep")
    needed = {s.granularity for s in sweep if s.kind is not Kind.NONE} | {Granularity.CHARACTER}
    missing = needed - set(tokenizers)
    if missing:
        raise ValueError(f"no tokenizer for granularity {sorted(g.value for g in missing)}")

    records: list[CorpusRecord] = []
    skipped: list[str] = []
    seen: set[str] = set()
    total = 0
    for item in corpus:
        total += 1
        if isinstance(item, Malformed):
            skipped.append(f"line {item.line}: {item.reason}")
        elif item.record_id in seen:
            skipped.append(f"record {item.record_id!r}: duplicate id")
        elif not item.text:
            skipped.append(f"record {item.record_id!r}: empty text")
        else:
            seen.add(item.record_id)
            records.append(item)
            continue
        log.warning("skipping %s", skipped[-1])
    if not records:
        raise SweepError("corpus has no usable records")
    if len(skipped) > MAX_SKIP_FRACTION * total:
        raise SweepError(f"{len(skipped)} of {total} records malformed (limit 10%)")

    job = _Job(tuple(sweep), dict(tokenizers), comp_tokenizer, seed_policy, n_seeds, cfg, keep_text)
    if workers > 1:
        chunks = [records[i : i + chunk_size] for i in range(0, len(records), chunk_size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_sweep_chunk, [job] * len(chunks), chunks)
            per_record = [rows for part in parts for rows in part]
    else:
        per_record = [_sweep_record(job, r) for r in records]

    counts_by_lang: dict[str, Counter] = defaultdict(Counter)
    n_by_lang: dict[str, int] = defaultdict(int)
    for rec in records:
        counts_by_lang[rec.language].update(script_counts(rec.text))
        n_by_lang[rec.language] += 1
    languages = {
        lang: {"script": majority_script(counts_by_lang[lang]), "n_records": n_by_lang[lang]}
        for lang in sorted(n_by_lang)
    }
    return SweepReport(
        specs=list(sweep),
        rows=[row for rows in per_record for row in rows],
        languages=languages,
        skipped=skipped,
        n_seeds=n_seeds,
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else str(value)


def write_sweep(report: SweepReport, out_dir: Union[str, Path]) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = ("sweep.jsonl", "sweep_agg.csv", "languages.csv", "sweep_specs.json")
    paths = [out / name for name in names]
    with open(paths[0], "w", encoding="utf-8", newline="\n") as fh:
        for row in report.rows:
            fh.write(row.to_json() + "\n")
    with open(paths[1], "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["setting_id", "language", "n"]
        for name in SWEEP_METRICS:
            header += [f"{name}_mean", f"{name}_std"]
        writer.writerow(header)
        for agg in report.aggregates.values():
            line = [agg.setting_id, agg.language, agg.n]
            for name in SWEEP_METRICS:
                line += [_fmt(agg.means[name]), _fmt(agg.stds[name])]
            writer.writerow(line)
    with open(paths[2], "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["language", "script", "n_records"])
        for lang, info in report.languages.items():
            writer.writerow([lang, info["script"], info["n_records"]])
    paths[3].write_text(
        json.dumps(
            {"n_seeds": report.n_seeds, "specs": [s.to_dict() for s in report.specs]},
            indent=2,
            ensure_ascii=False,
        )
        + "\n",
        encoding="utf-8",
    )
    return paths


def read_sweep(out_dir: Union[str, Path]) -> SweepReport:
    out = Path(out_dir)
    meta = json.loads((out / "sweep_specs.json").read_text(encoding="utf-8"))
    specs = [PerturbationSpec.from_dict(d) for d in meta["specs"]]
    rows = []
    with open(out / "sweep.jsonl", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(SweepRow(**json.loads(line)))
    languages = {}
    with open(out / "languages.csv", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            languages[row["language"]] = {"script": row["script"], "n_records": int(row["n_records"])}
    return SweepReport(specs, rows, languages, [], meta.get("n_seeds", 1))
