"""Quantifying how much a perturbation damaged local and global structure."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .core_text import GRAPHEME, CharIndexTrace, Granularity, split_units
from .perturb import Kind, PerturbationResult, PerturbationSpec

TraceLike = Union[CharIndexTrace, Sequence[int]]


@dataclass(frozen=True)
class ChrfConfig:
    max_n: int = 2
    beta: float = 2.0
    whitespace_included: bool = True
    bigram_only: bool = False
    unit: str = GRAPHEME

    def __post_init__(self) -> None:
        if self.max_n < 1:
            raise ValueError("max_n must be >= 1")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if self.bigram_only and self.max_n < 2:
            raise ValueError("bigram_only needs max_n >= 2")

    @property
    def orders(self) -> tuple[int, ...]:
        if self.bigram_only:
            return (2,)
        return tuple(range(1, self.max_n + 1))


DEFAULT_CHRF = ChrfConfig()


def _ngrams(units: Sequence[str], n: int) -> Counter:
    if n == 1:
        return Counter(units)
    return Counter(zip(*(units[i:] for i in range(n))))


def f_beta(precision: float, recall: float, beta: float) -> float:
    if precision == 0.0 and recall == 0.0:
        return 0.0
    b2 = beta * beta
    return (1 + b2) * precision * recall / (b2 * precision + recall)


class ChrfScorer:
    """Scores many hypotheses against one reference, reusing its n-gram counts."""

    def __init__(self, reference: Sequence[str], cfg: ChrfConfig = DEFAULT_CHRF):
        self.cfg = cfg
        self.reference = self._filter(reference)
        self._ref_grams = {}
        for n in cfg.orders:
            grams = _ngrams(self.reference, n)
            if grams:
                self._ref_grams[n] = (grams, sum(grams.values()))

    def _filter(self, units: Sequence[str]) -> Sequence[str]:
        if self.cfg.whitespace_included:
            return units
        return [u for u in units if not u.isspace()]

    def orders(self, hypothesis: Sequence[str]) -> dict[int, float]:
        hyp = self._filter(hypothesis)
        scores = {}
        for n, (ref_grams, ref_total) in self._ref_grams.items():
            hyp_grams = _ngrams(hyp, n)
            hyp_total = len(hyp) - n + 1 if len(hyp) >= n else 0
            matches = sum((ref_grams & hyp_grams).values())
            precision = matches / hyp_total if hyp_total else 0.0
            scores[n] = f_beta(precision, matches / ref_total, self.cfg.beta)
        return scores

    def score(self, hypothesis: Sequence[str]) -> float:
        scores = self.orders(hypothesis)
        if not scores:
            hyp = self._filter(hypothesis)
            return 100.0 if list(hyp) == list(self.reference) else 0.0
        return 100.0 * sum(scores.values()) / len(scores)


def chrf_orders(
    original: str, perturbed: str, cfg: ChrfConfig = DEFAULT_CHRF
) -> dict[int, float]:
    """F-score per n-gram order, in [0, 1]. Orders with an empty reference are omitted."""
    scorer = ChrfScorer(split_units(original, cfg.unit), cfg)
    return scorer.orders(split_units(perturbed, cfg.unit))


def chrf(original: str, perturbed: str, cfg: ChrfConfig = DEFAULT_CHRF) -> float:
    """Character n-gram F-score of ``perturbed`` against ``original``, 0 to 100.

    Orders whose reference has no n-grams are skipped; if every order is
    skipped the score is 100 for equal inputs (two empty strings included)
    and 0 otherwise.
    """
    scorer = ChrfScorer(split_units(original, cfg.unit), cfg)
    return scorer.score(split_units(perturbed, cfg.unit))


def _indices(trace: TraceLike) -> Sequence[int]:
    return trace.indices if isinstance(trace, CharIndexTrace) else trace


def idc(trace: TraceLike) -> float:
    """Mean absolute displacement of each unit, as a fraction of the length."""
    xs = _indices(trace)
    n = len(xs)
    if n == 0:
        return 0.0
    total = sum(abs(i - x) for i, x in enumerate(xs))
    return total / n / n


def dnd(trace: TraceLike) -> float:
    """Fraction of adjacent pairs that are not consecutive in original order.

    A pair counts as intact when ``x[i+1] - x[i] == 1``.
    """
    xs = _indices(trace)
    n = len(xs)
    if n < 2:
        return 0.0
    broken = sum(1 for a, b in zip(xs, xs[1:]) if b - a != 1)
    return broken / (n - 1)


def compression_rate(
    text: str, token_count: int, special_token_count: int = 0, unit: str = GRAPHEME
) -> Optional[float]:
    """Units per token. ``None`` for empty text."""
    n = len(split_units(text, unit))
    if n == 0:
        return None
    return n / (token_count + special_token_count)


@dataclass(frozen=True)
class MetricReport:
    chrf: float
    idc: Optional[float]
    dnd: Optional[float]
    comp: Optional[float] = None
    record_id: str = ""
    spec: Optional[PerturbationSpec] = None
    length: int = 0

    @property
    def setting_id(self) -> str:
        return self.spec.setting_id if self.spec is not None else ""

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "setting_id": self.setting_id,
            "chrf": self.chrf,
            "idc": self.idc,
            "dnd": self.dnd,
            "comp": self.comp,
        }


CSV_COLUMNS = ("record_id", "setting_id", "chrf", "idc", "dnd", "comp")
METRIC_NAMES = ("chrf", "idc", "dnd", "comp")


def perturbed_token_count(result: PerturbationResult, tokenizer) -> int:
    """Token count of the perturbed text as the compression tokenizer sees it.

    A subword permutation made by that same tokenizer keeps its tokens, so
    the count carries over unchanged; anything else is re-tokenized.
    """
    if (
        result.spec.granularity is Granularity.SUBWORD
        and result.spec.kind is not Kind.NONE
        and result.tokenizer_name == tokenizer.name
    ):
        return len(result.tokens)
    return len(tokenizer(result.perturbed_text).tokens)


def measure(
    original: str,
    result: PerturbationResult,
    comp_tokenizer=None,
    cfg: ChrfConfig = DEFAULT_CHRF,
    record_id: str = "",
    scorer: Optional[ChrfScorer] = None,
    units: Optional[Sequence[str]] = None,
) -> MetricReport:
    """All metrics for one perturbed record.

    The perturbed side is scored in the original's unit segmentation (the
    trace applied to the original units), so a shuffle that happens to fuse
    two clusters does not change the unit count. ``scorer`` and ``units``
    are caches for callers measuring many perturbations of one original.
    """
    if units is None:
        units = split_units(original, cfg.unit)
    if len(units) != len(result.trace):
        raise ValueError(
            f"trace covers {len(result.trace)} units but the original has {len(units)}"
        )
    if scorer is None:
        scorer = ChrfScorer(units, cfg)
    comp = None
    if comp_tokenizer is not None:
        count = perturbed_token_count(result, comp_tokenizer)
        comp = len(units) / (count + comp_tokenizer.special_token_count) if units else None
    hyp = [units[i] for i in result.trace.indices]
    return MetricReport(
        chrf=scorer.score(hyp),
        idc=idc(result.trace),
        dnd=dnd(result.trace),
        comp=comp,
        record_id=record_id,
        spec=result.spec,
        length=len(result.trace),
    )


def aggregate(
    reports: Sequence[MetricReport], weighting: str = "macro"
) -> dict[str, Optional[float]]:
    """Mean of each metric over records; ``weighting='length'`` weights by unit count."""
    if weighting not in ("macro", "length"):
        raise ValueError(f"unknown weighting {weighting!r}")
    out: dict[str, Optional[float]] = {}
    for name in METRIC_NAMES:
        pairs = [
            (getattr(r, name), r.length if weighting == "length" else 1)
            for r in reports
            if getattr(r, name) is not None
        ]
        total_w = sum(w for _, w in pairs)
        out[name] = math.fsum(v * w for v, w in pairs) / total_w if total_w else None
    return out
