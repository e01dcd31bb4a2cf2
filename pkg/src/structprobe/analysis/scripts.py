"""Script detection and language metadata."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

from fontTools.unicodedata import script as _codepoint_script

from ..core_text import split_units

COMMON = "Zyyy"
# Common, Inherited and Unknown carry no script signal of their own
_NEUTRAL = {"Zyyy", "Zinh", "Zzzz"}


def script_counts(text: str) -> Counter:
    counts: Counter = Counter()
    for cluster in split_units(text):
        sc = _codepoint_script(cluster[0])
        if sc not in _NEUTRAL:
            counts[sc] += 1
    return counts


def majority_script(counts: Counter) -> str:
    if not counts:
        return COMMON
    best = max(counts.values())
    return min(sc for sc, c in counts.items() if c == best)


def detect_script(text: Union[str, Iterable[str]]) -> str:
    """ISO 15924 code of the majority script among non-neutral graphemes.

    Ties resolve to the lexicographically first code; text with no script
    signal at all is ``"Zyyy"``. An iterable of strings is pooled.

    >>> detect_script("hello")
    'Latn'
    >>> detect_script("abc 你好吗")
    'Hani'
    """
    if isinstance(text, str):
        return majority_script(script_counts(text))
    total: Counter = Counter()
    for t in text:
        total.update(script_counts(t))
    return majority_script(total)


@dataclass(frozen=True)
class LanguageInfo:
    family: Optional[str] = None
    script_override: Optional[str] = None


def load_lang_meta(path: Union[str, Path]) -> dict[str, LanguageInfo]:
    """Read a ``lang,family,script_override`` CSV. Empty cells mean unknown."""
    meta: dict[str, LanguageInfo] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "lang" not in reader.fieldnames:
            raise ValueError(f"{path}: language metadata needs a 'lang' column")
        for lineno, row in enumerate(reader, start=2):
            lang = (row.get("lang") or "").strip().lower()
            if not lang:
                raise ValueError(f"{path}:{lineno}: empty lang")
            if lang in meta:
                raise ValueError(f"{path}:{lineno}: duplicate lang {lang!r}")
            meta[lang] = LanguageInfo(
                family=(row.get("family") or "").strip() or None,
                script_override=(row.get("script_override") or "").strip() or None,
            )
    return meta
