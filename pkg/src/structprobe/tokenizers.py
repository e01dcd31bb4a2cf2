"""Tokenizers producing :class:`TokenSequence` at character or subword granularity."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Union

from .core_text import GRAPHEME, Granularity, TokenSequence, split_units

@dataclass(frozen=True)
class Vocabulary:
    entries: frozenset[str]
    continuation_marker: Optional[str] = None
    special_token_count: int = 0
    attach_whitespace: bool = False

    def __post_init__(self) -> None:
        if self.special_token_count < 0:
            raise ValueError("special_token_count must be >= 0")

    @cached_property
    def max_entry_len(self) -> int:
        # code-point length bounds the unit length under either unit
        return max((len(e) for e in self.entries), default=0)

    @classmethod
    def from_entries(cls, entries: Iterable[str], **kwargs) -> "Vocabulary":
        return cls(frozenset(entries), **kwargs)


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def parse_vocabulary(text: str) -> Vocabulary:
    """Parse a vocabulary file body.

    One entry per line. Lines starting with ``#!`` are directives:
    ``special_tokens N``, ``continuation_marker M``, ``attach_whitespace B``.
    """
    entries = set()
    options: dict = {}
    for lineno, line in enumerate(text.split("\n"), start=1):
        line = line.rstrip("\r")
        if not line:
            continue
        if line.startswith("#!"):
            parts = line[2:].strip().split(None, 1)
            if not parts:
                raise ValueError(f"line {lineno}: empty directive")
            name, value = parts[0], (parts[1] if len(parts) > 1 else "")
            if name == "special_tokens":
                options["special_token_count"] = int(value)
            elif name == "continuation_marker":
                options["continuation_marker"] = value or None
            elif name == "attach_whitespace":
                options["attach_whitespace"] = _parse_bool(value)
            else:
                raise ValueError(f"line {lineno}: unknown directive {name!r}")
            continue
        entries.add(line)
    if not entries:
        raise ValueError("vocabulary has no entries")
    return Vocabulary(frozenset(entries), **options)


def load_vocabulary(path: Union[str, Path]) -> Vocabulary:
    return parse_vocabulary(Path(path).read_text(encoding="utf-8"))


def tokenize_chars(text: str, unit: str = GRAPHEME) -> TokenSequence:
    units = split_units(text, unit)
    return TokenSequence.from_groups(
        ([u] for u in units), text, Granularity.CHARACTER, unit, f"char:{unit}"
    )


def _whitespace_groups(units: list[str]) -> list[list[str]]:
    # each whitespace run joins the token before it; leading whitespace joins the first
    groups: list[list[str]] = []
    pending_lead: list[str] = []
    prev_space = False
    for u in units:
        if u.isspace():
            if groups:
                groups[-1].append(u)
            else:
                pending_lead.append(u)
            prev_space = True
            continue
        if not groups:
            groups.append(pending_lead + [u])
            pending_lead = []
        elif prev_space:
            groups.append([u])
        else:
            groups[-1].append(u)
        prev_space = False
    if pending_lead:
        groups.append(pending_lead)
    return groups


def tokenize_whitespace(text: str, unit: str = GRAPHEME) -> TokenSequence:
    units = split_units(text, unit)
    return TokenSequence.from_groups(
        _whitespace_groups(units), text, Granularity.SUBWORD, unit, f"whitespace:{unit}"
    )


def tokenize_vocab_greedy(
    text: str, vocab: Vocabulary, unit: str = GRAPHEME, name: str = "vocab"
) -> TokenSequence:
    """Greedy longest-match segmentation, left to right.

    Units not covered by any entry become single-unit tokens. With a
    continuation marker, entries carrying the marker only match inside a
    word and unmarked entries only at a word start.
    """
    if not vocab.entries:
        raise ValueError("vocabulary is empty")
    units = split_units(text, unit)
    marker = vocab.continuation_marker or ""
    longest = vocab.max_entry_len
    entries = vocab.entries

    groups: list[list[str]] = []
    lead: list[str] = []
    i = 0
    n = len(units)
    while i < n:
        if vocab.attach_whitespace and units[i].isspace():
            (groups[-1] if groups else lead).append(units[i])
            i += 1
            continue
        in_word = marker and i > 0 and not units[i - 1].isspace()
        prefix = marker if in_word else ""
        width = 1
        for w in range(min(longest, n - i), 0, -1):
            if prefix + "".join(units[i : i + w]) in entries:
                width = w
                break
        groups.append(lead + units[i : i + width])
        lead = []
        i += width
    if lead:
        groups.append(lead)
    return TokenSequence.from_groups(groups, text, Granularity.SUBWORD, unit, f"{name}:{unit}")


class CharTokenizer:
    granularity = Granularity.CHARACTER
    special_token_count = 0

    def __init__(self, unit: str = GRAPHEME):
        self.unit = unit
        self.name = f"char:{unit}"

    def __call__(self, text: str) -> TokenSequence:
        return tokenize_chars(text, self.unit)


class WhitespaceTokenizer:
    granularity = Granularity.SUBWORD
    special_token_count = 0

    def __init__(self, unit: str = GRAPHEME):
        self.unit = unit
        self.name = f"whitespace:{unit}"

    def __call__(self, text: str) -> TokenSequence:
        return tokenize_whitespace(text, self.unit)


class VocabTokenizer:
    granularity = Granularity.SUBWORD

    def __init__(self, vocab: Vocabulary, unit: str = GRAPHEME, name: str = "vocab"):
        self.vocab = vocab
        self.unit = unit
        self.base_name = name
        self.name = f"{name}:{unit}"

    @property
    def special_token_count(self) -> int:
        return self.vocab.special_token_count

    def __call__(self, text: str) -> TokenSequence:
        return tokenize_vocab_greedy(text, self.vocab, self.unit, self.base_name)
