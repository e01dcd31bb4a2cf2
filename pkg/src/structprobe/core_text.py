"""Text model shared by tokenizers, perturbations and metrics.

The unit of "character" work is the extended grapheme cluster. A code-point
unit is available (``unit="codepoint"``) for comparison against tools that
split text per code point.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Sequence, Union

import regex

GRAPHEME = "grapheme"
CODEPOINT = "codepoint"
UNITS = (GRAPHEME, CODEPOINT)

_CLUSTER = regex.compile(r"\X")


class TextDecodeError(ValueError):
    """Raised when input bytes are not valid UTF-8."""

    def __init__(self, offset: int, reason: str):
        super().__init__(f"invalid UTF-8 at byte offset {offset}: {reason}")
        self.offset = offset


class Granularity(str, Enum):
    CHARACTER = "character"
    SUBWORD = "subword"


@dataclass(frozen=True)
class Grapheme:
    surface: str
    original_index: int


@dataclass(frozen=True)
class Token:
    surface: str
    char_span: tuple[int, ...]


def decode(data: Union[str, bytes]) -> str:
    if isinstance(data, str):
        return data
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise TextDecodeError(exc.start, exc.reason) from None


def split_units(text: Union[str, bytes], unit: str = GRAPHEME) -> list[str]:
    """Split text into its character units (grapheme clusters or code points)."""
    text = decode(text)
    if unit == GRAPHEME:
        return _CLUSTER.findall(text)
    if unit == CODEPOINT:
        return list(text)
    raise ValueError(f"unknown unit {unit!r}; expected one of {UNITS}")


def segment_graphemes(text: Union[str, bytes], unit: str = GRAPHEME) -> list[Grapheme]:
    return [Grapheme(s, i) for i, s in enumerate(split_units(text, unit))]


@dataclass(frozen=True)
class TokenSequence:
    """Tokens of ``source_text`` in source order.

    Every token records the original unit indices it covers, so any
    permutation of ``tokens`` can be expanded back to a per-unit trace.
    """

    tokens: tuple[Token, ...]
    source_text: str
    granularity: Granularity
    unit: str = GRAPHEME
    tokenizer: str = ""

    def __post_init__(self) -> None:
        expected = 0
        for tok in self.tokens:
            span = tok.char_span
            if not span or span != tuple(range(expected, expected + len(span))):
                raise ValueError(f"token {tok.surface!r} has non-contiguous span {span}")
            expected += len(span)
        if expected != len(self.units):
            raise ValueError(
                f"tokens cover {expected} units but source has {len(self.units)}"
            )

    @cached_property
    def units(self) -> tuple[str, ...]:
        return tuple(split_units(self.source_text, self.unit))

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    @classmethod
    def from_groups(
        cls,
        groups: Iterable[Sequence[str]],
        source_text: str,
        granularity: Granularity,
        unit: str = GRAPHEME,
        tokenizer: str = "",
    ) -> "TokenSequence":
        """Build from consecutive runs of units (each run becomes one token)."""
        tokens = []
        start = 0
        for group in groups:
            tokens.append(Token("".join(group), tuple(range(start, start + len(group)))))
            start += len(group)
        return cls(tuple(tokens), source_text, granularity, unit, tokenizer)


@dataclass(frozen=True)
class CharIndexTrace:
    """``indices[i]`` is the original position of the unit now at position i."""

    indices: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.indices)

    def is_permutation(self) -> bool:
        return sorted(self.indices) == list(range(len(self.indices)))

    @classmethod
    def identity(cls, n: int) -> "CharIndexTrace":
        return cls(tuple(range(n)))

    @classmethod
    def from_tokens(cls, tokens: Iterable[Token]) -> "CharIndexTrace":
        return cls(tuple(i for tok in tokens for i in tok.char_span))


def reconstruct(tokens: Union[TokenSequence, Iterable[Token]]) -> str:
    """Concatenate token surfaces in their current order with no separator."""
    return "".join(tok.surface for tok in tokens)


def apply_trace(units: Sequence[str], trace: Union[CharIndexTrace, Sequence[int]]) -> str:
    indices = trace.indices if isinstance(trace, CharIndexTrace) else trace
    return "".join(units[i] for i in indices)
