"""Corpus records and streaming readers."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Union

from ..core_text import TextDecodeError

log = logging.getLogger(__name__)


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class CorpusRecord:
    record_id: str
    text: str
    language: str
    task: Optional[str] = None


@dataclass(frozen=True)
class Malformed:
    """A corpus line that could not become a record."""

    line: int
    reason: str


def _detect_format(path: Path) -> str:
    return "jsonl" if path.suffix in (".jsonl", ".json", ".ndjson") else "text"


def _open_lines(path: Path) -> Iterator[tuple[int, str]]:
    # read bytes so a decode failure can name its offset
    offset = 0
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise TextDecodeError(offset + exc.start, exc.reason) from None
            offset += len(raw)
            yield lineno, line.rstrip("\r\n")


def read_corpus(
    path: Union[str, Path],
    fmt: str = "auto",
    lang: Optional[str] = None,
    task: Optional[str] = None,
) -> Iterator[Union[CorpusRecord, Malformed]]:
    """Yield records one line at a time.

    JSON-lines records carry ``id``, ``text``, ``lang`` and optionally
    ``task``. Plain text is one record per line with ids ``line-<n>`` and
    the language taken from ``lang``.
    """
    path = Path(path)
    if fmt == "auto":
        fmt = _detect_format(path)
    if fmt == "text" and not lang:
        raise CorpusError("plain-text corpora need a language (--lang)")
    for lineno, line in _open_lines(path):
        if fmt == "text":
            if not line.strip():
                continue
            yield CorpusRecord(f"line-{lineno}", line, lang.lower(), task)
            continue
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            yield Malformed(lineno, f"invalid JSON: {exc.msg}")
            continue
        if not isinstance(obj, dict):
            yield Malformed(lineno, "record is not a JSON object")
            continue
        rid, text, rec_lang = obj.get("id"), obj.get("text"), obj.get("lang") or lang
        if rid is None or rid == "":
            yield Malformed(lineno, "missing id")
        elif not isinstance(text, str) or not text:
            yield Malformed(lineno, "missing or empty text")
        elif not isinstance(rec_lang, str) or not rec_lang:
            yield Malformed(lineno, "missing lang")
        else:
            yield CorpusRecord(str(rid), text, rec_lang.lower(), obj.get("task") or task)


def write_corpus(records, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            obj = {"id": rec.record_id, "text": rec.text, "lang": rec.language}
            if rec.task:
                obj["task"] = rec.task
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
