"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .analysis.corpus import CorpusError, read_corpus
from .analysis.correlation import DEFAULT_METRICS, GROUPINGS, correlate
from .analysis.report import ReportError, emit_matrix, emit_sweep
from .analysis.scores import ScoreTableError, ingest_scores
from .analysis.scripts import load_lang_meta
from .analysis.sweep import SweepError, read_sweep, run_sweep, write_sweep
from .core_text import (
    GRAPHEME,
    UNITS,
    CharIndexTrace,
    Granularity,
    TextDecodeError,
    decode,
    split_units,
)
from .metrics import CSV_COLUMNS, ChrfConfig, ChrfScorer, dnd, idc
from .perturb import (
    BUILTIN_SWEEPS,
    Kind,
    PerturbationSpec,
    SpecError,
    flip_prob_to_rho,
    perturb,
    sweep_from_json,
    sweep_to_json,
)
from .rng import SeedPolicy
from .tokenizers import CharTokenizer, VocabTokenizer, WhitespaceTokenizer, load_vocabulary

log = logging.getLogger("structprobe")

EXIT_USAGE, EXIT_DATA, EXIT_IO = 1, 2, 3
DATA_ERRORS = (
    ValueError,
    SpecError,
    ScoreTableError,
    SweepError,
    TextDecodeError,
    CorpusError,
    ReportError,
    KeyError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# manifest ---------------------------------------------------------------


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def sweep_hash(specs) -> str:
    canonical = json.dumps([s.to_dict() for s in specs], sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def write_manifest(path: Path, command: str, args, inputs: Sequence, extra: Optional[dict] = None):
    manifest = {
        "tool": "structprobe",
        "version": __version__,
        "command": command,
        "global_seed": getattr(args, "seed", None),
        "inputs": {str(p): file_sha256(p) for p in inputs if p and p != "-"},
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    manifest.update(extra or {})
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


# shared builders --------------------------------------------------------


def _subword_tokenizer(args):
    if args.tokenizer == "vocab":
        if not args.vocab:
            raise UsageError("--tokenizer vocab needs --vocab PATH")
        return VocabTokenizer(load_vocabulary(args.vocab), args.unit)
    return WhitespaceTokenizer(args.unit)


def _comp_tokenizer(args, default):
    if getattr(args, "comp_vocab", None):
        return VocabTokenizer(load_vocabulary(args.comp_vocab), args.unit, name="comp-vocab")
    return default


def _chrf_config(args) -> ChrfConfig:
    return ChrfConfig(
        max_n=args.max_n,
        beta=args.beta,
        whitespace_included=not args.no_whitespace,
        bigram_only=args.bigram_only,
        unit=args.unit,
    )


def _resolve_rho(args) -> Optional[float]:
    if args.rho is not None and args.flip_prob is not None:
        raise UsageError("give --rho or --flip-prob, not both")
    if args.flip_prob is not None:
        return flip_prob_to_rho(args.flip_prob)
    return args.rho


def _load_sweep(name: str):
    if name in BUILTIN_SWEEPS:
        return BUILTIN_SWEEPS[name](), name
    path = Path(name)
    if not path.exists():
        raise UsageError(f"unknown sweep {name!r}: not a built-in ({sorted(BUILTIN_SWEEPS)}) or file")
    return sweep_from_json(path.read_text(encoding="utf-8")), str(path)


def _read_lines(path: str) -> list[str]:
    data = sys.stdin.buffer.read() if path == "-" else Path(path).read_bytes()
    text = decode(data)
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [line.rstrip("\r") for line in lines]


def _open_out(path: Optional[str]):
    if not path or path == "-":
        return sys.stdout
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline="\n")


# commands ---------------------------------------------------------------


def cmd_perturb(args) -> int:
    rho = _resolve_rho(args)
    try:
        spec = PerturbationSpec(Kind(args.kind), Granularity(args.granularity), rho)
    except SpecError as exc:
        raise UsageError(str(exc)) from None
    if spec.granularity is Granularity.CHARACTER:
        tokenizer = CharTokenizer(args.unit)
    else:
        tokenizer = _subword_tokenizer(args)
    policy = SeedPolicy(args.seed)

    lines = _read_lines(args.input)
    out = _open_out(args.output)
    try:
        for lineno, line in enumerate(lines, start=1):
            if args.input_format == "jsonl":
                if not line.strip():
                    continue
                obj = json.loads(line)
                rid, text = str(obj["id"]), obj["text"]
            else:
                rid, text = f"line-{lineno}", line
            seed = policy.derive(rid, spec.setting_id, args.seed_index)
            result = perturb(tokenizer(text), spec, seed)
            if args.emit_trace:
                obj = {
                    "id": rid,
                    "text": result.perturbed_text,
                    "trace": list(result.trace.indices),
                    "seed": seed,
                    "setting_id": spec.setting_id,
                }
                out.write(json.dumps(obj, ensure_ascii=False) + "\n")
            else:
                out.write(result.perturbed_text + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    manifest_path = args.manifest or (f"{args.output}.manifest.json" if args.output else None)
    if manifest_path:
        write_manifest(
            Path(manifest_path), "perturb", args, [args.input],
            {"spec": spec.to_dict(), "seed_index": args.seed_index},
        )
    return 0


def _read_perturbed(path: str, fmt: str) -> list[dict]:
    lines = _read_lines(path)
    if fmt == "auto":
        first = next((ln for ln in lines if ln.strip()), "")
        fmt = "text"
        if path.endswith(".jsonl") or first.lstrip().startswith("{"):
            try:
                fmt = "jsonl" if isinstance(json.loads(first), dict) else "text"
            except json.JSONDecodeError:
                fmt = "text"
    if fmt == "text":
        return [{"text": ln} for ln in lines]
    return [json.loads(ln) for ln in lines if ln.strip()]


def _cell(value) -> str:
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else str(value)


def cmd_measure(args) -> int:
    originals = _read_lines(args.original)
    perturbed = _read_perturbed(args.perturbed, args.perturbed_format)
    if len(originals) != len(perturbed):
        raise ValueError(
            f"record count mismatch: original has {len(originals)}, perturbed has "
            f"{len(perturbed)} ({len(originals)} != {len(perturbed)})"
        )
    cfg = _chrf_config(args)
    comp_tok = _comp_tokenizer(args, None)
    rows = []
    for lineno, (orig, rec) in enumerate(zip(originals, perturbed), start=1):
        units = split_units(orig, args.unit)
        text = rec["text"]
        chrf_value = ChrfScorer(units, cfg).score(split_units(text, args.unit))
        idc_value = dnd_value = None
        if "trace" in rec:
            trace = CharIndexTrace(tuple(rec["trace"]))
            if len(trace) != len(units) or not trace.is_permutation():
                raise ValueError(f"record {lineno}: trace is not a permutation of the original")
            hyp = [units[i] for i in trace.indices]
            chrf_value = ChrfScorer(units, cfg).score(hyp)
            idc_value, dnd_value = idc(trace), dnd(trace)
        comp = None
        if comp_tok is not None and units:
            comp = len(units) / (len(comp_tok(text).tokens) + comp_tok.special_token_count)
        rows.append(
            {
                "record_id": rec.get("id", f"line-{lineno}"),
                "setting_id": rec.get("setting_id", ""),
                "chrf": chrf_value,
                "idc": idc_value,
                "dnd": dnd_value,
                "comp": comp,
            }
        )
    out = _open_out(args.output)
    try:
        if args.format == "csv":
            writer = csv.writer(out, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in rows:
                writer.writerow([_cell(row[c]) for c in CSV_COLUMNS])
        else:
            for row in rows:
                out.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    manifest_path = args.manifest or (f"{args.output}.manifest.json" if args.output else None)
    if manifest_path:
        write_manifest(Path(manifest_path), "measure", args, [args.original, args.perturbed])
    return 0


def cmd_sweep(args) -> int:
    specs, sweep_name = _load_sweep(args.sweep)
    subword = _subword_tokenizer(args)
    tokenizers = {Granularity.CHARACTER: CharTokenizer(args.unit), Granularity.SUBWORD: subword}
    corpus = read_corpus(args.corpus, args.corpus_format, args.lang)
    report = run_sweep(
        corpus,
        specs,
        tokenizers,
        SeedPolicy(args.seed),
        n_seeds=args.seeds,
        comp_tokenizer=_comp_tokenizer(args, subword),
        cfg=_chrf_config(args),
        keep_text=args.emit_text,
        workers=args.workers,
    )
    out = Path(args.out)
    paths = write_sweep(report, out)
    (out / "sweep.json").write_text(sweep_to_json(specs) + "\n", encoding="utf-8")
    manifest = write_manifest(
        out / "manifest.json",
        "sweep",
        args,
        [args.corpus, args.vocab, args.comp_vocab],
        {
            "sweep": {"name": sweep_name, "hash": sweep_hash(specs), "n_settings": len(specs)},
            "n_seeds": args.seeds,
            "n_records": len({r.record_id for r in report.rows}),
            "n_rows": len(report.rows),
            "skipped": report.skipped,
            "outputs": sorted(str(p.name) for p in paths) + ["sweep.json"],
        },
    )
    print(f"sweep {manifest['sweep']['name']}: {len(specs)} settings, "
          f"{manifest['n_records']} records, {len(report.rows)} rows -> {out}")
    return 0


def _matrices(args, sweep, scores):
    lang_meta = load_lang_meta(args.lang_meta) if args.lang_meta else {}
    metrics = tuple(m.strip() for m in args.metrics.split(",") if m.strip())
    for grouping in args.grouping or ["model"]:
        matrix = correlate(
            sweep, scores, grouping, lang_meta, metrics=metrics,
            method=args.method, per_record=args.per_record,
        )
        if matrix.is_empty():
            log.warning("grouping %r produced no groups; skipped", grouping)
            continue
        yield matrix


def cmd_correlate(args) -> int:
    sweep = read_sweep(args.sweep_dir)
    scores = ingest_scores(args.scores)
    out = Path(args.out or args.sweep_dir)
    written = []
    for matrix in _matrices(args, sweep, scores):
        written += emit_matrix(matrix, "csv", out)
        written += emit_matrix(matrix, "json", out)
    if not written:
        raise ValueError("no correlation matrix could be computed")
    write_manifest(
        out / "correlate_manifest.json", "correlate", args,
        [args.scores, Path(args.sweep_dir) / "sweep.jsonl", args.lang_meta],
        {"outputs": sorted(p.name for p in written)},
    )
    for p in written:
        print(p)
    return 0


def cmd_report(args) -> int:
    sweep = read_sweep(args.sweep_dir)
    scores = ingest_scores(args.scores)
    out = Path(args.out or args.sweep_dir)
    written = []
    for fmt in args.format or ["svg"]:
        written += emit_sweep(sweep, scores, fmt, out)
    if args.grouping:
        for matrix in _matrices(args, sweep, scores):
            for fmt in args.format or ["svg"]:
                written += emit_matrix(matrix, fmt, out)
    write_manifest(
        out / "report_manifest.json", "report", args,
        [args.scores, Path(args.sweep_dir) / "sweep.jsonl"],
        {"outputs": sorted(str(p.relative_to(out)) for p in written)},
    )
    for p in written:
        print(p)
    return 0


# parser -----------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file mirroring the command's flags")
    p.add_argument("--seed", type=int, default=0, help="global seed (default 0)")
    p.add_argument("--unit", choices=UNITS, default=GRAPHEME, help="character unit")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_tokenizer(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tokenizer", choices=("whitespace", "vocab"), default="whitespace",
                   help="subword tokenizer (default whitespace)")
    p.add_argument("--vocab", help="vocabulary file for --tokenizer vocab")


def _add_chrf(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-n", type=int, default=2)
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--bigram-only", action="store_true", help="score order 2 only")
    p.add_argument("--no-whitespace", action="store_true", help="drop whitespace from n-grams")
    p.add_argument("--comp-vocab", help="vocabulary used for the compression rate")


def _add_corr(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sweep-dir", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--grouping", action="append", choices=GROUPINGS)
    p.add_argument("--lang-meta", help="CSV lang,family,script_override")
    p.add_argument("--method", choices=("spearman", "kendall"), default="spearman")
    p.add_argument("--per-record", action="store_true", help="join per record instead of per language")
    p.add_argument("--metrics", default=",".join(DEFAULT_METRICS))
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="structprobe", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"structprobe {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("perturb", help="perturb each input line")
    _add_common(p)
    _add_tokenizer(p)
    p.add_argument("input", nargs="?", default="-", help="input file (default stdin)")
    p.add_argument("--input-format", choices=("text", "jsonl"), default="text")
    p.add_argument("--kind", required=True, choices=[k.value for k in Kind])
    p.add_argument("--granularity", choices=[g.value for g in Granularity], default="character")
    p.add_argument("--rho", type=float,
                   help="neighbor_flip: release probability (1 = unchanged); phrase_shuffle: cut probability")
    p.add_argument("--flip-prob", type=float, help="neighbor_flip: 1 - rho")
    p.add_argument("--seed-index", type=int, default=0)
    p.add_argument("--emit-trace", action="store_true", help="write JSON lines with index traces")
    p.add_argument("--output", "-o")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("measure", help="metrics for aligned original/perturbed files")
    _add_common(p)
    _add_chrf(p)
    p.add_argument("--original", required=True)
    p.add_argument("--perturbed", required=True)
    p.add_argument("--perturbed-format", choices=("auto", "text", "jsonl"), default="auto")
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p.add_argument("--output", "-o")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("sweep", help="run a perturbation sweep over a corpus")
    _add_common(p)
    _add_tokenizer(p)
    _add_chrf(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--corpus-format", choices=("auto", "jsonl", "text"), default="auto")
    p.add_argument("--lang", help="language of a plain-text corpus")
    p.add_argument("--sweep", default="paper-43", help="built-in name or JSON file")
    p.add_argument("--seeds", type=int, default=5, help="perturbation seeds per setting")
    p.add_argument("--out", required=True)
    p.add_argument("--emit-text", action="store_true", help="store perturbed text in sweep.jsonl")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("correlate", help="rank-correlate sweep metrics with scores")
    _add_common(p)
    _add_corr(p)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("report", help="emit summary tables and figures")
    _add_common(p)
    _add_corr(p)
    p.add_argument("--format", action="append", choices=("csv", "json", "svg"))
    p.set_defaults(func=cmd_report)
    return parser


def _parse_config(path: str) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value.strip('"')
    return values


def _apply_config(subparser: argparse.ArgumentParser, path: str) -> None:
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in _parse_config(path).items():
        action = actions.get(key)
        if action is None or key in ("config", "help"):
            raise UsageError(f"{path}: unknown key {key!r}")
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            flag = value.lower() in ("1", "true", "yes", "on")
            if value.lower() not in ("1", "true", "yes", "on", "0", "false", "no", "off"):
                raise UsageError(f"{path}: {key} expects a boolean")
            defaults[key] = flag if isinstance(action, argparse._StoreTrueAction) else not flag
        elif isinstance(action, argparse._AppendAction):
            defaults[key] = [v.strip() for v in value.split(",") if v.strip()]
        else:
            if action.choices is not None and value not in [str(c) for c in action.choices]:
                raise UsageError(f"{path}: {key} must be one of {list(action.choices)}")
            defaults[key] = value
        # config satisfies required flags
        action.required = False
    subparser.set_defaults(**defaults)


def _find_config(argv: Sequence[str]) -> Optional[str]:
    for i, arg in enumerate(argv):
        if arg == "--config":
            if i + 1 >= len(argv):
                raise UsageError("--config needs a path")
            return argv[i + 1]
        if arg.startswith("--config="):
            return arg.split("=", 1)[1]
    return None


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        config_path = _find_config(argv)
        if config_path:
            choices = parser._subparsers._group_actions[0].choices
            command = next((a for a in argv if a in choices), None)
            if command is None:
                raise UsageError("--config needs a command")
            _apply_config(choices[command], config_path)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits on --help, --version and bad flags
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"structprobe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"structprobe: error: {exc}", file=sys.stderr)
        return EXIT_IO
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"structprobe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"structprobe: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DATA_ERRORS as exc:
        print(f"structprobe: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
