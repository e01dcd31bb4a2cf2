import csv
import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from conftest import make_corpus
from structprobe.analysis import build_table, read_sweep, write_corpus, write_scores
from structprobe.analysis.scores import ScoreRow
from structprobe.analysis.sweep import aggregate_rows
from structprobe.cli import EXIT_DATA, EXIT_IO, EXIT_USAGE, main
from structprobe.perturb import Kind, PerturbationSpec, sweep_to_json
from structprobe.core_text import Granularity

SMALL = [
    PerturbationSpec(Kind.NONE),
    PerturbationSpec(Kind.FULL_SHUFFLE, Granularity.CHARACTER),
    PerturbationSpec(Kind.NEIGHBOR_FLIP, Granularity.CHARACTER, 0.3),
    PerturbationSpec(Kind.PHRASE_SHUFFLE, Granularity.SUBWORD, 0.5),
]


@pytest.fixture
def text_file(tmp_path):
    p = tmp_path / "in.txt"
    p.write_text("the quick brown fox.\nhello world\n", encoding="utf-8")
    return p


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_perturb_flip_prob_zero_is_identity(text_file, capsys):
    code, out, _ = run(["perturb", "--kind", "neighbor_flip", "--flip-prob", "0.0", text_file], capsys)
    assert code == 0
    assert out == text_file.read_text(encoding="utf-8")


def test_perturb_deterministic_and_seed_sensitive(text_file, capsys):
    args = ["perturb", "--kind", "full_shuffle", "--seed", "3", text_file]
    first = run(args, capsys)[1]
    assert run(args, capsys)[1] == first
    assert run(["perturb", "--kind", "full_shuffle", "--seed", "4", text_file], capsys)[1] != first
    assert sorted(first.splitlines()[0]) == sorted("the quick brown fox.")


def test_perturb_emit_trace_then_measure(tmp_path, text_file, capsys):
    traced = tmp_path / "p.jsonl"
    code, _, _ = run(["perturb", "--kind", "full_shuffle", "--emit-trace", "-o", traced, text_file], capsys)
    assert code == 0
    recs = [json.loads(l) for l in traced.read_text(encoding="utf-8").splitlines()]
    assert recs[0]["id"] == "line-1" and sorted(recs[0]["trace"]) == list(range(20))
    assert Path(f"{traced}.manifest.json").exists()
    code, out, _ = run(["measure", "--original", text_file, "--perturbed", traced], capsys)
    assert code == 0
    rows = [json.loads(l) for l in out.splitlines()]
    assert len(rows) == 2 and all(0 <= r["idc"] <= 0.5 for r in rows)


def test_measure_csv_identity(tmp_path, text_file, capsys):
    code, out, _ = run(
        ["measure", "--original", text_file, "--perturbed", text_file, "--format", "csv"], capsys
    )
    assert code == 0
    rows = list(csv.DictReader(out.splitlines()))
    assert [float(r["chrf"]) for r in rows] == [100.0, 100.0]


def test_measure_count_mismatch_is_data_error(tmp_path, capsys):
    a = tmp_path / "a.txt"
    b = tmp_path / "b.txt"
    a.write_text("x\ny\nz\n", encoding="utf-8")
    b.write_text("x\ny\nz\nw\n", encoding="utf-8")
    code, _, err = run(["measure", "--original", a, "--perturbed", b], capsys)
    assert code == EXIT_DATA
    assert "3 != 4" in err


def test_usage_errors(text_file, capsys):
    assert run(["perturb", "--kind", "bogus", text_file], capsys)[0] == EXIT_USAGE
    assert run(["perturb", "--kind", "neighbor_flip", text_file], capsys)[0] == EXIT_USAGE
    assert run(["perturb", "--kind", "neighbor_flip", "--rho", "0.2", "--flip-prob", "0.8", text_file],
               capsys)[0] == EXIT_USAGE
    assert run([], capsys)[0] == EXIT_USAGE


def test_missing_input_is_io_error(tmp_path, capsys):
    code, _, err = run(["perturb", "--kind", "full_shuffle", tmp_path / "nope.txt"], capsys)
    assert code == EXIT_IO


def test_bad_utf8_is_data_error(tmp_path, capsys):
    p = tmp_path / "bad.txt"
    p.write_bytes(b"abc\xfe\n")
    code, _, err = run(["perturb", "--kind", "full_shuffle", p], capsys)
    assert code == EXIT_DATA
    assert "offset 3" in err


def test_config_file(tmp_path, text_file, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# perturb settings\nkind = neighbor_flip\nflip-prob = 0.0\n", encoding="utf-8")
    code, out, _ = run(["perturb", "--config", cfg, text_file], capsys)
    assert code == 0 and out == text_file.read_text(encoding="utf-8")
    # command-line flags win over the file
    code, out, _ = run(["perturb", "--config", cfg, "--flip-prob", "1.0", text_file], capsys)
    assert out.splitlines()[1] == "ello worldh"
    cfg.write_text("colour = red\n", encoding="utf-8")
    assert run(["perturb", "--config", cfg, "--kind", "none", text_file], capsys)[0] == EXIT_USAGE


def _pipeline(tmp_path, capsys, out_name="out"):
    corpus = tmp_path / "corpus.jsonl"
    if not corpus.exists():
        write_corpus(make_corpus(18, seed=2, n_tokens=6), corpus)
        (tmp_path / "grid.json").write_text(sweep_to_json(SMALL), encoding="utf-8")
    out = tmp_path / out_name
    code, stdout, _ = run(
        ["sweep", "--corpus", corpus, "--sweep", tmp_path / "grid.json", "--seeds", "2", "--out", out], capsys
    )
    assert code == 0, stdout
    sweep = read_sweep(out)
    scores = tmp_path / "scores.csv"
    if not scores.exists():
        rows = [
            (i, ScoreRow("m", "t", a.language, a.setting_id, "acc", a.means["chrf"] / 100))
            for i, a in enumerate(aggregate_rows(sweep.rows).values())
        ]
        write_scores(build_table(rows), scores)
    code, _, _ = run(["correlate", "--sweep-dir", out, "--scores", scores,
                      "--grouping", "model", "--grouping", "script"], capsys)
    assert code == 0
    code, _, _ = run(["report", "--sweep-dir", out, "--scores", scores, "--grouping", "model",
                      "--format", "svg", "--format", "csv"], capsys)
    assert code == 0
    return out


def test_sweep_correlate_report_pipeline(tmp_path, capsys):
    out = _pipeline(tmp_path, capsys)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["sweep"]["n_settings"] == len(SMALL)
    assert manifest["n_rows"] == 18 * len(SMALL) * 2
    with open(out / "correlations_model.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert float(rows[0]["chrf"]) == pytest.approx(1.0)
    assert (out / "correlations_script.json").exists()
    assert (out / "figures" / "scatter_idc.svg").exists()
    assert (out / "figures" / "correlations_model.svg").exists()
    assert (out / "settings_summary.csv").exists()


def test_pipeline_outputs_byte_identical(tmp_path, capsys):
    a = _pipeline(tmp_path, capsys, "a")
    b = _pipeline(tmp_path, capsys, "b")
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file() and "manifest" not in p.name)
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file() and "manifest" not in p.name)
    assert files_a == files_b and len(files_a) > 8
    for rel in files_a:
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel


def test_sweep_builtin_grid_reports_setting_count(tmp_path, capsys):
    corpus = tmp_path / "c.jsonl"
    write_corpus(make_corpus(3, seed=0, n_tokens=3), corpus)
    code, out, _ = run(["sweep", "--corpus", corpus, "--seeds", "1", "--out", tmp_path / "o"], capsys)
    assert code == 0
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["sweep"]["name"] == "paper-43"
    assert manifest["n_rows"] == 3 * manifest["sweep"]["n_settings"]


def test_console_script_entry_point(text_file):
    exe = shutil.which("structprobe")
    cmd = [exe] if exe else [sys.executable, "-m", "structprobe.cli"]
    proc = subprocess.run(cmd + ["perturb", "--kind", "none", str(text_file)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout == text_file.read_text(encoding="utf-8")
