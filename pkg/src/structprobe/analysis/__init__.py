from .corpus import CorpusError, CorpusRecord, Malformed, read_corpus, write_corpus
from .correlation import (
    CorrelationMatrix,
    correlate,
    kendall_tau_b,
    rankdata,
    spearman,
)
from .report import ReportError, emit_report, matrix_csv
from .scores import ScoreRow, ScoreTable, ScoreTableError, build_table, ingest_scores, write_scores
from .scripts import LanguageInfo, detect_script, load_lang_meta
from .sweep import SweepError, SweepReport, SweepRow, read_sweep, run_sweep, write_sweep
