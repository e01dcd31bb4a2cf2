"""Character and subword order perturbations with structure metrics and
rank-correlation analysis against externally produced task scores."""

from .core_text import (
    CODEPOINT,
    GRAPHEME,
    CharIndexTrace,
    Grapheme,
    Granularity,
    Token,
    TokenSequence,
    reconstruct,
    segment_graphemes,
)
from .metrics import ChrfConfig, MetricReport, chrf, compression_rate, dnd, idc, measure
from .perturb import (
    Kind,
    PerturbationResult,
    PerturbationSpec,
    apply_spec,
    full_shuffle,
    neighbor_flip,
    neighbor_flip_strict,
    builtin_grid,
    phrase_shuffle,
)
from .rng import SeedPolicy
from .tokenizers import (
    CharTokenizer,
    Vocabulary,
    VocabTokenizer,
    WhitespaceTokenizer,
    load_vocabulary,
    tokenize_chars,
    tokenize_vocab_greedy,
    tokenize_whitespace,
)

__version__ = "0.1.0"
