import itertools
import json
from collections import Counter
from statistics import mean

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from structprobe.core_text import Granularity
from structprobe.metrics import chrf, idc
from structprobe.perturb import (
    CHARACTER_FLIP_RHOS,
    CHARACTER_PHRASE_RHOS,
    Kind,
    PerturbationSpec,
    SpecError,
    apply_spec,
    build_phrases,
    full_shuffle,
    neighbor_flip,
    neighbor_flip_strict,
    builtin_grid,
    perturb,
    phrase_shuffle,
    resolve_sweep,
    sweep_from_json,
    sweep_to_json,
)
from structprobe.rng import SeedPolicy, Xoshiro256
from structprobe.tokenizers import CharTokenizer, WhitespaceTokenizer, tokenize_chars, tokenize_whitespace


def reference_neighbor_flip(text, rho, seed):
    """Hold-and-release loop written directly over a list of characters."""
    rng = Xoshiro256(seed)
    perturbed = []
    held = text[0]
    for token in text[1:]:
        p = rng.random()
        if p < rho:
            perturbed.append(held)
            held = token
        else:
            perturbed.append(token)
    perturbed.append(held)
    return "".join(perturbed)


def test_full_shuffle_single_token_is_identity():
    assert full_shuffle(tokenize_chars("a"), 3).perturbed_text == "a"
    assert full_shuffle(tokenize_whitespace("word"), 3).trace.indices == (0, 1, 2, 3)


def test_full_shuffle_golden():
    # frozen output of xoshiro256** seed 12345
    for _ in range(3):
        assert full_shuffle(tokenize_chars("abcd"), 12345).perturbed_text == "dbac"


def test_full_shuffle_uniform_small():
    seq = tokenize_chars("abcd")
    counts = Counter(full_shuffle(seq, s).perturbed_text for s in range(24_000))
    assert len(counts) == 24
    expected = ["".join(p) for p in itertools.permutations("abcd")]
    assert chisquare([counts[p] for p in expected]).pvalue > 0.001


def test_neighbor_flip_identities():
    seq = tokenize_chars("abcd")
    assert neighbor_flip(seq, 1.0, 11).perturbed_text == "abcd"
    assert neighbor_flip(seq, 0.0, 11).perturbed_text == "bcda"
    assert neighbor_flip(tokenize_chars(""), 0.5, 1).perturbed_text == ""


def test_neighbor_flip_golden_matches_reference():
    text = "the quick brown fox."
    assert len(text) == 20
    out = neighbor_flip(tokenize_chars(text), 0.5, 2024)
    assert out.perturbed_text == "teh uqic krowb nfx.o"
    for seed in range(200):
        got = neighbor_flip(tokenize_chars(text), 0.5, seed).perturbed_text
        assert got == reference_neighbor_flip(text, 0.5, seed)


def test_neighbor_flip_subword_keeps_tokens_whole():
    seq = tokenize_whitespace("aa bb cc dd")
    out = neighbor_flip(seq, 0.0, 1)
    assert out.perturbed_text == "bb cc ddaa "
    assert [t.surface for t in out.tokens] == ["bb ", "cc ", "dd", "aa "]


def test_neighbor_flip_strict_moves_at_most_one():
    seq = tokenize_chars("abcdefghijklmnop")
    for seed in range(100):
        trace = neighbor_flip_strict(seq, 0.4, seed).trace.indices
        assert all(abs(i - x) <= 1 for i, x in enumerate(trace))
    assert neighbor_flip_strict(seq, 1.0, 0).perturbed_text == "abcdefghijklmnop"
    assert neighbor_flip_strict(tokenize_chars("abcd"), 0.0, 0).perturbed_text == "badc"


def test_phrase_shuffle_rho_zero_identity():
    seq = tokenize_chars("hello world")
    assert all(phrase_shuffle(seq, 0.0, s).perturbed_text == "hello world" for s in range(50))


def test_phrase_shuffle_rho_one_matches_full_shuffle_distribution():
    seq = tokenize_chars("abcd")
    trials = 24_000
    phrase = Counter(phrase_shuffle(seq, 1.0, s).perturbed_text for s in range(trials))
    full = Counter(full_shuffle(seq, s + trials).perturbed_text for s in range(trials))
    perms = ["".join(p) for p in itertools.permutations("abcd")]
    # both uniform over the 24 permutations
    assert chisquare([phrase[p] for p in perms]).pvalue > 0.001
    assert chisquare([full[p] for p in perms]).pvalue > 0.001


def test_mean_phrase_length():
    tokens = tokenize_chars("x" * 20_000).tokens
    phrases = build_phrases(tokens, 0.2, Xoshiro256(8))
    assert mean(len(p) for p in phrases) == pytest.approx(5.0, rel=0.05)


def test_apply_spec_benchmark_and_trace():
    policy = SeedPolicy(0)
    char = CharTokenizer()
    res = apply_spec("héllo", PerturbationSpec(Kind.NONE), char, policy, 0)
    assert res.perturbed_text == "héllo"
    assert idc(res.trace) == 0.0

    spec = PerturbationSpec(Kind.FULL_SHUFFLE, Granularity.CHARACTER)
    swapping = [
        rec for rec in range(50)
        if full_shuffle(tokenize_chars("ab"), policy.derive(rec, spec.setting_id, 0)).trace.indices == (1, 0)
    ]
    res = apply_spec("ab", spec, char, policy, swapping[0])
    assert res.perturbed_text == "ba"
    assert res.trace.indices == (1, 0)
    assert res.seed == policy.derive(swapping[0], spec.setting_id, 0)


def test_apply_spec_subword_phrase_preserves_multiset():
    spec = PerturbationSpec(Kind.PHRASE_SHUFFLE, Granularity.SUBWORD, 0.5)
    for rec in range(30):
        res = apply_spec("aa bb cc", spec, WhitespaceTokenizer(), SeedPolicy(1), rec)
        assert Counter(res.perturbed_text) == Counter("aa bb cc")


def test_apply_spec_granularity_mismatch():
    spec = PerturbationSpec(Kind.FULL_SHUFFLE, Granularity.SUBWORD)
    with pytest.raises(SpecError):
        apply_spec("ab", spec, CharTokenizer(), SeedPolicy(), 0)


def test_spec_validation():
    with pytest.raises(SpecError):
        PerturbationSpec(Kind.NEIGHBOR_FLIP)
    with pytest.raises(SpecError):
        PerturbationSpec(Kind.FULL_SHUFFLE, rho=0.5)
    with pytest.raises(SpecError):
        PerturbationSpec(Kind.PHRASE_SHUFFLE, rho=1.5)
    spec = PerturbationSpec(Kind.PHRASE_SHUFFLE, Granularity.SUBWORD, 0.35)
    assert spec.setting_id == "subword-phrase_shuffle-0.35"
    assert PerturbationSpec(Kind.NONE).setting_id == "benchmark"


def test_spec_json_round_trip():
    grid = builtin_grid()
    assert sweep_from_json(sweep_to_json(grid)) == grid
    blob = json.loads(sweep_to_json(grid[:2]))
    assert blob[1] == {
        "kind": "full_shuffle",
        "granularity": "subword",
        "rho": None,
        "setting_id": "subword-full_shuffle",
    }
    with pytest.raises(SpecError):
        sweep_from_json('[{"kind": "none"}, {"kind": "none"}]')
    with pytest.raises(SpecError):
        sweep_from_json('[{"kind": "none", "extra": 1}]')
    assert resolve_sweep("paper-43") == grid


def test_builtin_grid_listed_values():
    grid = builtin_grid()
    ids = [s.setting_id for s in grid]
    assert len(set(ids)) == len(ids)
    ch_phrase = [s.rho for s in grid if s.granularity is Granularity.CHARACTER and s.kind is Kind.PHRASE_SHUFFLE]
    ch_flip = [s.rho for s in grid if s.granularity is Granularity.CHARACTER and s.kind is Kind.NEIGHBOR_FLIP]
    assert ch_phrase == list(CHARACTER_PHRASE_RHOS)
    assert ch_flip == list(CHARACTER_FLIP_RHOS)
    assert sum(s.kind is Kind.NONE for s in grid) == 1
    assert sum(s.kind is Kind.FULL_SHUFFLE for s in grid) == 2


@settings(max_examples=60, deadline=None)
@given(
    st.text(min_size=1, max_size=30),
    st.sampled_from([k for k in Kind]),
    st.floats(min_value=0.0, max_value=1.0),
    st.integers(min_value=0, max_value=2**64 - 1),
    st.sampled_from([Granularity.CHARACTER, Granularity.SUBWORD]),
)
def test_determinism_and_conservation(text, kind, rho, seed, granularity):
    needs_rho = kind in (Kind.NEIGHBOR_FLIP, Kind.PHRASE_SHUFFLE, Kind.NEIGHBOR_FLIP_STRICT)
    spec = PerturbationSpec(kind, granularity, rho if needs_rho else None)
    seq = tokenize_chars(text) if granularity is Granularity.CHARACTER else tokenize_whitespace(text)
    a, b = perturb(seq, spec, seed), perturb(seq, spec, seed)
    assert a == b
    assert a.trace.is_permutation()
    assert Counter(seq.units) == Counter(seq.units[i] for i in a.trace.indices)
    assert "".join(seq.units[i] for i in a.trace.indices) == a.perturbed_text


def test_phrase_shuffle_local_damage_monotone_in_rho():
    seq = tokenize_chars("abcdefghijkl")
    n = 10_000
    means = []
    for rho in (0.1, 0.3, 0.6, 0.9):
        means.append(mean(chrf("abcdefghijkl", phrase_shuffle(seq, rho, s).perturbed_text) for s in range(n)))
    assert means == sorted(means, reverse=True)
