import pytest
from hypothesis import given
from hypothesis import strategies as st

from structprobe.core_text import Granularity, reconstruct
from structprobe.tokenizers import (
    VocabTokenizer,
    Vocabulary,
    load_vocabulary,
    parse_vocabulary,
    tokenize_chars,
    tokenize_vocab_greedy,
    tokenize_whitespace,
)


def surfaces(seq):
    return [t.surface for t in seq.tokens]


def test_tokenize_chars():
    assert len(tokenize_chars("abc")) == 3
    assert len(tokenize_chars("水水水")) == 3
    assert len(tokenize_chars("")) == 0
    assert tokenize_chars("ab").granularity is Granularity.CHARACTER


@pytest.mark.parametrize(
    "text, expected",
    [
        ("a b", ["a ", "b"]),
        ("a", ["a"]),
        (" a  b ", [" a  ", "b "]),
        ("   ", ["   "]),
        ("a\tb\nc", ["a\t", "b\n", "c"]),
    ],
)
def test_tokenize_whitespace(text, expected):
    seq = tokenize_whitespace(text)
    assert surfaces(seq) == expected
    assert reconstruct(seq) == text
    assert seq.granularity is Granularity.SUBWORD


@pytest.mark.parametrize(
    "text, entries, expected",
    [
        ("abab", {"ab", "a", "b"}, ["ab", "ab"]),
        ("x", {"ab"}, ["x"]),
        ("abc", {"abc", "ab", "c"}, ["abc"]),
        ("abcab", {"abc", "ab", "bca"}, ["abc", "ab"]),
    ],
)
def test_greedy_longest_match(text, entries, expected):
    seq = tokenize_vocab_greedy(text, Vocabulary.from_entries(entries))
    assert surfaces(seq) == expected


def test_greedy_continuation_marker():
    vocab = Vocabulary.from_entries({"play", "##ing", "ing"}, continuation_marker="##")
    assert surfaces(tokenize_vocab_greedy("playing ing", vocab)) == ["play", "ing", " ", "ing"]


def test_greedy_attach_whitespace():
    vocab = Vocabulary.from_entries({"ab", "cd"}, attach_whitespace=True)
    seq = tokenize_vocab_greedy(" ab  cd ", vocab)
    assert surfaces(seq) == [" ab  ", "cd "]
    assert reconstruct(seq) == " ab  cd "


def test_greedy_matches_on_grapheme_boundaries():
    # "é" as e + combining acute must not be split by an entry "e"
    vocab = Vocabulary.from_entries({"e"})
    assert surfaces(tokenize_vocab_greedy("éé", vocab)) == ["é", "é"]


def test_parse_vocabulary_directives(tmp_path):
    body = "#! special_tokens 2\n#! continuation_marker ##\nab\n##cd\n\n"
    path = tmp_path / "vocab.txt"
    path.write_text(body, encoding="utf-8")
    vocab = load_vocabulary(path)
    assert vocab.special_token_count == 2
    assert vocab.continuation_marker == "##"
    assert vocab.entries == {"ab", "##cd"}
    assert VocabTokenizer(vocab).special_token_count == 2


@pytest.mark.parametrize("body", ["", "#! bogus 1\nab\n", "#! special_tokens x\nab\n"])
def test_parse_vocabulary_errors(body):
    with pytest.raises(ValueError):
        parse_vocabulary(body)


@given(st.text(alphabet="abcö水 é", max_size=40), st.sets(st.text(alphabet="abcö水", min_size=1, max_size=3), min_size=1))
def test_greedy_round_trip_and_length_bound(text, entries):
    seq = tokenize_vocab_greedy(text, Vocabulary.from_entries(entries))
    assert reconstruct(seq) == text
    n_units = len(tokenize_chars(text))
    assert len(seq) <= n_units
    multi = any(len(t.char_span) > 1 for t in seq.tokens)
    assert (len(seq) == n_units) == (not multi)
