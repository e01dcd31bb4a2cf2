import random

import pytest

from structprobe.analysis import CorpusRecord

WORDS = {
    "en": "the water is cold and the river runs past our old house in the quiet valley".split(),
    "fr": "le chat dort sur la chaise près de la fenêtre ouverte dans une maison calme".split(),
    "de": "der hund läuft schnell über die grüne wiese zum alten haus am fluss".split(),
    "ru": "вода холодная и река течёт мимо нашего старого дома в тихой долине".split(),
    "el": "το νερό είναι κρύο και το ποτάμι κυλά δίπλα στο παλιό σπίτι".split(),
    "hi": "पानी ठंडा है और नदी हमारे पुराने घर के पास बहती है".split(),
    "ar": "الماء بارد والنهر يجري بجانب بيتنا القديم في الوادي الهادئ".split(),
}
HAN = "水火山川日月人口心手天地大小中上下左右东西南北春夏秋冬风雨雪"
HAN_LANGS = ("zh", "ja-hani", "yue")


def make_record(rnd: random.Random, lang: str, i: int, n_tokens: int) -> CorpusRecord:
    if lang in WORDS:
        text = " ".join(rnd.choice(WORDS[lang]) for _ in range(n_tokens))
    else:
        text = "".join(rnd.choice(HAN) for _ in range(n_tokens * 2))
    return CorpusRecord(f"{lang}-{i}", text, lang)


def make_corpus(n_records: int, seed: int = 0, n_tokens: int = 10) -> list[CorpusRecord]:
    """Synthetic multilingual corpus spread evenly across scripts."""
    rnd = random.Random(seed)
    langs = sorted(WORDS) + list(HAN_LANGS)
    return [make_record(rnd, langs[i % len(langs)], i, n_tokens) for i in range(n_records)]


@pytest.fixture
def small_corpus():
    return make_corpus(20, seed=1, n_tokens=6)


# one line per acceptance criterion, filled in by test_acceptance
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
