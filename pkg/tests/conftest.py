from pathlib import Path

import pytest

from deeplin.graph import load_corpus
from deeplin.morphology import Lexicon
from deeplin.synth import SynthSpec, generate

DATA = Path(__file__).resolve().parents[1] / "src" / "deeplin" / "data"
WORKED_DEEP = DATA / "worked_example.deep"
WORKED_GOLD = DATA / "worked_example.gold"
WORKED_SENTENCE = "meanwhile , prices are thought to have increased ."


@pytest.fixture(scope="session")
def lexicon():
    return Lexicon.bundled()


@pytest.fixture(scope="session")
def worked():
    """The bundled worked example: (graph, gold)."""
    return load_corpus(WORKED_DEEP, WORKED_GOLD)[0]


@pytest.fixture(scope="session")
def corpus500(lexicon):
    return generate(SynthSpec(sentences=500, seed=7), lexicon)


@pytest.fixture(scope="session")
def small_corpus(lexicon):
    return generate(SynthSpec(sentences=40, seed=3, max_nodes=10), lexicon)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
