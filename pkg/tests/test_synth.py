import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deeplin.graph import Verdict, filter_instance, format_gold, serialize_instance
from deeplin.learner import oracle_derivation
from deeplin.synth import SynthSpec, generate
from deeplin.transition import JOINT


def reentrant(g):
    return any(len(g.parents[n]) > 1 for n in g.nodes)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.integers(3, 20))
def test_instances_pass_the_filter(seed, pr, pt, pc, max_nodes):
    spec = SynthSpec(sentences=10, seed=seed, p_reentrancy=pr, p_tothat=pt, p_comma=pc, max_nodes=max_nodes)
    for g, gold in generate(spec):
        assert filter_instance(g, gold) is Verdict.KEEP
        assert len(g) <= max_nodes


def test_reentrancy_always():
    data = generate(SynthSpec(sentences=100, p_reentrancy=1.0, seed=5))
    assert all(reentrant(g) for g, _ in data)


def test_no_function_words_or_reentrancy():
    data = generate(SynthSpec(sentences=100, p_reentrancy=0.0, p_tothat=0.0, p_comma=0.0, seed=5))
    assert not any(reentrant(g) for g, _ in data)
    assert not any(t.is_fw for _, gold in data for t in gold.tokens)


def test_deterministic():
    a = generate(SynthSpec(sentences=30, seed=9))
    b = generate(SynthSpec(sentences=30, seed=9))
    assert [serialize_instance(g) + format_gold(x) for g, x in a] == \
           [serialize_instance(g) + format_gold(x) for g, x in b]
    c = generate(SynthSpec(sentences=30, seed=10))
    assert [serialize_instance(g) for g, _ in a] != [serialize_instance(g) for g, _ in c]


def test_zero_sentences():
    assert generate(SynthSpec(sentences=0)) == []


@pytest.mark.parametrize("kwargs", [
    {"sentences": -1}, {"vocabulary": 0}, {"max_nodes": 2},
    {"p_reentrancy": 1.5}, {"p_comma": -0.1},
])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        SynthSpec(**kwargs)


def test_corpus_shape(corpus500, lexicon):
    sizes = [len(g) for g, _ in corpus500]
    assert 6.0 < sum(sizes) / len(sizes) < 7.0
    assert sum(1 for g, _ in corpus500 if reentrant(g)) > 50
    for g, gold in corpus500[:50]:
        oracle_derivation(g, gold, JOINT, lexicon=lexicon)
