"""End-to-end acceptance checks, one test per criterion.

Each test records a pass/fail line that is printed in the pytest summary.
"""

import random
import time
from pathlib import Path

import pytest

from acceptance_log import criterion
from conftest import WORKED_DEEP, WORKED_GOLD, WORKED_SENTENCE
from oracles import corpus_bleu, expand_all, random_dag, smoothed_sentence_bleu
from deeplin.cli import main
from deeplin.constraints import legal_actions
from deeplin.evaluation import bleu, fw_fmeasure
from deeplin.graph import DeepGraph, Node, filter_instance, load_corpus
from deeplin.learner import beam_decode, oracle_derivation, train
from deeplin.morphology import Lexicon, candidate_inflections
from deeplin.pipeline import run_pipeline, shallow_instance, train_pipeline
from deeplin.synth import SynthSpec, generate
from deeplin.transition import JOINT, SHALLOW, apply, initial_state, realization, surface, trace_rows

# (action, stack, new arc) rows of the two worked derivations
JOINT_ROWS = [
    ("SH-meanwhile", "[7]", ""), ("IN", "[7]", ""), ("SH-prices", "[7 2]", ""),
    ("SH-are", "[7 2 5]", ""), ("SH-thought", "[7 2 5 1]", ""), ("SP-to", "[7 2 5 1]", ""),
    ("SH-have", "[7 2 5 1 6]", ""), ("SH-increased", "[7 2 5 1 6 4]", ""),
    ("RA", "[7 2 5 1 6]", "6->4"), ("RA", "[7 2 5 1]", "1->6"), ("RA", "[7 2 5]", "5->1"),
    ("SH-.", "[7 2 5 3]", ""), ("RA", "[7 2 5]", "5->3"), ("LA", "[7 5]", "2<-5"),
    ("LA", "[5]", "7<-5"),
]
SHALLOW_ROWS = [
    ("SH-meanwhile", "[7]", ""), ("SH-,", "[7 8]", ""), ("SH-price", "[7 8 2]", ""),
    ("SH-be", "[7 8 2 5]", ""), ("SH-think", "[7 8 2 5 1]", ""), ("SH-to", "[7 8 2 5 1 9]", ""),
    ("SH-have", "[7 8 2 5 1 9 6]", ""), ("SH-increase", "[7 8 2 5 1 9 6 4]", ""),
    ("RA", "[7 8 2 5 1 9 6]", "6->4"), ("RA", "[7 8 2 5 1 9]", "9->6"),
    ("RA", "[7 8 2 5 1]", "1->9"), ("RA", "[7 8 2 5]", "5->1"), ("SH-.", "[7 8 2 5 3]", ""),
    ("RA", "[7 8 2 5]", "5->3"), ("LA", "[7 8 5]", "2<-5"), ("LA", "[7 5]", "8<-5"),
    ("LA", "[5]", "7<-5"),
]

OVERFIT = dict(sentences=50, seed=3)
OVERFIT_BEAM = 8
OVERFIT_ITERATIONS = 30


def _rows(final):
    return [(a, st, arc) for _, a, st, _, arc in list(trace_rows(final))[1:] if a != "ID"]


def _synth_files(tmp: Path, sentences: int, seed: int) -> tuple[Path, Path]:
    prefix = tmp / f"synth{seed}"
    assert main(["synth", "--sentences", str(sentences), "--seed", str(seed), "-o", str(prefix)]) == 0
    return prefix.with_suffix(".deep"), prefix.with_suffix(".gold")


@pytest.fixture(scope="module")
def overfit_model(tmp_path_factory, lexicon):
    data = generate(SynthSpec(**OVERFIT), lexicon)
    start = time.perf_counter()
    model = train(data, JOINT, k=OVERFIT_BEAM, iterations=OVERFIT_ITERATIONS, seed=1, lexicon=lexicon)
    path = tmp_path_factory.mktemp("overfit") / "a.model"
    model.save(path)
    return data, model, path, time.perf_counter() - start


def test_worked_example_derivations(lexicon, capsys):
    with criterion(1, "worked example: joint and shallow derivations", limit=1.0) as notes:
        g, gold = load_corpus(WORKED_DEEP, WORKED_GOLD)[0]
        joint = oracle_derivation(g, gold, JOINT, lexicon=lexicon, check=True)
        assert _rows(joint) == JOINT_ROWS
        assert joint.step == 5 * 7 - 1
        assert " ".join(surface(joint)) == WORKED_SENTENCE
        sg, sgold = shallow_instance(g, gold)
        shallow = oracle_derivation(sg, sgold, SHALLOW, check=True)
        assert _rows(shallow) == SHALLOW_ROWS
        assert " ".join(surface(shallow)) == "meanwhile , price be think to have increase ."
        notes.append(f"joint {len(JOINT_ROWS)} actions, shallow {len(SHALLOW_ROWS)} actions")

    # the same tables through the command line
    code = main(["oracle-check", "--corpus", str(WORKED_DEEP), "--gold", str(WORKED_GOLD),
                 "--mode", "both", "--trace"])
    out = capsys.readouterr().out
    assert code == 0
    assert "Keep\tjoint=15 actions, replay OK\tshallow=17 actions, replay OK" in out
    assert "6\tSP-to\t[7 2 5 1]\t{3,4,6}\t" in out


def _check_mask_and_replay(g, gold, mode, lexicon):
    final = oracle_derivation(g, gold, mode, lexicon=lexicon, check=False)
    s = initial_state(final.ctx)
    for a in final.actions():
        assert a in legal_actions(s), f"{a} not legal at step {s.step}"
        s = apply(s, a)
    assert realization(s) == gold
    return final


def test_oracle_round_trip(tmp_path, lexicon):
    with criterion(2, "oracle round-trip on 500 synthetic instances", limit=30.0) as notes:
        deep, gold_path = _synth_files(tmp_path, 500, 7)
        corpus = load_corpus(deep, gold_path)
        assert len(corpus) == 500
        for i, (g, gold) in enumerate(corpus, 1):
            assert filter_instance(g, gold).kept, f"instance {i}"
            _check_mask_and_replay(g, gold, JOINT, lexicon)
            sg, sgold = shallow_instance(g, gold)
            _check_mask_and_replay(sg, sgold, SHALLOW, lexicon)
        notes.append("500/500 kept, joint and shallow replays exact")


def test_constraint_soundness_exhaustive(lexicon):
    with criterion(3, "exhaustive mask expansion, n <= 6", limit=300.0) as notes:
        rng = random.Random(2024)
        graphs = [random_dag(rng, n) for n in range(1, 7) for _ in range(40)]
        dead = 0
        for g in graphs:
            for mode, skip in ((SHALLOW, frozenset()), (JOINT, frozenset({"IN"}))):
                r = expand_all(g, mode, lexicon, skip=skip)
                assert r["terminals"] >= 1, f"{mode}: no terminal for {g.arcs}"
                assert not r["bad"], f"{mode}: {r['bad'][0]} for {g.arcs}"
                dead += r["dead"]
            if len(g) <= 4:
                r = expand_all(g, JOINT, lexicon)
                assert r["terminals"] >= 1 and not r["bad"]
        notes.append(f"{len(graphs)} graphs, {dead} dead-end states seen")


def test_step_count_law(corpus500, lexicon):
    with criterion(4, "step counts 2n-1 and 5n-1") as notes:
        violations = 0
        for g, gold in corpus500:
            joint = oracle_derivation(g, gold, JOINT, lexicon=lexicon, check=False)
            n = len(g)
            violations += joint.step != 5 * n - 1
            core = [a for a in joint.actions() if a.kind != "ID"]
            inserts = sum(a.kind in ("IN", "SP") for a in core)
            violations += len(core) != 2 * n - 1 + inserts
            sg, sgold = shallow_instance(g, gold)
            shallow = oracle_derivation(sg, sgold, SHALLOW, check=False)
            violations += len(shallow.actions()) != 2 * len(sg) - 1
        assert violations == 0
        notes.append(f"{len(corpus500)} instances, 0 violations")


def test_training_overfit(overfit_model, lexicon):
    data, model, _, spent = overfit_model
    with criterion(5, "overfit 50 sentences, beam 8", limit=300.0, spent=spent) as notes:
        hyps = [surface(beam_decode(g, model, k=OVERFIT_BEAM, lexicon=lexicon)) for g, _ in data]
        score = bleu(hyps, [gold.words for _, gold in data]).bleu
        notes.append(f"training BLEU {score:.2f}")
        assert score >= 99.0


def test_joint_beats_pipeline(lexicon):
    with criterion(6, "joint vs pipeline on 400/100 split", limit=900.0) as notes:
        data = generate(SynthSpec(sentences=500, seed=7), lexicon)
        train_set, held_out = data[:400], data[400:]
        golds = [gold for _, gold in held_out]
        jm = train(train_set, JOINT, k=8, iterations=10, seed=1, lexicon=lexicon)
        joint = [realization(beam_decode(g, jm, k=8, lexicon=lexicon)) for g, _ in held_out]
        pm = train_pipeline(train_set, k=8, iterations=10, seed=1, lexicon=lexicon)
        pipe = [run_pipeline(g, pm, lexicon, k=8) for g, _ in held_out]
        jb = bleu([p.words for p in joint], [g.words for g in golds]).bleu
        pb = bleu([p.words for p in pipe], [g.words for g in golds]).bleu
        jf, pf = fw_fmeasure(joint, golds), fw_fmeasure(pipe, golds)
        wins = sum(jf[c].f >= pf[c].f for c in jf)
        notes.append(f"BLEU joint {jb:.2f} pipeline {pb:.2f}; F wins {wins}/3 ("
                     + ", ".join(f"{c} {jf[c].f:.1f}/{pf[c].f:.1f}" for c in jf) + ")")
        assert jb >= pb
        assert wins >= 2


def test_beam_monotonicity(overfit_model, lexicon):
    with criterion(7, "frozen model: beam 64 score >= beam 1 score") as notes:
        _, model, _, _ = overfit_model
        held_out = generate(SynthSpec(sentences=60, seed=11), lexicon)
        violations = 0
        for g, _ in held_out:
            narrow = beam_decode(g, model, k=1, lexicon=lexicon).score
            wide = beam_decode(g, model, k=64, lexicon=lexicon).score
            violations += wide < narrow
        notes.append(f"{len(held_out)} instances, {violations} violations")
        assert violations == 0


def _node_graph(lemma, attrs=None, subject=None):
    nodes = [Node(1, lemma, attrs or {})]
    arcs = [(0, 1, "SROOT")]
    if subject is not None:
        nodes.append(Node(2, "price", {"num": subject}))
        arcs.append((1, 2, "SBJ"))
    return DeepGraph(nodes, arcs)


MORPH_LEXICON = Lexicon([
    ("rise", "VB", "rise"), ("rise", "VBZ", "rises"), ("rise", "VBD", "rose"),
    ("rise", "VBN", "risen"), ("rise", "VBG", "rising"),
    ("price", "NN", "price"), ("price", "NNS", "prices"),
    ("john", "NNP", "John"), ("john", "NNPS", "Johns"),
])

MORPH_TABLE = [
    # lemma, attrs, subject number, expected candidates
    ("be", {"partic": "pres"}, None, ["being"]),
    ("be", {"partic": "past"}, None, ["been"]),
    ("be", {"partic": "past", "tense": "pres"}, "sg", ["been"]),
    ("be", {"tense": "past"}, "sg", ["was"]),
    ("be", {"tense": "past"}, "pl", ["were"]),
    ("be", {"tense": "past"}, None, ["was", "were"]),
    ("be", {"tense": "pres"}, "sg", ["is"]),
    ("be", {"tense": "pres"}, "pl", ["are"]),
    ("be", {"tense": "pres"}, None, ["am", "is", "are"]),
    ("rise", {"partic": "pres"}, None, ["rising"]),
    ("rise", {"partic": "past"}, None, ["risen"]),
    ("rise", {"tense": "past"}, "pl", ["rose"]),
    ("rise", {"tense": "pres"}, "sg", ["rises"]),
    ("rise", {"tense": "pres"}, "pl", ["rise", "rises", "rose", "risen", "rising"]),
    ("rise", {"tense": "pres"}, None, ["rise", "rises", "rose", "risen", "rising"]),
    ("a", {}, None, ["a", "an"]),
    ("not", {}, None, ["not", "n't"]),
    ("price", {"num": "sg"}, None, ["price"]),
    ("price", {"num": "pl"}, None, ["prices"]),
    ("john", {"num": "sg"}, None, ["John"]),
    ("john", {"num": "pl"}, None, ["Johns"]),
    ("upward", {}, None, ["upward"]),
]


def test_morphology_rules():
    with criterion(8, "morphology rule table") as notes:
        for lemma, attrs, subj, expected in MORPH_TABLE:
            g = _node_graph(lemma, attrs, subj)
            got = list(candidate_inflections(g.nodes[1], g, MORPH_LEXICON).forms)
            assert got == expected, (lemma, attrs, subj, got)
        notes.append(f"{len(MORPH_TABLE)} rows exact")


def test_bleu_correctness():
    with criterion(9, "BLEU identity and hand-countable case") as notes:
        refs = [s.split() for s in ("the cat sat on the mat", WORKED_SENTENCE, "a b c d e")]
        assert round(bleu(refs, refs).bleu, 2) == 100.00
        hyp, ref = "a b c d".split(), "a b c e".split()
        report = bleu([hyp], [ref])
        oracle_score, oracle_precisions = corpus_bleu([hyp], [ref])
        assert report.precisions == oracle_precisions
        assert [str(p) for p in report.precisions] == ["3/4", "2/3", "1/2", "0"]
        assert round(report.bleu, 4) == round(oracle_score, 4) == 0.0
        assert round(report.sentences[0], 4) == round(smoothed_sentence_bleu(hyp, ref), 4)
        notes.append(f"smoothed sentence BLEU {report.sentences[0]:.4f}")


def test_training_determinism(overfit_model, lexicon, tmp_path):
    with criterion(10, "byte-identical models from repeated training") as notes:
        data, _, first, _ = overfit_model
        again = train(data, JOINT, k=OVERFIT_BEAM, iterations=OVERFIT_ITERATIONS, seed=1, lexicon=lexicon)
        second = tmp_path / "b.model"
        again.save(second)
        assert first.read_bytes() == second.read_bytes()
        notes.append(f"{len(first.read_bytes())} bytes identical")
