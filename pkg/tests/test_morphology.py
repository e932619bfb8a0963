import logging

import pytest

from deeplin.graph import DeepGraph, Node
from deeplin.morphology import (NONE, Lexicon, base_lemma, candidate_inflections, sg_pl_features,
                                subject_of)


def feats_dict(feats):
    return dict(f.split("=", 1) for f in feats if "=" in f)


class TestSubject:
    def test_worked(self, worked):
        g = worked[0]
        assert subject_of(5, g).id == 2
        assert subject_of(g.nodes[5], g).lemma == "price"

    def test_leaf(self, worked):
        assert subject_of(3, worked[0]) is None

    def test_two_subjects_take_lowest(self, caplog):
        g = DeepGraph([Node(1, "be"), Node(2, "a"), Node(3, "b")],
                      [(0, 1, "SROOT"), (1, 3, "SBJ"), (1, 2, "SBJ")])
        with caplog.at_level(logging.WARNING):
            assert subject_of(1, g).id == 2
        assert "SBJ" in caplog.text


class TestSgPl:
    def test_sentence_start(self, worked, lexicon):
        words = ["meanwhile", ",", "prices", "are"]
        f = feats_dict(sg_pl_features(0, words, [7, None, 2, 5], worked[0], lexicon))
        assert f["W-1"] == f["C-1"] == NONE
        assert f["W-1W-2W-3"] == "_".join([NONE] * 3)
        assert f["W+1"] == ","

    def test_plural_subject_before_verb(self, worked, lexicon):
        words = ["meanwhile", ",", "prices", "are"]
        f = feats_dict(sg_pl_features(3, words, [7, None, 2, 5], worked[0], lexicon))
        assert f["W-1"] == "prices"
        assert f["C-1"] == "pl"
        assert f["SUBJ"] == "price" and f["CSUBJ"] == "pl"
        assert f["W+1"] == f["C+1"] == NONE

    def test_no_subject(self, worked, lexicon):
        f = feats_dict(sg_pl_features(0, ["thought"], [1], worked[0], lexicon))
        assert f["SUBJ"] == f["CSUBJ"] == NONE


class TestCandidates:
    def test_gold_forms_covered(self, corpus500, lexicon):
        # every content token's gold form must be among its node's candidates
        for g, gold in corpus500:
            for tok in gold.tokens:
                if isinstance(tok.src, int):
                    cands = candidate_inflections(g.nodes[tok.src], g, lexicon)
                    assert tok.form in cands.forms, (tok, cands)

    def test_worked_nodes(self, worked, lexicon):
        g = worked[0]
        assert candidate_inflections(g.nodes[5], g, lexicon).forms == ("are",)
        assert candidate_inflections(g.nodes[1], g, lexicon).forms == ("thought",)
        assert candidate_inflections(g.nodes[2], g, lexicon).forms == ("prices",)

    def test_function_word_node(self):
        g = DeepGraph([Node(1, "rise"), Node(2, "to", inserted="TO")], [(0, 1, "SROOT"), (1, 2, "IM")])
        c = candidate_inflections(g.nodes[2], g, Lexicon())
        assert c.forms == ("to",) and c.rule == "function-word"

    def test_tag_of(self, lexicon):
        g = DeepGraph([Node(1, "be", {"tense": "pres"})], [(0, 1, "SROOT")])
        c = candidate_inflections(g.nodes[1], g, lexicon)
        assert c.tag_of("is") == "VBZ" and c.tag_of("was") is None


class TestLexicon:
    def test_fallback_to_lemma(self):
        lex = Lexicon([("rise", "VBD", "rose")])
        assert lex.get("rise", "VBD") == ("rose", True)
        assert lex.get("rise.01", "VBD") == ("rose", True)
        assert lex.get("rise", "VBN") == ("rise", False)
        assert lex.getall("zzz") == [("zzz", "X")]

    def test_number_and_base_tag(self):
        lex = Lexicon([("price", "NN", "price"), ("price", "NNS", "prices")])
        assert (lex.number("prices"), lex.number("price"), lex.number("rose")) == ("pl", "sg", NONE)
        assert lex.base_tag("price") == "NN"
        assert "price.02" in lex and len(lex) == 1

    def test_dump_load_round_trip(self, tmp_path, lexicon):
        lexicon.dump(tmp_path / "lex.tsv")
        again = Lexicon.load(tmp_path / "lex.tsv")
        assert list(again.entries()) == list(lexicon.entries())

    def test_bad_line(self, tmp_path):
        p = tmp_path / "lex.tsv"
        p.write_text("# comment\nrise\tVBD\n")
        with pytest.raises(ValueError, match=":2:"):
            Lexicon.load(p)

    @pytest.mark.parametrize("lemma,base", [("think.01", "think"), ("be", "be"), ("a.b", "a.b")])
    def test_base_lemma(self, lemma, base):
        assert base_lemma(lemma) == base
