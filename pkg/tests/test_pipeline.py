import random

import pytest

from deeplin.features import PosMap
from deeplin.graph import DeepGraph, GraphError, Node
from deeplin.perceptron import Classifier
from deeplin.pipeline import (FwPrediction, PipelineModels, build_shallow_graph, fw_features_comma,
                              fw_features_tothat, gold_predictions, predict_function_words,
                              run_pipeline, shallow_instance, train_pipeline)
from deeplin.transition import COMMA_LABEL


@pytest.fixture(scope="module")
def worked_models(worked, lexicon):
    return train_pipeline([worked], k=4, iterations=10, lexicon=lexicon)


def test_gold_predictions(worked):
    assert gold_predictions(*worked) == FwPrediction(to={(1, 6)}, commas={5: 1})


class TestShallowGraph:
    def test_worked(self, worked):
        sg, ids = build_shallow_graph(worked[0], gold_predictions(*worked))
        assert len(sg) == 9
        assert ids == {("COMMA", 5, 0): 8, ("TO", 1, 6): 9}
        assert sg.has_arc(1, 9) and sg.has_arc(9, 6) and not sg.has_arc(1, 6)
        assert sg.labels[(1, 9)] == "C-A1"
        assert sg.nodes[8].inserted == "COMMA"

    def test_no_predictions(self, worked):
        sg, ids = build_shallow_graph(worked[0], FwPrediction())
        assert sg == worked[0] and ids == {}

    def test_two_commas(self, worked):
        sg, ids = build_shallow_graph(worked[0], FwPrediction(commas={5: 2}))
        assert len(sg) == 9
        assert [sg.labels[(5, ids[("COMMA", 5, k)])] for k in (0, 1)] == [COMMA_LABEL] * 2
        assert all(not sg.children[ids[("COMMA", 5, k)]] for k in (0, 1))

    @pytest.mark.parametrize("preds", [
        FwPrediction(to={(5, 6)}),
        FwPrediction(to={(1, 6)}, that={(1, 6)}),
        FwPrediction(commas={42: 1}),
    ])
    def test_bad_predictions(self, worked, preds):
        with pytest.raises(GraphError):
            build_shallow_graph(worked[0], preds)

    def test_shallow_instance_uses_lemmas(self, worked):
        sg, sgold = shallow_instance(*worked)
        assert sgold.words == ["meanwhile", ",", "price", "be", "think", "to", "have", "increase", "."]
        assert [t.head for t in sgold.tokens] == [t.head for t in worked[1].tokens]


class TestFwFeatures:
    def test_tothat(self, worked, lexicon):
        pm = PosMap.from_corpus([worked], lexicon)
        assert fw_features_tothat(worked[0], 1, 6, pm) == ["WORD(n)=think", "POS(n)=VBN", "WORD(c)=have"]
        assert fw_features_tothat(worked[0], 0, 5, pm)[:2] == ["WORD(n)=-ROOT-", "POS(n)=-ROOT-"]

    def test_unseen_lemma_gets_fallback_pos(self, lexicon):
        g = DeepGraph([Node(1, "zorp"), Node(2, "blick")], [(0, 1, "SROOT"), (1, 2, "A1")])
        pm = PosMap({"rise": "VBD"}, "NN")
        assert "POS(n)=NN" in fw_features_tothat(g, 1, 2, pm)

    def test_comma_bags(self, worked, lexicon):
        pm = PosMap.from_corpus([worked], lexicon)
        feats = fw_features_comma(worked[0], 5, pm)
        bag = {f.split("=", 1)[1] for f in feats if f.startswith("BAG(WORD-MOD)")}
        assert bag == {"meanwhile", "price", "think", "."}
        labels = {f.split("=", 1)[1] for f in feats if f.startswith("BAG(LABEL-MOD)")}
        assert labels == {"ADV", "SBJ", "VC", "P"}

    def test_comma_bags_ignore_child_order(self, worked, lexicon):
        pm = PosMap.from_corpus([worked], lexicon)
        g = worked[0]
        arcs = list(g.arcs)
        random.Random(4).shuffle(arcs)
        shuffled = DeepGraph(list(reversed(list(g.nodes.values()))), arcs)
        assert fw_features_comma(shuffled, 5, pm) == fw_features_comma(g, 5, pm)


class TestRun:
    def test_gold_arc_has_the_largest_to_margin(self, worked, worked_models):
        g = worked[0]
        margins = {}
        for h, c, _ in g.arcs:
            if h:
                yes, no = worked_models.fw_to.scores(fw_features_tothat(g, h, c, worked_models.posmap), ["1", "0"])
                margins[(h, c)] = yes - no
        assert max(margins, key=margins.get) == (1, 6)
        assert (1, 6) in predict_function_words(g, worked_models).to

    def test_end_to_end_from_gold_function_words(self, worked, lexicon, worked_models):
        assert run_pipeline(worked[0], worked_models, lexicon, k=4, preds=gold_predictions(*worked)) == worked[1]

    def test_single_node(self, lexicon, worked_models):
        g = DeepGraph([Node(1, "rise", {"tense": "past"})], [(0, 1, "SROOT")])
        assert run_pipeline(g, worked_models, lexicon, k=4).words == ["rose"]

    def test_given_predictions(self, worked, lexicon, worked_models):
        out = run_pipeline(worked[0], worked_models, lexicon, k=4, preds=FwPrediction())
        assert "to" not in out.words and "," not in out.words
        assert len(out) == 7

    def test_save_load(self, tmp_path, worked, lexicon, worked_models):
        worked_models.save(tmp_path / "pipe")
        again = PipelineModels.load(tmp_path / "pipe")
        assert again.linear.lines() == worked_models.linear.lines()
        assert sorted(again.morph) == sorted(worked_models.morph)
        assert again.posmap == worked_models.posmap
        assert predict_function_words(worked[0], again) == predict_function_words(worked[0], worked_models)
        assert run_pipeline(worked[0], again, lexicon, k=4) == run_pipeline(worked[0], worked_models, lexicon, k=4)

    def test_odd_lemma_file_names(self, tmp_path, worked_models):
        models = PipelineModels(worked_models.fw_to, worked_models.fw_that, worked_models.fw_comma,
                                worked_models.linear, {"a/b.01": Classifier(["x"]), "..": Classifier(["y"])},
                                worked_models.posmap)
        models.save(tmp_path / "pipe")
        assert sorted(PipelineModels.load(tmp_path / "pipe").morph) == ["..", "a/b.01"]
