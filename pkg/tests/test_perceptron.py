import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import snapshot_average
from deeplin.perceptron import Classifier, Model, ModelFormatError

FEATS = ["a", "b", "c", "d"]

batches = st.lists(
    st.lists(st.tuples(st.sampled_from(FEATS), st.sampled_from([-1.0, 1.0, 2.5])), max_size=4),
    min_size=1, max_size=12)


def trained(updates):
    m = Model()
    for batch in updates:
        for f, d in batch:
            m.update(f, "K", d)
        m.tick()
    return m


@settings(max_examples=200, deadline=None)
@given(batches)
def test_lazy_average_matches_snapshots(updates):
    m = trained(updates)
    expected = snapshot_average(updates)
    for f in FEATS:
        assert m.averaged_weight(f, "K") == pytest.approx(expected.get(f, 0.0))
    m.finalize()
    for f in FEATS:
        assert m.weight(f, "K") == pytest.approx(expected.get(f, 0.0))


def test_constant_weight_averages_to_itself():
    m = trained([[("a", 3.0)], [], [], []])
    assert m.averaged_weight("a", "K") == 3.0


def test_half_and_half():
    # weight 1 after example one, back to 0 after example two
    m = trained([[("a", 1.0)], [("a", -1.0)]])
    assert m.averaged_weight("a", "K") == 0.5


def test_finalize_is_idempotent():
    m = trained([[("a", 1.0)], [("b", 2.0)], [("a", -1.0)]])
    once = dict(m.finalize().weights["a"]), dict(m.weights["b"])
    m.finalize()
    assert (m.weights["a"], m.weights["b"]) == once


def test_update_after_finalize_continues_average():
    m = trained([[("a", 2.0)], []])
    m.finalize()
    m.update("a", "K", 2.0)
    m.tick()
    # snapshots 2, 2, then 4
    assert m.averaged_weight("a", "K") == pytest.approx(8 / 3)


def test_add_and_len():
    m1, m2 = Model(), Model()
    m1.update("a", "K", 1.0)
    m2.update("a", "K", -1.0)
    m2.update("b", "K", 2.0)
    both = m1 + m2
    assert both.weight("a", "K") == 0.0 and both.weight("b", "K") == 2.0
    assert len(both) == 1


def test_score_and_dot():
    m = Model()
    m.update("a", "X", 1.5)
    m.update("b", "Y", -2.0)
    assert m.score(["a", "b", "zz"], ["X", "Y", "Z"]) == [1.5, -2.0, 0.0]
    assert m.dot([("a", "X"), ("a", "X"), ("b", "Y")]) == 1.0


class TestPersistence:
    def test_round_trip(self, tmp_path):
        m = trained([[("a", 1.0), ("b", -0.5)], [("c", 0.1)]]).finalize()
        m.update("with=odd_value", "SH:x:NN", 0.3)
        m.meta["note"] = ["one", "two"]
        m.save(tmp_path / "m.txt")
        again = Model.load(tmp_path / "m.txt")
        assert again.lines() == m.lines()
        assert again.meta == {"note": ["one", "two"]}
        assert again.weight("with=odd_value", "SH:x:NN") == m.weight("with=odd_value", "SH:x:NN")

    def test_bytes_are_deterministic(self, tmp_path):
        a, b = Model(), Model()
        for f in ["x", "y", "z"]:
            a.update(f, "K", 1.0)
        for f in ["z", "x", "y"]:
            b.update(f, "K", 1.0)
        a.save(tmp_path / "a")
        b.save(tmp_path / "b")
        assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()

    @pytest.mark.parametrize("text,msg", [
        ("", "empty"),
        ("NOT-A-MODEL v1 joint\n", "not a model"),
        ("DEEPLIN-MODEL v9 joint\n", "version"),
        ("DEEPLIN-MODEL v1 joint\nfeature-without-weight\n", "malformed"),
    ])
    def test_bad_files(self, tmp_path, text, msg):
        p = tmp_path / "m.txt"
        p.write_text(text)
        with pytest.raises(ModelFormatError, match=msg):
            Model.load(p)


class TestClassifier:
    def test_learns_separable(self):
        c = Classifier(["0", "1", "2"])
        data = [(["x=a"], "0"), (["x=b"], "1"), (["x=c", "y=1"], "2")] * 3
        for _ in range(3):
            for feats, gold in data:
                c.learn(feats, gold)
        c.finalize()
        assert [c.predict(f) for f, _ in data[:3]] == ["0", "1", "2"]

    def test_intercept_learns_the_prior(self):
        c = Classifier(["rare", "common"])
        for i in range(20):
            c.learn([f"id={i}"], "common" if i % 5 else "rare")
        c.finalize()
        assert c.predict(["never-seen"]) == "common"

    def test_tie_goes_to_first_class(self):
        assert Classifier(["b", "a"]).predict(["unseen"]) == "b"

    def test_restricted_classes(self):
        c = Classifier(["0", "1", "2"])
        c.learn(["f"], "2")
        assert c.predict(["f"], ["0", "1"]) in {"0", "1"}

    def test_save_load(self, tmp_path):
        c = Classifier(["no", "yes"], "tothat")
        c.learn(["f"], "yes")
        c.finalize().save(tmp_path / "c.txt")
        again = Classifier.load(tmp_path / "c.txt")
        assert again.classes == ["no", "yes"] and again.model.mode == "tothat"
        assert again.predict(["f"]) == "yes"
