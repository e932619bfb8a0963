"""Three-stage baseline: function words on the deep graph, shallow linearization, then morphology."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence
from urllib.parse import quote, unquote

from .features import PosMap, clean
from .graph import FW_LEMMA, DeepGraph, GoldRealization, GraphError, Node, Token
from .learner import DEFAULT_BEAM, DEFAULT_ITERATIONS, DEFAULT_SEED, averaged_copy, beam_decode, train
from .morphology import Lexicon, base_lemma, candidate_inflections, sg_pl_features
from .perceptron import Classifier, Model
from .transition import COMMA_LABEL, SHALLOW, SPLIT_CHILD_LABEL, realization

log = logging.getLogger(__name__)

MAX_COMMAS = 3
ROOT_WORD = "-ROOT-"
YES, NO = "1", "0"


@dataclass
class FwPrediction:
    to: set[tuple[int, int]] = field(default_factory=set)
    that: set[tuple[int, int]] = field(default_factory=set)
    commas: dict[int, int] = field(default_factory=dict)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FwPrediction):
            return NotImplemented
        return (self.to == other.to and self.that == other.that
                and {k: v for k, v in self.commas.items() if v}
                == {k: v for k, v in other.commas.items() if v})


# ---------------------------------------------------------------------------
# gold function words and shallow graphs

def gold_predictions(g: DeepGraph, gold: GoldRealization) -> FwPrediction:
    """Read the function words of a gold realization back onto the deep graph."""
    toks = gold.tokens
    pred = FwPrediction()
    for i, t in enumerate(toks, 1):
        if t.src in ("TO", "THAT"):
            deps = gold.dependents(i)
            if len(deps) != 1 or t.head == 0:
                raise GraphError(f"{t.src} token {i} is not between a head and one child")
            arc = (toks[t.head - 1].src, toks[deps[0] - 1].src)
            (pred.to if t.src == "TO" else pred.that).add(arc)
        elif t.src == "COMMA":
            head = toks[t.head - 1] if t.head else None
            if head is None or head.is_fw:
                raise GraphError(f"comma token {i} is not attached to a content word")
            pred.commas[head.src] = pred.commas.get(head.src, 0) + 1
    return pred


def build_shallow_graph(g: DeepGraph, preds: FwPrediction) -> tuple[DeepGraph, dict[tuple, int]]:
    """Add comma leaves and to/that nodes; returns the graph and the ids given to new nodes.

    New ids are allocated from ``max id + 1``: commas first (by head node),
    then to/that (by split arc).  The id map has keys ``("COMMA", node, k)``
    and ``("TO"|"THAT", head, child)``.
    """
    nodes = list(g.nodes.values())
    arcs = set(g.arcs)
    labels = g.labels
    next_id = max(g.nodes) + 1
    ids: dict[tuple, int] = {}
    for n in sorted(preds.commas):
        if n not in g.nodes:
            raise GraphError(f"comma prediction for unknown node {n}")
        for k in range(preds.commas[n]):
            ids[("COMMA", n, k)] = next_id
            nodes.append(Node(next_id, FW_LEMMA["COMMA"], inserted="COMMA"))
            arcs.add((n, next_id, COMMA_LABEL))
            next_id += 1
    split = sorted([(h, c, "TO") for h, c in preds.to] + [(h, c, "THAT") for h, c in preds.that])
    for h, c, tag in split:
        if (h, c) not in labels:
            raise GraphError(f"function-word prediction on missing arc {h}->{c}")
        if (tag, h, c) in ids or ("TO" if tag == "THAT" else "THAT", h, c) in ids:
            raise GraphError(f"arc {h}->{c} split twice")
        fw = next_id
        next_id += 1
        ids[(tag, h, c)] = fw
        nodes.append(Node(fw, FW_LEMMA[tag], inserted=tag))
        arcs = {a for a in arcs if (a[0], a[1]) != (h, c)}
        arcs.add((h, fw, labels[(h, c)]))
        arcs.add((fw, c, SPLIT_CHILD_LABEL[FW_LEMMA[tag]]))
    return DeepGraph(nodes, arcs), ids


def shallow_instance(g: DeepGraph, gold: GoldRealization) -> tuple[DeepGraph, GoldRealization]:
    """Gold shallow graph plus the gold realization restated over it (lemmas as forms)."""
    sg, ids = build_shallow_graph(g, gold_predictions(g, gold))
    toks = gold.tokens
    seen: dict[int, int] = {}
    out = []
    for i, t in enumerate(toks, 1):
        if t.src == "COMMA":
            head = toks[t.head - 1].src
            k = seen.get(head, 0)
            seen[head] = k + 1
            src = ids[("COMMA", head, k)]
        elif t.src in ("TO", "THAT"):
            child = toks[gold.dependents(i)[0] - 1].src
            src = ids[(t.src, toks[t.head - 1].src, child)]
        else:
            src = t.src
        out.append(Token(sg.nodes[src].lemma, src, t.head, t.label))
    return sg, GoldRealization(tuple(out))


# ---------------------------------------------------------------------------
# features

def _word(g: DeepGraph, n: int) -> str:
    return ROOT_WORD if n == 0 else clean(base_lemma(g.nodes[n].lemma))


def _pos(g: DeepGraph, n: int, posmap: PosMap) -> str:
    return ROOT_WORD if n == 0 else posmap.pos_of(g.nodes[n])


def fw_features_tothat(g: DeepGraph, n: int, c: int, posmap: PosMap) -> list[str]:
    return [f"WORD(n)={_word(g, n)}", f"POS(n)={_pos(g, n, posmap)}", f"WORD(c)={_word(g, c)}"]


def fw_features_comma(g: DeepGraph, n: int, posmap: PosMap) -> list[str]:
    kids = g.children[n]
    words = sorted({_word(g, c) for c in kids})
    labels = sorted({g.labels[(n, c)] for c in kids})
    return ([f"WORD(n)={_word(g, n)}", f"POS(n)={_pos(g, n, posmap)}"]
            + [f"BAG(WORD-MOD)={w}" for w in words]
            + [f"BAG(LABEL-MOD)={lab}" for lab in labels])


# ---------------------------------------------------------------------------
# models

def _lemma_file(lemma: str) -> str:
    return quote(lemma, safe="").replace(".", "%2E") + ".model"


@dataclass
class PipelineModels:
    fw_to: Classifier
    fw_that: Classifier
    fw_comma: Classifier
    linear: Model
    morph: dict[str, Classifier]
    posmap: PosMap

    def save(self, directory: str | Path) -> None:
        d = Path(directory)
        (d / "morph").mkdir(parents=True, exist_ok=True)
        self.fw_to.save(d / "fw_to.model")
        self.fw_that.save(d / "fw_that.model")
        self.fw_comma.save(d / "fw_comma.model")
        self.linear.save(d / "linear.model")
        for lemma in sorted(self.morph):
            self.morph[lemma].save(d / "morph" / _lemma_file(lemma))
        self.posmap.save(d / "posmap.tsv")

    @classmethod
    def load(cls, directory: str | Path) -> "PipelineModels":
        d = Path(directory)
        morph = {}
        if (d / "morph").is_dir():
            for p in sorted((d / "morph").glob("*.model")):
                morph[unquote(p.name[:-len(".model")])] = Classifier.load(p)
        return cls(Classifier.load(d / "fw_to.model"), Classifier.load(d / "fw_that.model"),
                   Classifier.load(d / "fw_comma.model"), Model.load(d / "linear.model"),
                   morph, PosMap.load(d / "posmap.tsv"))


def predict_function_words(g: DeepGraph, models: PipelineModels) -> FwPrediction:
    pred = FwPrediction()
    for h, c, _ in g.arcs:
        if h == 0:
            continue
        feats = fw_features_tothat(g, h, c, models.posmap)
        m_to = _margin(models.fw_to, feats)
        m_that = _margin(models.fw_that, feats)
        if m_to > 0 and m_to >= m_that:
            pred.to.add((h, c))
        elif m_that > 0:
            pred.that.add((h, c))
    for n in g.nodes:
        if g.children[n]:
            k = int(models.fw_comma.predict(fw_features_comma(g, n, models.posmap)))
            if k:
                pred.commas[n] = k
    return pred


def _margin(clf: Classifier, feats: list[str]) -> float:
    yes, no = clf.scores(feats, [YES, NO])
    return yes - no


def _morph_context(g: DeepGraph, srcs: Sequence[int | None], forms: list[str], n: int,
                   lex: Lexicon) -> list[str]:
    """Forms to the left of ``n`` as given, lemmas from ``n`` on."""
    words = list(forms[:n]) + [base_lemma(g.nodes[s].lemma) if s is not None else forms[i]
                               for i, s in enumerate(srcs[n:], n)]
    return sg_pl_features(n, words, srcs, g, lex)


def inflect(g: DeepGraph, srcs: Sequence[int | str], lemmas: Sequence[str], models: PipelineModels,
            lex: Lexicon) -> list[str]:
    """Choose a surface form for every token of a linearized lemma sequence, left to right."""
    nodes = [s if isinstance(s, int) else None for s in srcs]
    forms = list(lemmas)
    for i, nid in enumerate(nodes):
        if nid is None:
            continue
        cands = candidate_inflections(g.nodes[nid], g, lex)
        if len(cands.forms) == 1:
            forms[i] = cands.forms[0]
            continue
        clf = models.morph.get(base_lemma(g.nodes[nid].lemma))
        if clf is None:
            forms[i] = cands.forms[0]
            continue
        feats = _morph_context(g, nodes, forms, i, lex)
        forms[i] = clf.predict(feats, list(cands.forms))
    return forms


def run_pipeline(g: DeepGraph, models: PipelineModels, lex: Lexicon, k: int = DEFAULT_BEAM,
                 preds: FwPrediction | None = None) -> GoldRealization:
    """Deep graph -> shallow graph -> lemma order -> inflected tokens."""
    preds = predict_function_words(g, models) if preds is None else preds
    sg, _ = build_shallow_graph(g, preds)
    final = beam_decode(sg, models.linear, SHALLOW, k, posmap=models.posmap)
    shallow = realization(final)
    srcs: list[int | str] = []
    for t in shallow.tokens:
        node = sg.nodes[t.src]
        srcs.append(node.inserted if node.inserted else t.src)
    forms = inflect(g, srcs, [t.form for t in shallow.tokens], models, lex)
    return GoldRealization(tuple(Token(f, s, t.head, t.label)
                                 for f, s, t in zip(forms, srcs, shallow.tokens)))


def train_pipeline(corpus: Sequence[tuple[DeepGraph, GoldRealization]], k: int = DEFAULT_BEAM,
                   iterations: int = DEFAULT_ITERATIONS, seed: int = DEFAULT_SEED,
                   lexicon: Lexicon | None = None, posmap: PosMap | None = None,
                   on_iteration: Callable[[int, "PipelineModels"], None] | None = None) -> PipelineModels:
    """Train the three stages; ``on_iteration(it, models)`` sees each linearizer pass."""
    lex = lexicon if lexicon is not None else Lexicon.bundled()
    posmap = posmap if posmap is not None else PosMap.from_corpus(corpus, lex)
    # NO first: a tie predicts NO, matching the strict margin used at prediction time
    fw_to = Classifier([NO, YES], "fw_to")
    fw_that = Classifier([NO, YES], "fw_that")
    fw_comma = Classifier([str(i) for i in range(MAX_COMMAS + 1)], "fw_comma")
    tothat, comma = [], []
    morph_data: dict[str, list[tuple[list[str], str, list[str]]]] = {}
    shallow = []
    for g, gold in corpus:
        preds = gold_predictions(g, gold)
        for h, c, _ in g.arcs:
            if h:
                feats = fw_features_tothat(g, h, c, posmap)
                tothat.append((feats, YES if (h, c) in preds.to else NO,
                               YES if (h, c) in preds.that else NO))
        for n in g.nodes:
            if g.children[n]:
                comma.append((fw_features_comma(g, n, posmap), str(min(preds.commas.get(n, 0), MAX_COMMAS))))
        nodes = [t.src if not t.is_fw else None for t in gold.tokens]
        forms = gold.words
        for i, nid in enumerate(nodes):
            if nid is None:
                continue
            cands = candidate_inflections(g.nodes[nid], g, lex)
            if len(cands.forms) > 1 and forms[i] in cands.forms:
                feats = _morph_context(g, nodes, forms, i, lex)
                morph_data.setdefault(base_lemma(g.nodes[nid].lemma), []).append(
                    (feats, forms[i], list(cands.forms)))
        shallow.append(shallow_instance(g, gold))
    rng = random.Random(seed)
    for _ in range(iterations):
        order = list(range(len(tothat)))
        rng.shuffle(order)
        for i in order:
            feats, to_gold, that_gold = tothat[i]
            fw_to.learn(feats, to_gold)
            fw_that.learn(feats, that_gold)
        order = list(range(len(comma)))
        rng.shuffle(order)
        for i in order:
            fw_comma.learn(*comma[i])
    morph = {}
    for lemma in sorted(morph_data):
        data = morph_data[lemma]
        classes = sorted({f for _, _, cands in data for f in cands})
        clf = Classifier(classes, "morph")
        for _ in range(iterations):
            order = list(range(len(data)))
            rng.shuffle(order)
            for i in order:
                feats, gold_form, cands = data[i]
                clf.learn(feats, gold_form, cands)
        morph[lemma] = clf.finalize()
    fw_to.finalize(), fw_that.finalize(), fw_comma.finalize()

    def progress(it, model, counts):
        on_iteration(it, PipelineModels(fw_to, fw_that, fw_comma, averaged_copy(model), morph, posmap))

    linear = train(shallow, SHALLOW, k, iterations, seed, lex, posmap,
                   on_iteration=progress if on_iteration is not None else None)
    return PipelineModels(fw_to, fw_that, fw_comma, linear, morph, posmap)

