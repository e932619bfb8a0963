"""Synthetic deep-graph corpus built from a small English template grammar.

Every sentence is generated as an ordered dependency tree, and the deep graph
is read off it: function words (to, that, commas) are dropped, the arcs
through them are restored, and optionally extra parents are added for shared
subjects of verb chains (reentrancy).  The result is projective and edge
consistent by construction.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from .graph import DeepGraph, GoldRealization, Node, Token
from .morphology import Lexicon
from .transition import SPLIT_CHILD_LABEL

INTRANSITIVE = """rise fall grow decline soar climb gain improve recover rally slip drop jump
surge advance ease weaken strengthen shrink work wait retire resign collapse""".split()
TRANSITIVE = """buy sell hold make take see find build cut get pay lose win leave seek lend send
meet acquire own raise lower approve reject offer need expand spend borrow close open""".split()
CONTROL = "want plan hope decide seek try agree refuse promise fail attempt intend expect continue".split()
RAISING = "think believe expect say".split()
SAYING = "say think believe argue claim note fear announce report know estimate expect".split()
FRONT_ADV = "meanwhile however moreover nonetheless yesterday today recently later".split()
FINAL_ADV = "yesterday today recently sharply slightly quickly again later eventually now".split()
VOWELS = "aeiou"


@dataclass(frozen=True)
class SynthSpec:
    sentences: int = 100
    vocabulary: int = 200
    max_nodes: int = 16
    p_reentrancy: float = 0.3
    p_tothat: float = 0.4
    p_comma: float = 0.3
    seed: int = 1

    def __post_init__(self):
        if self.sentences < 0 or self.vocabulary < 1 or self.max_nodes < 3:
            raise ValueError("sentences >= 0, vocabulary >= 1 and max_nodes >= 3 required")
        for p in (self.p_reentrancy, self.p_tothat, self.p_comma):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")


class _Tok:
    __slots__ = ("form", "lemma", "attrs", "fw", "head", "label", "node")

    def __init__(self, form, lemma=None, attrs=None, fw=None, head=None, label=""):
        self.form = form
        self.lemma = lemma
        self.attrs = attrs or {}
        self.fw = fw  # "TO" / "THAT" / "COMMA" for function words
        self.head = head
        self.label = label
        self.node = None


class _Sentence:
    def __init__(self, gen: "Generator"):
        self.gen = gen
        self.rng = gen.rng
        self.extra: list[tuple[_Tok, _Tok, str]] = []  # reentrant arcs (head, child, label)

    def word(self, form, lemma, attrs=None):
        return _Tok(form, lemma, attrs)

    def attach(self, dep: _Tok, head: _Tok, label: str) -> _Tok:
        dep.head, dep.label = head, label
        return dep

    # -- noun phrases ---------------------------------------------------

    def np(self) -> tuple[_Tok, list[_Tok], str]:
        g, rng = self.gen, self.rng
        if g.proper and rng.random() < 0.12:
            lemma = rng.choice(g.proper)
            noun = self.word(g.form(lemma, "NNP"), lemma, {"num": "sg"})
            return noun, [noun], "sg"
        lemma = rng.choice(g.nouns)
        num = rng.choice(("sg", "pl"))
        noun = self.word(g.form(lemma, "NN" if num == "sg" else "NNS"), lemma, {"num": num})
        toks = [noun]
        if num == "sg" or rng.random() < 0.4:
            if num == "sg" and rng.random() < 0.5:
                det = self.word("an" if noun.form[0] in VOWELS else "a", "a")
            else:
                det = self.word("the", "the")
            toks.insert(0, self.attach(det, noun, "NMOD"))
        return noun, toks, num

    # -- verbs ----------------------------------------------------------

    def finite(self, lemma: str, tense: str, num: str) -> _Tok:
        g = self.gen
        if lemma == "be":
            form = {("pres", "sg"): "is", ("pres", "pl"): "are",
                    ("past", "sg"): "was", ("past", "pl"): "were"}[(tense, num)]
        elif tense == "past":
            form = g.form(lemma, "VBD")
        else:
            form = g.form(lemma, "VBZ") if num == "sg" else lemma
        return self.word(form, lemma, {"tense": tense})

    def vp_tail(self, verb: _Tok, transitive: bool) -> list[_Tok]:
        """Object and final adverb following ``verb``."""
        toks = []
        if transitive:
            obj, otoks, _ = self.np()
            self.attach(obj, verb, "OBJ")
            toks += otoks
        if self.rng.random() < 0.25:
            adv = self.gen.adverb(FINAL_ADV)
            toks.append(self.attach(self.word(adv, adv), verb, "ADV"))
        return toks

    def lexical(self) -> tuple[str, bool]:
        rng, g = self.rng, self.gen
        if rng.random() < 0.5:
            return rng.choice(g.intransitive), False
        return rng.choice(g.transitive), True

    def clause(self, kind: str, reentrant: bool, tense: str | None = None) -> tuple[_Tok, list[_Tok]]:
        """A clause with its subject; returns (head verb, tokens in order)."""
        rng, g = self.rng, self.gen
        tense = tense or rng.choice(("pres", "past"))
        subj, stoks, num = self.np()
        if kind == "simple":
            lemma, trans = self.lexical()
            verb = self.finite(lemma, tense, num)
            self.attach(subj, verb, "SBJ")
            return verb, stoks + [verb] + self.vp_tail(verb, trans)
        if kind in ("progressive", "perfect"):
            aux = self.finite("be" if kind == "progressive" else "have", tense, num)
            self.attach(subj, aux, "SBJ")
            lemma, trans = self.lexical()
            tag = "VBG" if kind == "progressive" else "VBN"
            main = self.word(g.form(lemma, tag), lemma,
                             {"partic": "pres" if kind == "progressive" else "past"})
            self.attach(main, aux, "VC")
            middle = []
            if kind == "progressive" and rng.random() < 0.15:
                middle.append(self.attach(self.word("not", "not"), aux, "ADV"))
            if reentrant:
                self.extra.append((main, subj, "A0" if trans else "A1"))
            return aux, stoks + [aux] + middle + [main] + self.vp_tail(main, trans)
        if kind == "control":
            lemma = rng.choice(g.control)
            verb = self.finite(lemma, tense, num)
            self.attach(subj, verb, "SBJ")
            to = _Tok("to", fw="TO")
            self.attach(to, verb, "C-A1")
            inner, trans = self.lexical()
            inf = self.word(inner, inner)
            self.attach(inf, to, SPLIT_CHILD_LABEL["to"])
            if reentrant:
                self.extra.append((inf, subj, "A0"))
            return verb, stoks + [verb, to, inf] + self.vp_tail(inf, trans)
        if kind == "raising":
            be = self.finite("be", tense, num)
            self.attach(subj, be, "SBJ")
            lemma = rng.choice(g.raising)
            part = self.word(g.form(lemma, "VBN"), lemma, {"partic": "past"})
            self.attach(part, be, "VC")
            to = _Tok("to", fw="TO")
            self.attach(to, part, "C-A1")
            inner, trans = self.lexical()
            toks = stoks + [be, part, to]
            if rng.random() < 0.5:
                have = self.word("have", "have")
                self.attach(have, to, SPLIT_CHILD_LABEL["to"])
                main = self.word(g.form(inner, "VBN"), inner, {"partic": "past"})
                self.attach(main, have, "VC")
                toks += [have, main]
            else:
                main = self.word(inner, inner)
                self.attach(main, to, SPLIT_CHILD_LABEL["to"])
                toks.append(main)
            if reentrant:
                self.extra.append((part, subj, "A1"))
                self.extra.append((main, subj, "A1"))
            return be, toks + self.vp_tail(main, trans)
        if kind == "that":
            lemma = rng.choice(g.saying)
            verb = self.finite(lemma, tense, num)
            self.attach(subj, verb, "SBJ")
            inner_kind = rng.choice(("progressive", "perfect")) if reentrant else \
                rng.choice(("simple", "simple", "progressive", "perfect"))
            head, ctoks = self.clause(inner_kind, reentrant)
            if rng.random() < 0.7:
                that = _Tok("that", fw="THAT")
                self.attach(that, verb, "A1")
                self.attach(head, that, SPLIT_CHILD_LABEL["that"])
                return verb, stoks + [verb, that] + ctoks
            self.attach(head, verb, "A1")
            return verb, stoks + [verb] + ctoks
        raise ValueError(kind)

    def build(self, spec: SynthSpec) -> list[_Tok]:
        rng = self.rng
        reentrant = rng.random() < spec.p_reentrancy
        if rng.random() < spec.p_tothat:
            kind = rng.choice(("control", "raising", "that"))
        elif reentrant:
            kind = rng.choice(("progressive", "perfect"))
        else:
            kind = rng.choice(("simple", "simple", "progressive", "perfect"))
        head, toks = self.clause(kind, reentrant)
        if rng.random() < spec.p_comma:
            adv = self.gen.adverb(FRONT_ADV)
            a = self.attach(self.word(adv, adv), head, "ADV")
            comma = self.attach(_Tok(",", fw="COMMA"), head, "P")
            toks = [a, comma] + toks
        toks.append(self.attach(self.word(".", "."), head, "P"))
        head.label = "SROOT"
        return toks


class Generator:
    def __init__(self, spec: SynthSpec, lexicon: Lexicon | None = None):
        self.spec = spec
        self.lex = lexicon if lexicon is not None else Lexicon.bundled()
        self.rng = random.Random(spec.seed)
        vocab_rng = random.Random(spec.seed * 7919 + 17)

        def pool(words, share, minimum=2):
            words = [w for w in words if w in self.lex]
            size = max(minimum, min(len(words), int(round(spec.vocabulary * share))))
            return sorted(vocab_rng.sample(words, min(size, len(words))))

        nouns = sorted({l for l, t in self._entries() if t == "NN"})
        self.nouns = pool(nouns, 0.4, 4)
        self.proper = pool(sorted({l for l, t in self._entries() if t == "NNP"}), 0.03, 1)
        self.intransitive = pool(INTRANSITIVE, 0.12)
        self.transitive = pool(TRANSITIVE, 0.15)
        self.control = pool(CONTROL, 0.07)
        self.raising = pool(RAISING, 0.03)
        self.saying = pool(SAYING, 0.06)

    def _entries(self):
        return sorted((lemma, tag) for lemma, tag, _ in self.lex.entries())

    def form(self, lemma: str, tag: str) -> str:
        form, found = self.lex.get(lemma, tag)
        if not found:
            raise KeyError(f"lexicon lacks {tag} of {lemma!r}")
        return form

    def adverb(self, pool: list[str]) -> str:
        return self.rng.choice([a for a in pool if a in self.lex] or pool)

    def instance(self) -> tuple[DeepGraph, GoldRealization]:
        # a tight max_nodes can rule out the optional constructions entirely;
        # after half the attempts fall back to the plain grammar
        plain = replace(self.spec, p_reentrancy=0.0, p_tothat=0.0, p_comma=0.0)
        for attempt in range(1000):
            sent = _Sentence(self)
            toks = sent.build(self.spec if attempt < 500 else plain)
            content = [t for t in toks if t.fw is None]
            if len(content) <= self.spec.max_nodes:
                return self._materialize(sent, toks)
        raise RuntimeError("max_nodes too small for the grammar")

    def _materialize(self, sent: _Sentence, toks: list[_Tok]) -> tuple[DeepGraph, GoldRealization]:
        content = [t for t in toks if t.fw is None]
        ids = list(range(1, len(content) + 1))
        self.rng.shuffle(ids)
        for t, i in zip(content, ids):
            t.node = i
        position = {id(t): p for p, t in enumerate(toks, 1)}
        nodes, arcs = [], set()
        for t in content:
            nodes.append(Node(t.node, t.lemma, dict(t.attrs), t.form))
            h = t.head
            if h is None:
                arcs.add((0, t.node, t.label))
            elif h.fw is None:
                arcs.add((h.node, t.node, t.label))
            else:
                arcs.add((h.head.node, t.node, h.label))
        for h, c, lab in sent.extra:
            if not any(a[0] == h.node and a[1] == c.node for a in arcs):
                arcs.add((h.node, c.node, lab))
        gold = []
        for t in toks:
            src = t.node if t.fw is None else t.fw
            head = 0 if t.head is None else position[id(t.head)]
            gold.append(Token(t.form, src, head, t.label))
        return DeepGraph(nodes, arcs), GoldRealization(tuple(gold))


def generate(spec: SynthSpec, lexicon: Lexicon | None = None) -> list[tuple[DeepGraph, GoldRealization]]:
    gen = Generator(spec, lexicon)
    return [gen.instance() for _ in range(spec.sentences)]
