"""Candidate inflections from lemma + attributes, and singular/plural context features."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .graph import DeepGraph, Node

log = logging.getLogger(__name__)

NONE = "-NONE-"
_SENSE = re.compile(r"^(.+)\.\d+$")

_FIXED = {"a": (("a", "DT"), ("an", "DT")), "not": (("not", "RB"), ("n't", "RB"))}


def base_lemma(lemma: str) -> str:
    """Strip a PropBank-style sense suffix: ``think.01`` -> ``think``."""
    m = _SENSE.match(lemma)
    return m.group(1) if m else lemma


class Lexicon:
    """(lemma, tag) -> surface form table with identity fallback."""

    def __init__(self, entries: Iterable[tuple[str, str, str]] = ()):
        self._forms: dict[tuple[str, str], str] = {}
        self._all: dict[str, list[tuple[str, str]]] = {}
        self._tags_of_form: dict[str, list[str]] = {}
        for lemma, tag, form in entries:
            self.add(lemma, tag, form)

    def add(self, lemma: str, tag: str, form: str) -> None:
        self._forms.setdefault((lemma, tag), form)
        forms = self._all.setdefault(lemma, [])
        if (form, tag) not in forms:
            forms.append((form, tag))
        tags = self._tags_of_form.setdefault(form, [])
        if tag not in tags:
            tags.append(tag)

    @classmethod
    def load(cls, path: str | Path) -> "Lexicon":
        entries = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                cols = line.split("\t")
                if len(cols) != 3:
                    raise ValueError(f"{path}:{lineno}: expected lemma<TAB>tag<TAB>form")
                entries.append(tuple(cols))
        return cls(entries)

    @classmethod
    def bundled(cls) -> "Lexicon":
        with resources.as_file(resources.files("deeplin") / "data" / "toy_lexicon.tsv") as p:
            return cls.load(p)

    def entries(self) -> Iterator[tuple[str, str, str]]:
        for lemma, forms in self._all.items():
            for form, tag in forms:
                yield lemma, tag, form

    def dump(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for lemma, tag, form in self.entries():
                fh.write(f"{lemma}\t{tag}\t{form}\n")

    def get(self, lemma: str, tag: str) -> tuple[str, bool]:
        """Return ``(form, found)``; a missing entry falls back to the lemma."""
        lemma = base_lemma(lemma)
        form = self._forms.get((lemma, tag))
        if form is None:
            return lemma, False
        return form, True

    def getall(self, lemma: str) -> list[tuple[str, str]]:
        lemma = base_lemma(lemma)
        seen, out = set(), []
        for form, tag in self._all.get(lemma, [(lemma, "X")]):
            if form not in seen:
                seen.add(form)
                out.append((form, tag))
        return out

    def tags(self, form: str) -> list[str]:
        return list(self._tags_of_form.get(form, ()))

    def number(self, form: str) -> str:
        """'sg' / 'pl' for noun forms, NONE otherwise."""
        tags = self._tags_of_form.get(form, ())
        if "NNS" in tags or "NNPS" in tags:
            return "pl"
        if "NN" in tags or "NNP" in tags:
            return "sg"
        return NONE

    def base_tag(self, lemma: str) -> str | None:
        lemma = base_lemma(lemma)
        for form, tag in self._all.get(lemma, ()):
            if form == lemma:
                return tag
        return None

    def __contains__(self, lemma: str) -> bool:
        return base_lemma(lemma) in self._all

    def __len__(self) -> int:
        return len(self._all)


@dataclass(frozen=True)
class InflectionCandidates:
    node: int
    forms: tuple[str, ...]
    tags: tuple[str, ...]
    rule: str

    def tag_of(self, form: str) -> str | None:
        try:
            return self.tags[self.forms.index(form)]
        except ValueError:
            return None


def subject_of(node: Node | int, g: DeepGraph) -> Node | None:
    nid = node if isinstance(node, int) else node.id
    subj = [c for c in g.children[nid] if g.labels.get((nid, c)) == "SBJ"]
    if not subj:
        return None
    if len(subj) > 1:
        log.warning("node %d has %d SBJ children; using the lowest id", nid, len(subj))
    return g.nodes[min(subj)]


def candidate_inflections(node: Node, g: DeepGraph, lex: Lexicon) -> InflectionCandidates:
    lemma = base_lemma(node.lemma)
    attrs = node.attrs
    partic, tense = attrs.get("partic"), attrs.get("tense")

    def out(rule, pairs):
        forms, tags = [], []
        for f, t in pairs:
            if f not in forms:
                forms.append(f)
                tags.append(t)
        return InflectionCandidates(node.id, tuple(forms), tuple(tags), rule)

    def wik(tag):
        form, found = lex.get(lemma, tag)
        if not found:
            log.debug("lexicon has no %s form for %r; using the lemma", tag, lemma)
        return form, tag

    def subject_num():
        subj = subject_of(node, g)
        return subj.attrs.get("num") if subj is not None else None

    if node.inserted:
        return out("function-word", [(node.lemma, node.lemma)])

    if lemma == "be":
        if partic == "pres":
            return out("be:partic=pres", [("being", "VBG")])
        if partic == "past":
            return out("be:partic=past", [("been", "VBN")])
        if tense == "past":
            num = subject_num()
            if num == "sg":
                return out("be:past:sg", [("was", "VBD")])
            if num == "pl":
                return out("be:past:pl", [("were", "VBD")])
            return out("be:past:other", [("was", "VBD"), ("were", "VBD")])
        if tense == "pres":
            num = subject_num()
            if num == "sg":
                return out("be:pres:sg", [("is", "VBZ")])
            if num == "pl":
                return out("be:pres:pl", [("are", "VBP")])
            return out("be:pres:other", [("am", "VBP"), ("is", "VBZ"), ("are", "VBP")])
        return out("be:none", [("be", "VB")])

    if partic or tense:
        if partic == "pres":
            return out("verb:partic=pres", [wik("VBG")])
        if partic == "past":
            return out("verb:partic=past", [wik("VBN")])
        if tense == "past":
            return out("verb:tense=past", [wik("VBD")])
        if tense == "pres":
            if subject_num() == "sg":
                return out("verb:pres:sg", [wik("VBZ")])
            # getall lists the base form first; it doubles as the non-3sg present
            return out("verb:pres:other",
                       [(f, "VBP" if t == "VB" else t) for f, t in lex.getall(lemma)])

    if lemma in _FIXED:
        return out(f"lemma={lemma}", _FIXED[lemma])
    num = attrs.get("num")
    if num == "sg":
        form, found = lex.get(lemma, "NNP")
        return out("num=sg", [(form, "NNP")] if found else [wik("NN")])
    if num == "pl":
        form, found = lex.get(lemma, "NNPS")
        return out("num=pl", [(form, "NNPS")] if found else [wik("NNS")])
    return out("none", [(lemma, lex.base_tag(lemma) or "X")])


def sg_pl_features(n: int, words: Sequence[str], nodes: Sequence[int | None],
                   g: DeepGraph, lex: Lexicon) -> list[str]:
    """Context features for choosing among a lemma's candidate forms.

    ``words`` is the linearized sentence (inflected to the left of ``n``),
    ``nodes`` gives the graph node behind each position (None for function
    words).
    """

    def word(i):
        return words[i] if 0 <= i < len(words) else NONE

    def count(i):
        if not 0 <= i < len(words):
            return NONE
        nid = nodes[i]
        if nid is not None and g.nodes[nid].attrs.get("num"):
            return g.nodes[nid].attrs["num"]
        return lex.number(words[i])

    nid = nodes[n]
    subj = subject_of(nid, g) if nid is not None else None
    subj_word = base_lemma(subj.lemma) if subj else NONE
    subj_count = subj.attrs.get("num", lex.number(subj.lemma)) if subj else NONE
    w1, w2, w3 = word(n - 1), word(n - 2), word(n - 3)
    c1, c2, c3 = count(n - 1), count(n - 2), count(n - 3)
    return [
        "bias",
        f"W-1W-2W-3={w1}_{w2}_{w3}",
        f"C-1C-2C-3={c1}_{c2}_{c3}",
        f"W-1W-2={w1}_{w2}",
        f"C-1C-2={c1}_{c2}",
        f"W-1={w1}",
        f"C-1={c1}",
        f"W+1={word(n + 1)}",
        f"C+1={count(n + 1)}",
        f"SUBJ={subj_word}",
        f"CSUBJ={subj_count}",
    ]
