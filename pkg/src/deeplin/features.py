"""Feature templates for linearization states and action scoring.

Templates are named tuples of atoms.  Atoms are computed once per state (or
per state and candidate word ``L``) and each template joins its atoms into a
string ``tid=v1_v2``.  New templates only need a registry entry.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .graph import DeepGraph, GoldRealization, Node
from .morphology import Lexicon, base_lemma, candidate_inflections
from .transition import Action, State

NONE = "-NONE-"
EMPTY_SET = "-EMPTY-"
_WS = re.compile(r"\s")

FW_POS = {",": ",", "to": "TO", "that": "IN"}


def clean(value: str) -> str:
    return _WS.sub("~", value) if value else NONE


def _set(values: Iterable[str]) -> str:
    vals = sorted(set(values))
    return ",".join(vals) if vals else EMPTY_SET


# ---------------------------------------------------------------------------
# POS map

class PosMap:
    """lemma -> most frequent POS tag in gold training data, with a global fallback."""

    FALLBACK_KEY = "#fallback"

    def __init__(self, table: dict[str, str] | None = None, fallback: str = "NN"):
        self.table = dict(table or {})
        self.fallback = fallback

    @classmethod
    def from_counts(cls, counts: dict[str, Counter]) -> "PosMap":
        table = {}
        total: Counter = Counter()
        for lemma, c in counts.items():
            table[lemma] = min(c.items(), key=lambda kv: (-kv[1], kv[0]))[0]
            total.update(c)
        fallback = min(total.items(), key=lambda kv: (-kv[1], kv[0]))[0] if total else "NN"
        return cls(table, fallback)

    @classmethod
    def from_corpus(cls, corpus: Iterable[tuple[DeepGraph, GoldRealization]],
                    lexicon: Lexicon) -> "PosMap":
        counts: dict[str, Counter] = {}
        for g, gold in corpus:
            for tok in gold.tokens:
                if tok.is_fw:
                    continue
                node = g.nodes[tok.src]
                counts.setdefault(node.lemma, Counter())[gold_tag(node, g, tok.form, lexicon)] += 1
        return cls.from_counts(counts)

    def pos_of(self, node: Node | str) -> str:
        if isinstance(node, Node):
            if node.inserted:
                return FW_POS.get(node.lemma, node.lemma)
            node = node.lemma
        return self.table.get(node, self.fallback)

    def lines(self) -> list[str]:
        return [f"{self.FALLBACK_KEY}\t{self.fallback}"] + [
            f"{lemma}\t{tag}" for lemma, tag in sorted(self.table.items())]

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "PosMap":
        table, fallback = {}, "NN"
        for line in lines:
            if not line.strip():
                continue
            lemma, tag = line.rstrip("\n").split("\t")
            if lemma == cls.FALLBACK_KEY:
                fallback = tag
            else:
                table[lemma] = tag
        return cls(table, fallback)

    def save(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.lines()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "PosMap":
        return cls.from_lines(Path(path).read_text(encoding="utf-8").splitlines())

    def __eq__(self, other) -> bool:
        return isinstance(other, PosMap) and (self.table, self.fallback) == (other.table, other.fallback)


def gold_tag(node: Node, g: DeepGraph, form: str, lexicon: Lexicon) -> str:
    """POS of a gold token: the tag the inflection rules give its form, else a lexicon guess."""
    if node.inserted:
        return FW_POS.get(node.lemma, node.lemma)
    tag = candidate_inflections(node, g, lexicon).tag_of(form)
    if tag is None or tag == "X":
        tags = lexicon.tags(form)
        tag = tags[0] if tags else (lexicon.base_tag(base_lemma(node.lemma)) or "X")
    return tag


# ---------------------------------------------------------------------------
# template registry

@dataclass(frozen=True)
class Template:
    tid: str
    atoms: tuple[str, ...]
    group: str


def _t(group: str, *names: str) -> list[Template]:
    out = []
    for name in names:
        atoms = tuple(name.split("+"))
        out.append(Template(name.replace("+", ""), atoms, group))
    return out


_SET_ATOMS = ("cls", "clns", "cps", "cpns", "sls", "slns", "sps", "spns", "pls", "plns", "pps", "ppns")


def _lookahead(anchor: str) -> list[str]:
    names = []
    for fam in (("cls", "clns", "cps", "cpns"), ("sls", "slns", "sps", "spns"),
                ("pls", "plns", "pps", "ppns")):
        names += [anchor + a for a in fam]
        names += [f"{ctx}+{anchor}{fam[0]}" for ctx in ("S0w", "S0p", "S1w", "S1p")]
    return names


STATE_TEMPLATES: list[Template] = (
    _t("baseline", "bias", "S0w", "S0p", "S0lw", "S0lp", "S0ll", "S0rw", "S0rp", "S0rl",
       "S0w+S0lw", "S0w+S0lp", "S0w+S0ll", "S0p+S0lw",
       "w0", "p0", "w-1+w0", "p-1+p0", "w-2+w-1+w0", "p-2+p-1+p0")
    + _t("stack", "S1w", "S1p", "S0w+S1w", "S0p+S1p")
    + _t("lookahead-S0", *_lookahead("S0"))
    + _t("graph", "Arcl", "Arcr", "S0ds", "S0ds+Arcl", "S0ds+Arcr")
)

SHIFT_TEMPLATES: list[Template] = (
    _t("lookahead-L", *_lookahead("L"))
    + _t("graph", "Ldesc", "Lps", "S0ds+Ldesc", "S0ds+Lps")
)


def registry() -> list[Template]:
    return STATE_TEMPLATES + SHIFT_TEMPLATES


def _render(templates: list[Template], atoms: dict[str, str]) -> list[str]:
    out = []
    for t in templates:
        if len(t.atoms) == 1:
            out.append(f"{t.tid}={atoms[t.atoms[0]]}")
        else:
            out.append(t.tid + "=" + "_".join(atoms[a] for a in t.atoms))
    return out


# ---------------------------------------------------------------------------
# atoms

def _node_sets(s: State, x: int, prefix: str, atoms: dict[str, str]) -> None:
    ctx = s.ctx
    g, rho, pos = ctx.graph, s.rho, ctx.pos
    cls, clns, cps, cpns = [], [], [], []
    for c in g.children[x]:
        lab = g.labels[(x, c)]
        if c in rho:
            clns.append(lab)
            cpns.append(pos[c])
        else:
            cls.append(lab)
            cps.append(pos[c])
    sls, slns, sps, spns = [], [], [], []
    pls, plns, pps, ppns = [], [], [], []
    for p in g.parents[x]:
        lab = g.labels[(p, x)]
        if p in rho:
            plns.append(lab)
            ppns.append(pos[p])
        else:
            pls.append(lab)
            pps.append(pos[p])
        for sib in g.children[p]:
            if sib == x:
                continue
            lab = g.labels[(p, sib)]
            if sib in rho:
                slns.append(lab)
                spns.append(pos[sib])
            else:
                sls.append(lab)
                sps.append(pos[sib])
    for name, vals in zip(_SET_ATOMS, (cls, clns, cps, cpns, sls, slns, sps, spns,
                                       pls, plns, pps, ppns)):
        atoms[prefix + name] = clean(_set(vals))


def state_atoms(s: State) -> dict[str, str]:
    g = s.ctx.graph
    atoms = {"bias": "1"}
    stack = s.stack
    if stack:
        s0 = stack[-1]
        atoms["S0w"], atoms["S0p"] = clean(s0.form), s0.pos
        left = s.lc.get(s0.node)
        right = s.rc.get(s0.node)
        atoms["S0lw"], atoms["S0ll"], atoms["S0lp"] = ((clean(left[2]), left[1], left[3])
                                                       if left else (NONE, NONE, NONE))
        atoms["S0rw"], atoms["S0rl"], atoms["S0rp"] = ((clean(right[2]), right[1], right[3])
                                                       if right else (NONE, NONE, NONE))
        atoms["S0ds"] = "0" if g.descendants[s0.node] & s.rho else "1"
        _node_sets(s, s0.node, "S0", atoms)
    else:
        for a in ("S0w", "S0p", "S0lw", "S0ll", "S0lp", "S0rw", "S0rl", "S0rp", "S0ds"):
            atoms[a] = NONE
        for a in _SET_ATOMS:
            atoms["S0" + a] = NONE
    if len(stack) >= 2:
        s1 = stack[-2]
        atoms["S1w"], atoms["S1p"] = clean(s1.form), s1.pos
        atoms["Arcl"] = "1" if g.has_arc(stack[-1].node, s1.node) else "0"
        atoms["Arcr"] = "1" if g.has_arc(s1.node, stack[-1].node) else "0"
    else:
        atoms["S1w"] = atoms["S1p"] = atoms["Arcl"] = atoms["Arcr"] = NONE
    t = s.tail
    for k in ("0", "-1", "-2"):
        if t is None:
            atoms["w" + k] = atoms["p" + k] = NONE
        else:
            atoms["w" + k], atoms["p" + k] = clean(t.form), t.pos
            t = t.prev
    return atoms


def shift_atoms(s: State, L: int, base: dict[str, str]) -> dict[str, str]:
    g = s.ctx.graph
    atoms = {k: base[k] for k in ("S0w", "S0p", "S1w", "S1p", "S0ds")}
    _node_sets(s, L, "L", atoms)
    if s.stack:
        s0 = s.stack[-1].node
        atoms["Ldesc"] = "1" if L in g.descendants[s0] else "0"
        atoms["Lps"] = "1" if (L in g.parents[s0] or L in g.siblings[s0]) else "0"
    else:
        atoms["Ldesc"] = atoms["Lps"] = NONE
    return atoms


# ---------------------------------------------------------------------------
# public extraction API

def config_features(s: State) -> list[str]:
    """Baseline configuration templates only."""
    return _render([t for t in STATE_TEMPLATES if t.group in ("baseline", "stack")], state_atoms(s))


def lookahead_features(s: State, L: int) -> list[str]:
    atoms = shift_atoms(s, L, state_atoms(s))
    return _render([t for t in SHIFT_TEMPLATES if t.group == "lookahead-L"], atoms)


def graph_features(s: State, L: int | None = None) -> list[str]:
    atoms = state_atoms(s)
    out = _render([t for t in STATE_TEMPLATES if t.group == "graph"], atoms)
    if L is not None:
        out += _render([t for t in SHIFT_TEMPLATES if t.group == "graph"], shift_atoms(s, L, atoms))
    return out


class Extractor:
    """Caches state-level features so the many Shift candidates of one state share them."""

    def __init__(self, state_templates: list[Template] | None = None,
                 shift_templates: list[Template] | None = None):
        self.state_templates = STATE_TEMPLATES if state_templates is None else state_templates
        self.shift_templates = SHIFT_TEMPLATES if shift_templates is None else shift_templates

    def state(self, s: State) -> tuple[list[str], dict[str, str]]:
        atoms = state_atoms(s)
        return _render(self.state_templates, atoms), atoms

    def shift(self, s: State, L: int, atoms: dict[str, str]) -> list[str]:
        return _render(self.shift_templates, shift_atoms(s, L, atoms))

    def features(self, s: State, a: Action) -> list[str]:
        feats, atoms = self.state(s)
        if a.kind == "SH":
            feats = feats + self.shift(s, a.node, atoms)
        return feats

    def pairs(self, s: State, a: Action) -> list[tuple[str, str]]:
        """(feature, action key) pairs contributing to the score of ``a`` at ``s``."""
        feats = self.features(s, a)
        out = [(f, a.key) for f in feats]
        if a.coarse_key:
            out += [(f, a.coarse_key) for f in feats]
        return out


DEFAULT_EXTRACTOR = Extractor()


def score_action(model, s: State, a: Action, extractor: Extractor = DEFAULT_EXTRACTOR) -> float:
    return sum(model.weight(f, k) for f, k in extractor.pairs(s, a))

