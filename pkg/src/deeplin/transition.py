"""Transition states, actions and their application.

A state is ``(stack, unshifted, arcs)`` plus the emitted token sequence.  In
joint mode three extra actions handle function words: ``Insert`` emits a
comma, ``SplitArc`` announces a ``to``/``that`` that is emitted by the next
Shift, and ``Idle`` pads finished derivations to a common length.

States are immutable; :func:`apply` returns a new state.  The emitted tokens
and the action history are cons lists so that extending them is O(1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

from .graph import ROOT_ID, DeepGraph, GoldRealization, Token
from .morphology import InflectionCandidates, Lexicon, candidate_inflections

SHALLOW, JOINT = "shallow", "joint"
MODES = (SHALLOW, JOINT)
SPLIT_WORDS = ("to", "that")
SPLIT_TAG = {"to": "TO", "that": "THAT"}
SPLIT_POS = {"to": "TO", "that": "IN"}
# label of the function word -> content child arc created by a split
SPLIT_CHILD_LABEL = {"to": "IM", "that": "SUB"}
COMMA = ","
COMMA_LABEL = "P"


class IllegalAction(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Action:
    kind: str  # SH LA RA IN SP ID
    node: int | None = None
    pos: str | None = None
    form: str | None = None
    word: str | None = None
    key: str = field(default="", compare=False, repr=False)

    def __post_init__(self):
        if self.kind == "SH":
            key = f"SH:{self.form}:{self.pos}"
        elif self.kind == "SP":
            if self.word not in SPLIT_WORDS:
                raise ValueError(f"SplitArc word must be one of {SPLIT_WORDS}")
            key = f"SP:{self.word}"
        else:
            key = self.kind
        object.__setattr__(self, "key", key)

    @property
    def coarse_key(self) -> str | None:
        return "SH" if self.kind == "SH" else None

    def __str__(self) -> str:
        if self.kind == "SH":
            return f"SH-{self.form}"
        if self.kind == "SP":
            return f"SP-{self.word}"
        return self.kind


def Shift(node: int, pos: str, form: str) -> Action:
    return Action("SH", node, pos, form)


def SplitArc(word: str) -> Action:
    return Action("SP", word=word)


LEFT_ARC = Action("LA")
RIGHT_ARC = Action("RA")
INSERT = Action("IN")
IDLE = Action("ID")
SPLIT_TO = SplitArc("to")
SPLIT_THAT = SplitArc("that")


class Item(NamedTuple):
    node: int
    pos: str
    form: str
    # pending function word heading this item's span: (surface position, word, head node)
    lead: tuple[int, str, int] | None = None


class Emitted(NamedTuple):
    form: str
    pos: str
    src: int | str
    prev: "Emitted | None"


class Context:
    """Per-instance data shared by every state of one derivation."""

    def __init__(self, graph: DeepGraph, mode: str = SHALLOW, lexicon: Lexicon | None = None,
                 posmap=None):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self.graph = graph
        self.mode = mode
        self.n = len(graph)
        self.max_steps = 5 * self.n - 1 if mode == JOINT else 2 * self.n - 1
        self.posmap = posmap
        self.pos: dict[int, str] = {}
        for nid, node in graph.nodes.items():
            self.pos[nid] = posmap.pos_of(node) if posmap is not None else "X"
        self.candidates: dict[int, InflectionCandidates] = {}
        if mode == JOINT:
            lex = lexicon if lexicon is not None else Lexicon.bundled()
            for nid, node in graph.nodes.items():
                self.candidates[nid] = candidate_inflections(node, graph, lex)

    def shift_options(self, node: int) -> list[tuple[str, str]]:
        """(form, pos) pairs a Shift of ``node`` may choose from."""
        if self.mode == JOINT:
            c = self.candidates[node]
            return list(zip(c.forms, c.tags))
        return [(self.graph.nodes[node].lemma, self.pos[node])]


class State:
    __slots__ = ("ctx", "stack", "rho", "arcs", "lc", "rc", "tail", "n_emitted",
                 "commas", "splits", "pending", "ins_run", "history", "step", "score", "gold")

    def __init__(self, ctx, stack, rho, arcs, lc, rc, tail, n_emitted, commas, splits,
                 pending, ins_run, history, step, score=0.0):
        self.ctx: Context = ctx
        self.stack: tuple[Item, ...] = stack
        self.rho: frozenset[int] = rho
        self.arcs: tuple[tuple[int, int, str], ...] = arcs
        # latest left / right dependent of each head: (child, label, form, pos)
        self.lc: dict[int, tuple] = lc
        self.rc: dict[int, tuple] = rc
        self.tail: Emitted | None = tail
        self.n_emitted = n_emitted
        self.commas: tuple[tuple[int, int], ...] = commas  # (surface position, anchor node)
        self.splits: tuple[tuple[int, str, int, int], ...] = splits  # (position, word, head, child)
        self.pending: str | None = pending
        self.ins_run = ins_run
        self.history = history
        self.step = step
        self.score = score
        self.gold = False

    @property
    def graph(self) -> DeepGraph:
        return self.ctx.graph

    def actions(self) -> list[Action]:
        out = []
        h = self.history
        while h is not None:
            out.append(h[0])
            h = h[1]
        out.reverse()
        return out

    def emitted(self) -> list[Emitted]:
        out = []
        t = self.tail
        while t is not None:
            out.append(t)
            t = t.prev
        out.reverse()
        return out

    @property
    def complete(self) -> bool:
        """All nodes shifted and reduced to a single root with nothing pending."""
        return (not self.rho and len(self.stack) == 1 and self.pending is None
                and self.stack[0].lead is None)

    def __repr__(self) -> str:
        stack = " ".join(str(it.node) for it in self.stack)
        return f"State(step={self.step}, stack=[{stack}], rho={sorted(self.rho)}, score={self.score:.3f})"


def initial_state(g: DeepGraph | Context, mode: str = SHALLOW, lexicon: Lexicon | None = None,
                  posmap=None) -> State:
    ctx = g if isinstance(g, Context) else Context(g, mode, lexicon, posmap)
    return State(ctx, (), frozenset(ctx.graph.nodes), (), {}, {}, None, 0, (), (), None, 0, None, 0)


def apply(s: State, a: Action) -> State:
    """Apply ``a`` to ``s``.  Only structural feasibility is checked here."""
    kind = a.kind
    stack, rho, arcs, lc, rc = s.stack, s.rho, s.arcs, s.lc, s.rc
    tail, n_em, commas, splits = s.tail, s.n_emitted, s.commas, s.splits
    pending, ins_run = s.pending, s.ins_run
    g = s.ctx.graph
    if kind == "SH":
        if a.node not in rho:
            raise IllegalAction(f"node {a.node} is not unshifted")
        lead = None
        if pending is not None:
            if not stack:
                raise IllegalAction("split pending on an empty stack")
            n_em += 1
            tail = Emitted(pending, SPLIT_POS[pending], SPLIT_TAG[pending], tail)
            lead = (n_em, pending, stack[-1].node)
            pending = None
        n_em += 1
        tail = Emitted(a.form, a.pos, a.node, tail)
        stack = stack + (Item(a.node, a.pos, a.form, lead),)
        rho = rho - {a.node}
        ins_run = 0
    elif kind == "LA" or kind == "RA":
        if len(stack) < 2:
            raise IllegalAction(f"{kind} needs two stack items")
        if pending is not None:
            raise IllegalAction(f"{kind} while a split is pending")
        s1, s0 = stack[-2], stack[-1]
        if kind == "LA":
            head, dep = s0, s1
            if not g.has_arc(head.node, dep.node):
                raise IllegalAction(f"no graph arc {head.node}->{dep.node}")
            if s0.lead is not None:
                raise IllegalAction("LeftArc onto an item headed by a pending function word")
            label = g.label(head.node, dep.node)
            lc = dict(lc)
            lc[head.node] = (dep.node, label, dep.form, dep.pos)
            stack = stack[:-2] + (s0._replace(lead=s1.lead),)
        else:
            head, dep = s1, s0
            if not g.has_arc(head.node, dep.node):
                raise IllegalAction(f"no graph arc {head.node}->{dep.node}")
            if s0.lead is not None:
                fw_pos, word, fw_head = s0.lead
                if fw_head != s1.node:
                    raise IllegalAction("function word would be detached from its head")
                splits = splits + ((fw_pos, word, s1.node, s0.node),)
            label = g.label(head.node, dep.node)
            rc = dict(rc)
            rc[head.node] = (dep.node, label, dep.form, dep.pos)
            stack = stack[:-1]
        arcs = arcs + ((head.node, dep.node, label),)
        ins_run = 0
    elif kind == "IN":
        if not stack:
            raise IllegalAction("Insert on an empty stack")
        if pending is not None:
            raise IllegalAction("Insert while a split is pending")
        n_em += 1
        tail = Emitted(COMMA, COMMA, "COMMA", tail)
        commas = commas + ((n_em, stack[-1].node),)
        ins_run += 1
    elif kind == "SP":
        if not stack:
            raise IllegalAction("SplitArc on an empty stack")
        if pending is not None:
            raise IllegalAction("SplitArc while a split is already pending")
        pending = a.word
    elif kind != "ID":
        raise IllegalAction(f"unknown action kind {kind!r}")
    return State(s.ctx, stack, rho, arcs, lc, rc, tail, n_em, commas, splits, pending, ins_run,
                 (a, s.history), s.step + 1, s.score)


def replay(g: DeepGraph | Context, actions, mode: str = SHALLOW, **kw) -> State:
    s = initial_state(g, mode, **kw)
    for a in actions:
        s = apply(s, a)
    return s


def is_terminal(s: State, mode: str | None = None, n: int | None = None) -> bool:
    mode = mode or s.ctx.mode
    n = s.ctx.n if n is None else n
    if not s.complete:
        return False
    if mode == JOINT:
        return s.step == 5 * n - 1
    return True


def surface(s: State) -> list[str]:
    if not is_terminal(s):
        raise ValueError("surface() needs a terminal state")
    return [e.form for e in s.emitted()]


def realization(s: State) -> GoldRealization:
    """The ordered tree built by a completed derivation."""
    if not s.complete:
        raise ValueError("realization() needs a completed state")
    g = s.ctx.graph
    em = s.emitted()
    position = {e.src: p for p, e in enumerate(em, 1) if isinstance(e.src, int)}
    head: dict[int, tuple[int, str]] = {}
    for h, c, lab in s.arcs:
        head[position[c]] = (position[h], lab)
    root = s.stack[0].node
    head[position[root]] = (0, g.labels.get((ROOT_ID, root), "ROOT"))
    for fw_pos, word, h, c in s.splits:
        head[fw_pos] = (position[h], g.label(h, c))
        head[position[c]] = (fw_pos, SPLIT_CHILD_LABEL[word])
    comma_pos = {p for p, _ in s.commas}
    for p, anchor in s.commas:
        a = position[anchor]
        later = any(q > p for q, (hq, _) in head.items() if hq == a and q not in comma_pos)
        if later or head[a][0] == 0:
            head[p] = (a, COMMA_LABEL)
        else:
            head[p] = (head[a][0], COMMA_LABEL)
    return GoldRealization(tuple(Token(e.form, e.src, *head[p]) for p, e in enumerate(em, 1)))


# ---------------------------------------------------------------------------
# trace tables

def _fmt_set(xs) -> str:
    return "{" + ",".join(str(x) for x in sorted(xs)) + "}"


def trace_rows(s: State) -> Iterator[tuple[int, str, str, str, str]]:
    """Yield ``(index, action, stack, unshifted, new arc)`` for each step of ``s``."""
    cur = initial_state(s.ctx)
    yield 0, "", "[]", _fmt_set(cur.rho), ""
    for idx, a in enumerate(s.actions(), 1):
        nxt = apply(cur, a)
        arc = ""
        if a.kind == "RA":
            arc = f"{nxt.arcs[-1][0]}->{nxt.arcs[-1][1]}"
        elif a.kind == "LA":
            arc = f"{nxt.arcs[-1][1]}<-{nxt.arcs[-1][0]}"
        stack = "[" + " ".join(str(it.node) for it in nxt.stack) + "]"
        yield idx, str(a), stack, _fmt_set(nxt.rho), arc
        cur = nxt


def format_trace(s: State, collapse_idle: bool = True) -> str:
    """Tab-separated derivation table; trailing Idle padding becomes one summary row."""
    rows = list(trace_rows(s))
    idle = 0
    if collapse_idle:
        while rows and rows[-1][1] == str(IDLE):
            rows.pop()
            idle += 1
    out = ["\t".join(str(c) for c in row) for row in rows]
    if idle:
        out.append(f"+{idle}\t{IDLE}")
    return "\n".join(out)
