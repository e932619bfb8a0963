"""Static oracle, beam-search decoding and averaged-perceptron training with early update."""

from __future__ import annotations

import heapq
import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .constraints import legal_actions
from .features import DEFAULT_EXTRACTOR, Extractor, PosMap
from .graph import FW_TAGS, DeepGraph, GoldRealization
from .morphology import Lexicon
from .perceptron import Model
from .transition import (IDLE, INSERT, JOINT, LEFT_ARC, RIGHT_ARC, Action, Context,
                         Shift, SplitArc, State, apply, initial_state)

log = logging.getLogger(__name__)

DEFAULT_BEAM = 64
DEFAULT_ITERATIONS = 30
DEFAULT_SEED = 1
RETRY_BEAM_LIMIT = 1024


class OracleError(ValueError):
    def __init__(self, message: str, step: int | None = None):
        self.step = step
        super().__init__(message if step is None else f"step {step}: {message}")


class DecodeError(RuntimeError):
    pass


def make_context(g: DeepGraph | Context, mode: str, lexicon: Lexicon | None = None,
                 posmap: PosMap | None = None) -> Context:
    if isinstance(g, Context):
        return g
    return Context(g, mode, lexicon, posmap)


# ---------------------------------------------------------------------------
# static oracle

class _GoldView:
    """Gold tree restated over graph nodes (function words skipped)."""

    def __init__(self, gold: GoldRealization):
        self.tokens = gold.tokens
        self.position = gold.position_of()
        self.head: dict[int, int | None] = {}
        for v, p in self.position.items():
            self.head[v] = self._content_head(p)
        self.children: dict[int, list[int]] = {v: [] for v in self.position}
        for v, h in self.head.items():
            if h is not None:
                self.children[h].append(v)

    def _content_head(self, p: int) -> int | None:
        h = self.tokens[p - 1].head
        if h == 0:
            return None
        ht = self.tokens[h - 1]
        if ht.is_fw:
            if ht.src == "COMMA" or ht.head == 0:
                raise OracleError(f"token {p} depends on a {ht.src} token")
            return self.tokens[ht.head - 1].src
        return ht.src

    def dependents_after(self, v: int, p: int) -> bool:
        """Does ``v`` have a non-comma gold dependent to the right of position ``p``?"""
        pv = self.position[v]
        return any(t.head == pv and q > p and t.src != "COMMA"
                   for q, t in enumerate(self.tokens, 1))


def oracle_derivation(g: DeepGraph | Context, gold: GoldRealization, mode: str = JOINT,
                      lexicon: Lexicon | None = None, posmap: PosMap | None = None,
                      check: bool = True) -> State:
    """Derive the gold realization with the fewest, latest reductions.

    Reductions happen only when the next token (or the end) requires them;
    a LeftArc waits until the head has all its gold right dependents.
    Joint derivations are padded with Idle.  With ``check`` every action is
    verified against the legal-action mask.
    """
    ctx = make_context(g, mode, lexicon, posmap)
    view = _GoldView(gold)
    s = initial_state(ctx)

    def attached(st: State) -> set[tuple[int, int]]:
        return {(h, c) for h, c, _ in st.arcs}

    def complete(st: State, v: int, arcs: set) -> bool:
        return all((v, c) in arcs for c in view.children[v])

    def reduction(st: State) -> Action | None:
        if len(st.stack) < 2:
            return None
        s1, s0 = st.stack[-2].node, st.stack[-1].node
        arcs = attached(st)
        if view.head.get(s0) == s1 and complete(st, s0, arcs):
            return RIGHT_ARC
        if view.head.get(s1) == s0 and complete(st, s1, arcs):
            p0 = view.position[s0]
            if all((s0, c) in arcs for c in view.children[s0] if view.position[c] > p0):
                return LEFT_ARC
        return None

    def step(st: State, a: Action) -> State:
        if check and a not in legal_actions(st):
            raise OracleError(f"gold action {a} is not legal at stack "
                              f"{[it.node for it in st.stack]}", st.step + 1)
        return apply(st, a)

    def reduce_while(st: State, stop: Callable[[State], bool]) -> State:
        while not stop(st):
            a = reduction(st)
            if a is None:
                break
            st = step(st, a)
        return st

    toks = gold.tokens
    p = 0
    while p < len(toks):
        tok = toks[p]
        pos1 = p + 1
        if tok.src == "COMMA":
            gh = toks[tok.head - 1].src if tok.head else None

            def anchor_ok(st: State) -> bool:
                if not st.stack:
                    return False
                top = st.stack[-1].node
                root = view.head.get(top) is None
                if gh == top and (root or view.dependents_after(top, pos1)):
                    return True
                top_head_pos = toks[view.position[top] - 1].head
                return (top_head_pos == tok.head and not root
                        and not view.dependents_after(top, pos1))

            s = reduce_while(s, anchor_ok)
            if not anchor_ok(s):
                raise OracleError(f"comma at position {pos1} cannot be anchored", s.step + 1)
            s = step(s, INSERT)
            p += 1
            continue
        if tok.src in ("TO", "THAT"):
            fw_head = toks[tok.head - 1].src if tok.head else None
            s = reduce_while(s, lambda st: bool(st.stack) and st.stack[-1].node == fw_head)
            if not s.stack or s.stack[-1].node != fw_head:
                raise OracleError(f"{tok.form!r} at position {pos1} has no head on the stack", s.step + 1)
            s = step(s, SplitArc(tok.form if tok.form in ("to", "that") else tok.src.lower()))
            p += 1
            if p >= len(toks) or toks[p].is_fw:
                raise OracleError(f"{tok.form!r} at position {pos1} is not followed by a content word")
            tok = toks[p]
            s = step(s, _gold_shift(ctx, tok.src, tok.form))
            p += 1
            continue
        if tok.src in FW_TAGS:
            raise OracleError(f"unexpected token source {tok.src!r}")
        s = reduce_while(s, lambda st: False)
        s = step(s, _gold_shift(ctx, tok.src, tok.form))
        p += 1
    s = reduce_while(s, lambda st: False)
    if not s.complete:
        raise OracleError("gold tree could not be reduced to a single root", s.step)
    while s.step < ctx.max_steps and ctx.mode == JOINT:
        s = step(s, IDLE)
    if s.step != ctx.max_steps and ctx.mode == JOINT:
        raise OracleError(f"derivation needs {s.step} steps, more than {ctx.max_steps}")
    return s


def _gold_shift(ctx: Context, node: int, form: str) -> Action:
    if node not in ctx.graph.nodes:
        raise OracleError(f"gold token refers to unknown node {node}")
    if ctx.mode == JOINT:
        tag = ctx.candidates[node].tag_of(form)
        if tag is None:
            raise OracleError(f"gold form {form!r} of node {node} is not among its candidates "
                              f"{list(ctx.candidates[node].forms)}")
        return Shift(node, tag, form)
    return Shift(node, ctx.pos[node], ctx.graph.nodes[node].lemma)


def same_tree(a: GoldRealization, b: GoldRealization, labels: bool = False) -> bool:
    if len(a) != len(b):
        return False
    for x, y in zip(a.tokens, b.tokens):
        if (x.form, x.src, x.head) != (y.form, y.src, y.head):
            return False
        if labels and x.label != y.label:
            return False
    return True


# ---------------------------------------------------------------------------
# beam search

def action_scores(model: Model, s: State, actions: Sequence[Action],
                  extractor: Extractor = DEFAULT_EXTRACTOR) -> list[float]:
    feats, atoms = extractor.state(s)
    keys = list(dict.fromkeys(a.key for a in actions))
    by_node: dict[int, list[Action]] = {}
    for a in actions:
        if a.kind == "SH":
            by_node.setdefault(a.node, []).append(a)
    if by_node:
        keys.append("SH")
    base = dict(zip(keys, model.score(feats, keys)))
    shift_score: dict[Action, float] = {}
    for node, acts in by_node.items():
        lkeys = [a.key for a in acts] + ["SH"]
        lsc = model.score(extractor.shift(s, node, atoms), lkeys)
        common = base["SH"] + lsc[-1]
        for a, v in zip(acts, lsc):
            shift_score[a] = common + v
    return [base[a.key] + shift_score[a] if a.kind == "SH" else base[a.key] for a in actions]


@dataclass
class DecodeStats:
    dead_ends: int = 0
    expanded: int = 0
    early_update: int | None = None


def _beam_steps(ctx: Context, model: Model, k: int, extractor: Extractor,
                gold: Sequence[Action] | None = None, stats: DecodeStats | None = None):
    """Run the beam; yields nothing, returns (agenda, step of early update or None)."""
    if k < 1:
        raise ValueError("beam size must be >= 1")
    init = initial_state(ctx)
    init.gold = gold is not None
    agenda = [init]
    for t in range(ctx.max_steps):
        cands = []
        for s in agenda:
            acts = legal_actions(s)
            if not acts:
                if stats is not None:
                    stats.dead_ends += 1
                continue
            for a, sc in zip(acts, action_scores(model, s, acts, extractor)):
                cands.append((-(s.score + sc), len(cands), s, a))
        if not cands:
            raise DecodeError(f"every hypothesis is stuck at step {t} (graph with {ctx.n} nodes)")
        if stats is not None:
            stats.expanded += len(cands)
        top = heapq.nsmallest(k, cands)
        new = []
        gold_alive = False
        g_act = gold[t] if gold is not None else None
        for neg, _, s, a in top:
            ns = apply(s, a)
            ns.score = -neg
            if s.gold and a == g_act:
                ns.gold = True
                gold_alive = True
            new.append(ns)
        agenda = new
        if gold is not None and not gold_alive:
            return agenda, t
    return agenda, None


def beam_decode(g: DeepGraph | Context, model: Model, mode: str | None = None, k: int = DEFAULT_BEAM,
                lexicon: Lexicon | None = None, posmap: PosMap | None = None,
                extractor: Extractor = DEFAULT_EXTRACTOR, stats: DecodeStats | None = None) -> State:
    mode = mode or model.mode
    if posmap is None and not isinstance(g, Context):
        posmap = posmap_of(model)
    ctx = make_context(g, mode, lexicon, posmap)
    while True:
        try:
            agenda, _ = _beam_steps(ctx, model, k, extractor, stats=stats)
            return agenda[0]
        except DecodeError:
            # the mask is not dead-end free; a wider beam keeps more escape routes
            if k >= RETRY_BEAM_LIMIT:
                raise
            log.info("all hypotheses stuck with beam %d, retrying wider", k)
            k = min(4 * k, RETRY_BEAM_LIMIT)


def posmap_of(model: Model) -> PosMap | None:
    lines = model.meta.get("pos")
    return PosMap.from_lines(lines) if lines else None


# ---------------------------------------------------------------------------
# training

def feature_counts(ctx: Context, actions: Sequence[Action],
                   extractor: Extractor = DEFAULT_EXTRACTOR) -> Counter:
    counts: Counter = Counter()
    s = initial_state(ctx)
    for a in actions:
        counts.update(extractor.pairs(s, a))
        s = apply(s, a)
    return counts


def perceptron_update(model: Model, ctx: Context, gold: Sequence[Action], pred: Sequence[Action],
                      extractor: Extractor = DEFAULT_EXTRACTOR) -> int:
    """Add gold feature counts, subtract predicted ones; returns the number of touched weights."""
    delta = feature_counts(ctx, gold, extractor)
    delta.subtract(feature_counts(ctx, pred, extractor))
    n = 0
    for (f, k), v in sorted(delta.items()):
        if v:
            model.update(f, k, float(v))
            n += 1
    return n


@dataclass
class TrainingInstance:
    ctx: Context
    gold: GoldRealization
    actions: list[Action] = field(default_factory=list)


def prepare(corpus: Sequence[tuple[DeepGraph, GoldRealization]], mode: str,
            lexicon: Lexicon | None, posmap: PosMap) -> list[TrainingInstance]:
    out = []
    for i, (g, gold) in enumerate(corpus, 1):
        ctx = Context(g, mode, lexicon, posmap)
        try:
            final = oracle_derivation(ctx, gold, mode, check=False)
        except OracleError as exc:
            raise OracleError(f"instance {i}: {exc}") from None
        out.append(TrainingInstance(ctx, gold, final.actions()))
    return out


def train_epoch(model: Model, data: Sequence[TrainingInstance], order: Sequence[int], k: int,
                extractor: Extractor = DEFAULT_EXTRACTOR) -> dict[str, int]:
    counts = {"early": 0, "full": 0, "correct": 0}
    for idx in order:
        inst = data[idx]
        agenda, early = _beam_steps(inst.ctx, model, k, extractor, gold=inst.actions)
        if early is not None:
            perceptron_update(model, inst.ctx, inst.actions[:early + 1],
                              agenda[0].actions(), extractor)
            counts["early"] += 1
        elif not agenda[0].gold:
            perceptron_update(model, inst.ctx, inst.actions, agenda[0].actions(), extractor)
            counts["full"] += 1
        else:
            counts["correct"] += 1
        model.tick()
    return counts


def train(corpus: Sequence[tuple[DeepGraph, GoldRealization]], mode: str = JOINT,
          k: int = DEFAULT_BEAM, iterations: int = DEFAULT_ITERATIONS, seed: int = DEFAULT_SEED,
          lexicon: Lexicon | None = None, posmap: PosMap | None = None,
          extractor: Extractor = DEFAULT_EXTRACTOR,
          on_iteration: Callable[[int, Model, dict], None] | None = None,
          average: bool = True) -> Model:
    """Averaged perceptron with early update over beam search.

    ``on_iteration(it, model, counts)`` is called after each pass with the
    un-averaged model (useful for dev curves).
    """
    if k < 1 or iterations < 1:
        raise ValueError("beam size and iteration count must be positive")
    lexicon = lexicon if lexicon is not None else Lexicon.bundled()
    if posmap is None:
        posmap = PosMap.from_corpus(corpus, lexicon)
    data = prepare(corpus, mode, lexicon, posmap)
    model = Model(mode)
    model.meta["pos"] = posmap.lines()
    rng = random.Random(seed)
    order = list(range(len(data)))
    for it in range(1, iterations + 1):
        rng.shuffle(order)
        counts = train_epoch(model, data, order, k, extractor)
        log.info("iteration %d: %s", it, counts)
        if on_iteration is not None:
            on_iteration(it, model, counts)
    if average:
        finalize_average(model)
    return model


def finalize_average(model: Model) -> Model:
    return model.finalize()


def averaged_copy(model: Model) -> Model:
    """Averaged snapshot of a model that is still being trained."""
    out = Model(model.mode)
    out.meta = dict(model.meta)
    for f, row in model.weights.items():
        out.weights[f] = {k: model.averaged_weight(f, k) for k in row}
    out.averaged = True
    return out

