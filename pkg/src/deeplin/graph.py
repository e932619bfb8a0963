"""Deep and shallow input graphs, gold realizations, and shared-task-style corpus I/O.

A ``.deep`` corpus holds one instance block per sentence, blocks separated by
a blank line.  Each row is ``SEM ID PID LEMMA ATTR LEXEME`` (tab separated).
A row that repeats an already defined ID with empty LEMMA/ATTR/LEXEME adds a
second parent to that node (reentrancy).

A ``.gold`` file holds one line per instance with space separated tokens
``pos|form|src|head|label``.
"""

from __future__ import annotations

import enum
import itertools
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

ATTR_KEYS = frozenset({"num", "tense", "partic", "bracket", "quote"})
FW_TAGS = ("TO", "THAT", "COMMA")
FW_LEMMA = {"TO": "to", "THAT": "that", "COMMA": ","}
ROOT_ID = 0
EMPTY = "_"


class CorpusError(ValueError):
    """Base class for malformed corpus input."""


class ParseError(CorpusError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GraphError(CorpusError):
    """Semantically invalid graph or gold realization."""


@dataclass(frozen=True)
class Node:
    id: int
    lemma: str
    attrs: dict = field(default_factory=dict)
    lexeme: str | None = None
    # set on function-word nodes synthesized into a shallow graph
    inserted: str | None = None

    def __post_init__(self):
        if self.id < 1:
            raise GraphError(f"node id must be >= 1, got {self.id}")
        if not self.lemma:
            raise GraphError(f"node {self.id} has an empty lemma")
        bad = set(self.attrs) - ATTR_KEYS
        if bad:
            raise GraphError(f"node {self.id}: unknown attribute(s) {sorted(bad)}")


class DeepGraph:
    """Unordered labeled graph over lemma nodes; a child may have several parents.

    Arcs are ``(head, child, label)`` triples, ``head == 0`` being the virtual
    root.  Adjacency, descendant and sibling tables are computed once at
    construction since the decoder queries them on every state.
    """

    def __init__(self, nodes: Iterable[Node], arcs: Iterable[tuple[int, int, str]]):
        self.nodes: dict[int, Node] = {n.id: n for n in sorted(nodes, key=lambda n: n.id)}
        self.arcs: tuple[tuple[int, int, str], ...] = tuple(sorted(set(arcs)))
        self._validate()
        self._index()

    def _validate(self):
        if not self.nodes:
            raise GraphError("graph has no nodes")
        roots = [a for a in self.arcs if a[0] == ROOT_ID]
        if len(roots) != 1:
            raise GraphError(f"expected exactly one root arc, found {len(roots)}")
        for h, c, _ in self.arcs:
            if h == c:
                raise GraphError(f"self-loop on node {h}")
            if c not in self.nodes or (h != ROOT_ID and h not in self.nodes):
                raise GraphError(f"arc {h}->{c} refers to an unknown node")
        undirected: dict[int, set[int]] = {i: set() for i in self.nodes}
        for h, c, _ in self.arcs:
            if h != ROOT_ID:
                undirected[h].add(c)
                undirected[c].add(h)
        start = next(iter(self.nodes))
        seen = {start}
        todo = [start]
        while todo:
            for nb in undirected[todo.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    todo.append(nb)
        if len(seen) != len(self.nodes):
            raise GraphError("graph is not connected")

    def _index(self):
        children: dict[int, list[int]] = {i: [] for i in self.nodes}
        parents: dict[int, list[int]] = {i: [] for i in self.nodes}
        labels: dict[tuple[int, int], str] = {}
        for h, c, lab in self.arcs:
            labels.setdefault((h, c), lab)
            if h == ROOT_ID:
                self.root = c
                continue
            if c not in children[h]:
                children[h].append(c)
                parents[c].append(h)
        self.children = {i: tuple(sorted(v)) for i, v in children.items()}
        self.parents = {i: tuple(sorted(v)) for i, v in parents.items()}
        self.labels = labels
        self.descendants = {i: self._reach(i, self.children) for i in self.nodes}
        self.ancestors = {i: self._reach(i, self.parents) for i in self.nodes}
        self.siblings = {}
        for i in self.nodes:
            sib = set()
            for p in self.parents[i]:
                sib.update(self.children[p])
            sib.discard(i)
            self.siblings[i] = frozenset(sib)

    @staticmethod
    def _reach(start: int, adj: dict[int, tuple[int, ...]]) -> frozenset[int]:
        seen: set[int] = set()
        todo = deque(adj[start])
        while todo:
            x = todo.popleft()
            if x not in seen:
                seen.add(x)
                todo.extend(adj[x])
        seen.discard(start)
        return frozenset(seen)

    def label(self, head: int, child: int) -> str:
        return self.labels[(head, child)]

    def has_arc(self, head: int, child: int) -> bool:
        return (head, child) in self.labels

    def is_sibling(self, a: int, b: int) -> bool:
        return b in self.siblings[a]

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def is_shallow(self) -> bool:
        return any(n.inserted for n in self.nodes.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, DeepGraph):
            return NotImplemented
        return self.nodes == other.nodes and set(self.arcs) == set(other.arcs)

    def __repr__(self) -> str:
        return f"DeepGraph({len(self.nodes)} nodes, {len(self.arcs)} arcs)"


# ---------------------------------------------------------------------------
# .deep reading / writing

def _parse_attrs(text: str, lineno: int) -> dict:
    attrs = {}
    if text in ("", EMPTY):
        return attrs
    for item in text.split("|"):
        key, sep, value = item.partition("=")
        key = key.strip()
        if key not in ATTR_KEYS:
            raise ParseError(f"unknown attribute {key!r}", lineno)
        attrs[key] = value.strip() if sep else "1"
    return attrs


def _format_attrs(attrs: dict) -> str:
    if not attrs:
        return EMPTY
    return "|".join(f"{k}={attrs[k]}" for k in sorted(attrs))


def parse_instance(text: str, first_line: int = 1) -> DeepGraph:
    """Parse one instance block into a :class:`DeepGraph`.

    ``first_line`` is the corpus line number of the block's first row and is
    only used to make error messages point at the right place.
    """
    primary: dict[int, Node] = {}
    extra: list[tuple[int, int, str, int]] = []
    arcs: list[tuple[int, int, str]] = []
    for offset, raw in enumerate(text.splitlines()):
        lineno = first_line + offset
        if not raw.strip():
            continue
        cols = raw.rstrip("\r\n").split("\t")
        if len(cols) != 6:
            raise ParseError(f"expected 6 tab-separated columns, got {len(cols)}", lineno)
        sem, sid, spid, lemma, attr, lexeme = (c.strip() for c in cols)
        try:
            nid, pid = int(sid), int(spid)
        except ValueError:
            raise ParseError(f"non-integer ID/PID {sid!r}/{spid!r}", lineno) from None
        if not sem:
            raise ParseError("empty semantic label", lineno)
        lemma = "" if lemma == EMPTY else lemma
        if lemma:
            try:
                node = Node(nid, lemma, _parse_attrs(attr, lineno),
                            None if lexeme in ("", EMPTY) else lexeme)
            except GraphError as exc:
                raise ParseError(str(exc), lineno) from None
            old = primary.get(nid)
            if old is not None and old.lemma != lemma:
                raise GraphError(f"line {lineno}: node {nid} redefined as {lemma!r} (was {old.lemma!r})")
            if old is None:
                primary[nid] = node
            arcs.append((pid, nid, sem))
        else:
            extra.append((pid, nid, sem, lineno))
    for pid, nid, sem, lineno in extra:
        if nid not in primary:
            raise GraphError(f"line {lineno}: reentrancy row for undefined node {nid}")
        arcs.append((pid, nid, sem))
    for pid, nid, _ in arcs:
        if pid != ROOT_ID and pid not in primary:
            raise GraphError(f"dangling parent id {pid} (child {nid})")
    return DeepGraph(primary.values(), arcs)


def serialize_instance(g: DeepGraph) -> str:
    """Inverse of :func:`parse_instance` (up to row order)."""
    incoming: dict[int, list[tuple[int, str]]] = {i: [] for i in g.nodes}
    for h, c, lab in g.arcs:
        incoming[c].append((h, lab))
    rows = []
    for nid, node in g.nodes.items():
        arcs = sorted(incoming[nid])
        head, lab = arcs[0]
        rows.append("\t".join([lab, str(nid), str(head), node.lemma,
                               _format_attrs(node.attrs), node.lexeme or EMPTY]))
        for head, lab in arcs[1:]:
            rows.append("\t".join([lab, str(nid), str(head), EMPTY, EMPTY, EMPTY]))
    return "\n".join(rows) + "\n"


def iter_blocks(text: str) -> Iterator[tuple[int, str]]:
    """Yield ``(first_line, block_text)`` for every blank-line separated block."""
    block: list[str] = []
    start = 1
    for lineno, line in enumerate(text.splitlines(), 1):
        if line.strip():
            if not block:
                start = lineno
            block.append(line)
        elif block:
            yield start, "\n".join(block)
            block = []
    if block:
        yield start, "\n".join(block)


def read_deep(path: str | Path) -> list[DeepGraph]:
    text = Path(path).read_text(encoding="utf-8")
    return [parse_instance(block, start) for start, block in iter_blocks(text)]


def write_deep(path: str | Path, graphs: Iterable[DeepGraph]) -> None:
    Path(path).write_text("\n".join(serialize_instance(g) for g in graphs), encoding="utf-8")


# ---------------------------------------------------------------------------
# gold realizations

@dataclass(frozen=True)
class Token:
    form: str
    src: int | str  # node id, or one of FW_TAGS
    head: int  # 1-based surface position, 0 for the root
    label: str

    @property
    def is_fw(self) -> bool:
        return isinstance(self.src, str)


@dataclass(frozen=True)
class GoldRealization:
    """Ordered tokens with a dependency tree over surface positions (1-based)."""

    tokens: tuple[Token, ...]

    def __post_init__(self):
        n = len(self.tokens)
        roots = [i for i, t in enumerate(self.tokens, 1) if t.head == 0]
        if len(roots) != 1:
            raise GraphError(f"tree needs exactly one root, found {len(roots)}")
        for i, t in enumerate(self.tokens, 1):
            if not 0 <= t.head <= n or t.head == i:
                raise GraphError(f"token {i} has invalid head {t.head}")
        # every position must reach the root
        for i in range(1, n + 1):
            seen = set()
            j = i
            while j != 0:
                if j in seen:
                    raise GraphError(f"cycle through token {i}")
                seen.add(j)
                j = self.tokens[j - 1].head

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def words(self) -> list[str]:
        return [t.form for t in self.tokens]

    @property
    def arcs(self) -> set[tuple[int, int, str]]:
        return {(t.head, i, t.label) for i, t in enumerate(self.tokens, 1)}

    def dependents(self, pos: int) -> list[int]:
        return [i for i, t in enumerate(self.tokens, 1) if t.head == pos]

    def position_of(self) -> dict[int, int]:
        """Map graph node id -> surface position."""
        return {t.src: i for i, t in enumerate(self.tokens, 1) if not t.is_fw}

    def check_against(self, g: DeepGraph) -> None:
        srcs = [t.src for t in self.tokens if not t.is_fw]
        if sorted(srcs) != sorted(g.nodes):
            raise GraphError("gold tokens do not cover each graph node exactly once")
        for t in self.tokens:
            if t.is_fw and t.src not in FW_TAGS:
                raise GraphError(f"unknown function-word tag {t.src!r}")


def format_gold(gold: GoldRealization) -> str:
    return " ".join(f"{i}|{t.form}|{t.src}|{t.head}|{t.label}"
                    for i, t in enumerate(gold.tokens, 1))


def parse_gold(line: str, lineno: int | None = None) -> GoldRealization:
    tokens = []
    for k, item in enumerate(line.split(), 1):
        left, sep, rest = item.partition("|")
        parts = rest.rsplit("|", 3)
        if not sep or len(parts) != 4:
            raise ParseError(f"malformed gold token {item!r}", lineno)
        form, src, head, label = parts
        try:
            if int(left) != k:
                raise ParseError(f"token position {left} out of sequence", lineno)
            head_i = int(head)
        except ValueError:
            raise ParseError(f"non-integer position in {item!r}", lineno) from None
        src_v: int | str = src if src in FW_TAGS else int(src) if src.isdigit() else src
        if isinstance(src_v, str) and src_v not in FW_TAGS:
            raise ParseError(f"bad token source {src!r}", lineno)
        tokens.append(Token(form, src_v, head_i, label))
    return GoldRealization(tuple(tokens))


def read_gold(path: str | Path) -> list[GoldRealization]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [parse_gold(line, i) for i, line in enumerate(lines, 1) if line.strip()]


def write_gold(path: str | Path, golds: Iterable[GoldRealization]) -> None:
    Path(path).write_text("".join(format_gold(g) + "\n" for g in golds), encoding="utf-8")


# ---------------------------------------------------------------------------
# filtering

def is_projective(gold: GoldRealization) -> bool:
    spans = [tuple(sorted((t.head, i))) for i, t in enumerate(gold.tokens, 1)]
    for (a1, b1), (a2, b2) in itertools.combinations(spans, 2):
        if a1 < a2 < b1 < b2 or a2 < a1 < b2 < b1:
            return False
    return True


class Verdict(enum.Enum):
    KEEP = "Keep"
    NON_PROJECTIVE = "NonProjective"
    EDGE_MISMATCH = "EdgeMismatch"
    MULTI_CHILD_FW = "MultiChildFW"
    DETACHED_FW = "DetachedFW"

    @property
    def kept(self) -> bool:
        return self is Verdict.KEEP

    def __str__(self) -> str:
        return self.value if self.kept else f"Discard({self.value})"


def filter_instance(g: DeepGraph, gold: GoldRealization) -> Verdict:
    if not is_projective(gold):
        return Verdict.NON_PROJECTIVE
    toks = gold.tokens
    for i, t in enumerate(toks, 1):
        if t.head == 0 and not t.is_fw and t.src != g.root:
            return Verdict.EDGE_MISMATCH
        if t.head and not t.is_fw and not toks[t.head - 1].is_fw:
            if not g.has_arc(toks[t.head - 1].src, t.src):
                return Verdict.EDGE_MISMATCH
    for i, t in enumerate(toks, 1):
        if t.src not in ("TO", "THAT"):
            continue
        deps = gold.dependents(i)
        if len(deps) > 1:
            return Verdict.MULTI_CHILD_FW
        if not deps or t.head == 0:
            return Verdict.DETACHED_FW
        head, child = toks[t.head - 1], toks[deps[0] - 1]
        if head.is_fw or child.is_fw or not g.has_arc(head.src, child.src):
            return Verdict.DETACHED_FW
    return Verdict.KEEP


def load_corpus(deep_path: str | Path, gold_path: str | Path) -> list[tuple[DeepGraph, GoldRealization]]:
    graphs = read_deep(deep_path)
    golds = read_gold(gold_path)
    if len(graphs) != len(golds):
        raise CorpusError(f"{deep_path} has {len(graphs)} instances but {gold_path} has {len(golds)}")
    for i, (g, gold) in enumerate(zip(graphs, golds), 1):
        try:
            gold.check_against(g)
        except GraphError as exc:
            raise GraphError(f"instance {i}: {exc}") from None
    return list(zip(graphs, golds))
