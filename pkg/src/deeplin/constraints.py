"""Legal actions for a state: which Shifts/arcs can still lead to a tree of the input graph.

The shallow mask follows the classic graph-linearization procedure: when the
stack top still owns unshifted children it must collect them first; otherwise
the relation between the top two items (arc, descendant, sibling, nothing)
decides which arc actions and which Shifts are allowed.  Joint mode expands
each Shift per candidate inflection and adds Insert/SplitArc/Idle.
"""

from __future__ import annotations

from collections import deque

from .transition import (IDLE, INSERT, JOINT, LEFT_ARC, RIGHT_ARC, SPLIT_THAT, SPLIT_TO, Action,
                         Shift, State)

MAX_CONSECUTIVE_INSERTS = 3


def direct_children(s: State, i: int, on_stack: set[int] | None = None) -> set[int]:
    """Children of ``i`` that no other parent can still claim."""
    g = s.ctx.graph
    if on_stack is None:
        on_stack = {it.node for it in s.stack}
    dc = set()
    for k in g.children[i]:
        parents = g.parents[k]
        if len(parents) == 1:
            dc.add(k)
            continue
        for m in parents:
            if m in s.lc or m == i:
                continue
            if m in s.rho or m in on_stack:
                break
        else:
            dc.add(k)
    return dc


def shift_subtree(s: State, head: int) -> set[int]:
    """``head`` (if unshifted) and every unshifted node reachable through unshifted children."""
    g, rho = s.ctx.graph, s.rho
    out = {head} if head in rho else set()
    q = deque([head])
    while q:
        front = q.popleft()
        for m in g.children[front]:
            if m in rho and m not in out:
                out.add(m)
                q.append(m)
    return out


def process_descendant(s: State, i: int, j: int) -> set[int]:
    g = s.ctx.graph
    out: set[int] = set()
    for p in g.parents[i]:
        if p in s.rho and p in g.descendants[j]:
            out |= shift_subtree(s, p)
    return out


def inflection_points(s: State, i: int, j: int) -> list[int]:
    """Unshifted parents of ``j`` that can head (or dominate) ``i`` without stranding the stack.

    A candidate is valid if, walking down the stack below ``j``, each element
    either dominates it, is dominated by it, or shares an unshifted parent
    that is itself valid one level deeper.  Running off the bottom of the
    stack means nothing below can be stranded.
    """
    g = s.ctx.graph
    rho = s.rho
    stack = s.stack
    memo: dict[tuple[int, int], bool] = {}

    def valid(x: int, idx: int) -> bool:
        if idx < 0:
            return True
        key = (x, idx)
        if key in memo:
            return memo[key]
        memo[key] = False
        e = stack[idx].node
        ok = (x in g.descendants[e] and e not in s.lc) or x in _open_ancestors(g, e, rho)
        if not ok:
            above = _open_ancestors(g, x, rho)
            for y in g.parents[e]:
                if y in above and valid(y, idx - 1):
                    ok = True
                    break
        memo[key] = ok
        return ok

    parents_i = set(g.parents[i])
    anc_i = g.ancestors[i]
    out = []
    for x in g.parents[j]:
        if x in rho and (x in parents_i or x in anc_i) and valid(x, len(stack) - 3):
            out.append(x)
    return out


def related_sibling(s: State, i: int, j: int) -> bool:
    """Some parent of ``j`` is a parent or an ancestor of ``i``."""
    g = s.ctx.graph
    anc_i = g.ancestors[i]
    return any(x in anc_i for x in g.parents[j])


def _open_ancestors(g, e: int, rho) -> set[int]:
    """Ancestors of ``e`` reachable upward through unshifted nodes only."""
    out: set[int] = set()
    todo = [p for p in g.parents[e] if p in rho]
    while todo:
        p = todo.pop()
        if p not in out:
            out.add(p)
            todo.extend(q for q in g.parents[p] if q in rho)
    return out


def process_sibling(s: State, i: int, j: int) -> set[int]:
    g = s.ctx.graph
    out: set[int] = set()
    for x in inflection_points(s, i, j):
        if i in g.children[x]:
            out |= shift_subtree(s, x)
        else:
            for p in g.parents[i]:
                if p in s.rho and p in g.descendants[x]:
                    out |= shift_subtree(s, p)
    return out


def shift_parent_and_siblings(s: State, i: int) -> set[int]:
    out: set[int] = set()
    for p in s.ctx.graph.parents[i]:
        if p in s.rho:
            out |= shift_subtree(s, p)
    return out


def shallow_options(s: State) -> tuple[set[int], bool, bool]:
    """(shiftable nodes, RightArc allowed, LeftArc allowed) ignoring function words."""
    g = s.ctx.graph
    if not s.stack:
        return set(s.rho), False, False
    i = s.stack[-1].node
    on_stack = {it.node for it in s.stack}
    shifts: set[int] = set()
    ra = la = False
    if direct_children(s, i, on_stack) & s.rho:
        return shift_subtree(s, i), False, False
    if i not in s.lc:
        shifts |= shift_subtree(s, i)
    if len(s.stack) == 1:
        shifts |= shift_parent_and_siblings(s, i)
        return shifts, False, False
    j = s.stack[-2].node
    desc = i in g.descendants[j]
    sib = related_sibling(s, i, j)
    if g.has_arc(j, i) and j not in s.lc:
        ra = True
        if desc:
            shifts |= process_descendant(s, i, j)
        if sib:
            shifts |= process_sibling(s, i, j)
    elif g.has_arc(i, j):
        la = True
        if sib:
            shifts |= process_sibling(s, i, j)
    else:
        if desc:
            shifts |= process_descendant(s, i, j)
        if sib:
            shifts |= process_sibling(s, i, j)
    shifts = {x for x in shifts if not blocks_waiting(s, x)}
    if ra and not viable_after_reduce(s, i, j):
        ra = False
    if la and not viable_after_reduce(s, j, i):
        la = False
    return shifts, ra, la


def blocks_waiting(s: State, x: int) -> bool:
    """Would shifting ``x`` bury a stack node that still waits for a child only it can take?

    Everything pushed between such a node ``e`` and that child must end up in
    the subtree of ``e``, so ``x`` has to be a descendant of ``e``.  Likewise
    everything above an item waiting for its split head ends up below that head.
    """
    g = s.ctx.graph
    attached = None
    for it in s.stack:
        e = it.node
        if it.lead is not None and x not in g.descendants[it.lead[2]]:
            return True
        if x in g.descendants[e]:
            continue
        if attached is None:
            attached = {c for _, c, _ in s.arcs}
        for c in g.children[e]:
            if c in s.rho and all(p == e or p in attached for p in g.parents[c]):
                return True
    return False


def viable_after_reduce(s: State, removed: int, head: int) -> bool:
    """Can every unattached node still find a head after ``head`` takes ``removed``?

    A reduced node takes no more dependents, and a node with a left
    dependent takes no more right dependents.  Unshifted nodes can attach to
    unshifted parents or to open stack nodes without a left dependent; stack
    nodes can also attach to open parents above them.
    """
    g = s.ctx.graph
    attached = {c for _, c, _ in s.arcs}
    attached.add(removed)
    left_closed = set(s.lc)
    if head == s.stack[-1].node and removed == s.stack[-2].node:
        left_closed.add(head)
    stack = [it.node for it in s.stack if it.node != removed]
    depth = {n: k for k, n in enumerate(stack)}
    # a stack node can still take right dependents only if everything above it
    # can be folded into its subtree
    reachable = set()
    for k, n in enumerate(stack):
        if n not in left_closed and all(q in g.descendants[n] for q in stack[k + 1:]):
            reachable.add(n)
    for c in g.nodes:
        if c in attached or not g.parents[c]:
            continue
        ok = False
        for p in g.parents[c]:
            if p in attached:
                continue
            if p in s.rho:
                ok = True
            elif c in depth and depth[p] > depth[c]:
                ok = True
            elif p in reachable:
                ok = True
            if ok:
                break
        if not ok:
            return False
    return True


def legal_actions_shallow(s: State) -> list[Action]:
    if s.complete:
        return []
    shifts, ra, la = shallow_options(s)
    ctx = s.ctx
    out = [Shift(k, pos, form) for k in sorted(shifts) for form, pos in ctx.shift_options(k)]
    if la:
        out.append(LEFT_ARC)
    if ra:
        out.append(RIGHT_ARC)
    return out


def split_targets(s: State) -> set[int]:
    """Nodes the Shift after a SplitArc may pick: an unshifted child of the top or one of its descendants."""
    g, rho = s.ctx.graph, s.rho
    out: set[int] = set()
    for c in g.children[s.stack[-1].node]:
        if c in rho:
            out.add(c)
            out |= g.descendants[c] & rho
    return out


def legal_actions_joint(s: State) -> list[Action]:
    ctx = s.ctx
    if s.complete:
        return [IDLE] if s.step < ctx.max_steps else []
    shifts, ra, la = shallow_options(s)
    if s.pending is not None:
        shifts &= split_targets(s)
        ra = la = False
    elif len(s.stack) >= 2:
        s1, s0 = s.stack[-2], s.stack[-1]
        if s0.lead is not None:
            la = False
            if s0.lead[2] != s1.node:
                ra = False
        if s1.lead is not None and s1.lead[2] not in ctx.graph.ancestors[s0.node]:
            la = False
    out = [Shift(k, pos, form) for k in sorted(shifts) for form, pos in ctx.shift_options(k)]
    if la:
        out.append(LEFT_ARC)
    if ra:
        out.append(RIGHT_ARC)
    if s.pending is not None or not s.stack or not s.rho:
        return out
    need = 2 * len(s.rho) + len(s.stack) - 1
    if s.step + 1 + need > ctx.max_steps:
        return out
    i = s.stack[-1].node
    if i not in s.lc and shifts & split_targets(s):
        out.append(SPLIT_TO)
        out.append(SPLIT_THAT)
    if s.ins_run < MAX_CONSECUTIVE_INSERTS:
        out.append(INSERT)
    return out


def legal_actions(s: State) -> list[Action]:
    if s.ctx.mode == JOINT:
        return legal_actions_joint(s)
    return legal_actions_shallow(s)
