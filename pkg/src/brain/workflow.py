"""Series-parallel workflow graphs: node model, validator, decomposer.

A workflow graph has a single entry, a single exit, no cycles, and properly
nested split/join gateways. The decomposer re-derives that nesting (sequence /
parallel / choice fragments); it backs both the structural validator and the
BPEL generator, so a graph is valid exactly when it is generatable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import InvalidWorkflow
from .expr import Expr, expr_to_json

AND_SPLIT = "AND_SPLIT"
AND_JOIN = "AND_JOIN"
XOR_SPLIT = "XOR_SPLIT"
XOR_JOIN = "XOR_JOIN"
SPLIT_KINDS = (AND_SPLIT, XOR_SPLIT)
JOIN_KINDS = (AND_JOIN, XOR_JOIN)


@dataclass(frozen=True)
class TaskNode:
    id: str


@dataclass(frozen=True)
class FaultNode:
    """Terminal outcome of a failed constraint check; execution stops here."""
    id: str


@dataclass(frozen=True)
class Gateway:
    id: str
    kind: str
    # For XOR splits: one guard per out-edge, in edge order; None marks the
    # default branch. guard_rule_ids names the constraint rule each guard came
    # from (drives ruleEval trace events).
    guards: Optional[tuple[Optional[Expr], ...]] = None
    guard_rule_ids: Optional[tuple[Optional[str], ...]] = None


Node = Union[TaskNode, FaultNode, Gateway]


@dataclass
class WorkflowGraph:
    nodes: dict[str, Node] = field(default_factory=dict)
    edges: list[tuple[str, str]] = field(default_factory=list)
    entry: str = ""
    exit: str = ""

    def successors(self, node_id: str) -> list[str]:
        return [dst for src, dst in self.edges if src == node_id]

    def predecessors(self, node_id: str) -> list[str]:
        return [src for src, dst in self.edges if dst == node_id]

    def task_ids(self) -> list[str]:
        return [n.id for n in self.nodes.values() if isinstance(n, TaskNode)]


def copy_graph(wf: WorkflowGraph) -> WorkflowGraph:
    return WorkflowGraph(nodes=dict(wf.nodes), edges=list(wf.edges), entry=wf.entry, exit=wf.exit)


def _adjacency(wf: WorkflowGraph):
    adj: dict[str, list[str]] = {n: [] for n in wf.nodes}
    rev: dict[str, list[str]] = {n: [] for n in wf.nodes}
    for src, dst in wf.edges:
        if src not in wf.nodes or dst not in wf.nodes:
            raise InvalidWorkflow(f"edge ({src!r}, {dst!r}) references an unknown node")
        adj[src].append(dst)
        rev[dst].append(src)
    return adj, rev


# -- fragment tree -------------------------------------------------------

@dataclass
class Atom:
    node_id: str


@dataclass
class Seq:
    items: list


@dataclass
class Par:
    split_id: str
    join_id: str
    branches: list[Seq]


@dataclass
class Choice:
    split_id: str
    join_id: str
    guards: tuple[Optional[Expr], ...]
    guard_rule_ids: tuple[Optional[str], ...]
    branches: list[Seq]


Fragment = Union[Atom, Seq, Par, Choice]


def _matching_join(wf: WorkflowGraph, adj, split_id: str) -> str:
    outs = adj[split_id]
    if not outs:
        raise InvalidWorkflow(f"split {split_id!r} has no branches")
    cur = outs[0]
    depth = 0
    for _ in range(len(wf.nodes) * (len(wf.edges) + 1) + 1):
        node = wf.nodes[cur]
        if isinstance(node, Gateway) and node.kind in SPLIT_KINDS:
            depth += 1
        elif isinstance(node, Gateway) and node.kind in JOIN_KINDS:
            if depth == 0:
                return cur
            depth -= 1
        nxt = adj[cur]
        if not nxt:
            raise InvalidWorkflow(f"split {split_id!r} has no matching join")
        cur = nxt[0]
    raise InvalidWorkflow(f"split {split_id!r} has no matching join (walk did not terminate)")


def _parse_chain(wf: WorkflowGraph, adj, rev, start: str, stop: Optional[str]) -> Seq:
    items: list = []
    cur = start
    while cur != stop:
        node = wf.nodes[cur]
        if isinstance(node, (TaskNode, FaultNode)):
            items.append(Atom(cur))
            nxt = adj[cur]
        elif isinstance(node, Gateway) and node.kind in SPLIT_KINDS:
            join_id = _matching_join(wf, adj, cur)
            join = wf.nodes[join_id]
            expected = AND_JOIN if node.kind == AND_SPLIT else XOR_JOIN
            if not isinstance(join, Gateway) or join.kind != expected:
                raise InvalidWorkflow(f"split {cur!r} pairs with {join_id!r} of mismatched kind")
            branches = [_parse_chain(wf, adj, rev, succ, join_id) for succ in adj[cur]]
            if len(rev[join_id]) != len(branches):
                raise InvalidWorkflow(
                    f"join {join_id!r} has in-degree {len(rev[join_id])} but split {cur!r} has "
                    f"{len(branches)} branches"
                )
            if node.kind == AND_SPLIT:
                items.append(Par(cur, join_id, branches))
            else:
                guards = node.guards if node.guards is not None else (None,) * len(branches)
                rule_ids = node.guard_rule_ids if node.guard_rule_ids is not None else (None,) * len(branches)
                if len(guards) != len(branches) or len(rule_ids) != len(branches):
                    raise InvalidWorkflow(f"split {cur!r}: guard count does not match branch count")
                items.append(Choice(cur, join_id, guards, rule_ids, branches))
            nxt = adj[join_id]
        else:
            raise InvalidWorkflow(f"unbalanced join gateway {cur!r}")
        if not nxt:
            if stop is not None:
                raise InvalidWorkflow(f"chain from {start!r} dead-ends before reaching {stop!r}")
            break
        if len(nxt) > 1:
            raise InvalidWorkflow(f"node {items[-1]!r} feeds multiple successors outside a split")
        cur = nxt[0]
    return Seq(items)


def decompose(wf: WorkflowGraph) -> Seq:
    """Parse the graph into its nesting structure; raises InvalidWorkflow if not series-parallel."""
    adj, rev = _adjacency(wf)
    return _parse_chain(wf, adj, rev, wf.entry, None)


def _check_acyclic(wf: WorkflowGraph, adj) -> None:
    indeg = {n: 0 for n in wf.nodes}
    for _, dst in wf.edges:
        indeg[dst] += 1
    queue = [n for n, d in indeg.items() if d == 0]
    seen = 0
    while queue:
        cur = queue.pop()
        seen += 1
        for nxt in adj[cur]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                queue.append(nxt)
    if seen != len(wf.nodes):
        raise InvalidWorkflow("workflow graph contains a cycle")


def validate_workflow(wf: WorkflowGraph) -> None:
    """Raise InvalidWorkflow unless every structural invariant holds."""
    if not wf.nodes:
        raise InvalidWorkflow("workflow graph is empty")
    if wf.entry not in wf.nodes or wf.exit not in wf.nodes:
        raise InvalidWorkflow("entry/exit must be nodes of the graph")
    adj, rev = _adjacency(wf)
    if rev[wf.entry]:
        raise InvalidWorkflow(f"entry {wf.entry!r} has incoming edges")
    if adj[wf.exit]:
        raise InvalidWorkflow(f"exit {wf.exit!r} has outgoing edges")
    for node_id in wf.nodes:
        if node_id != wf.entry and not rev[node_id]:
            raise InvalidWorkflow(f"node {node_id!r} is unreachable (no incoming edges)")
        if node_id != wf.exit and not adj[node_id]:
            raise InvalidWorkflow(f"node {node_id!r} cannot reach the exit (no outgoing edges)")
    _check_acyclic(wf, adj)
    for node_id, node in wf.nodes.items():
        if isinstance(node, Gateway):
            if node.kind not in SPLIT_KINDS + JOIN_KINDS:
                raise InvalidWorkflow(f"gateway {node_id!r} has unknown kind {node.kind!r}")
            if node.kind == XOR_SPLIT:
                if node.guards is not None and len(node.guards) != len(adj[node_id]):
                    raise InvalidWorkflow(f"gateway {node_id!r}: guards do not match out-edges")
            elif node.guards is not None:
                raise InvalidWorkflow(f"gateway {node_id!r}: only XOR splits carry guards")
    # reachability both ways, then nesting via the decomposer
    _check_connected(wf, adj, rev)
    decompose(wf)


def _check_connected(wf: WorkflowGraph, adj, rev) -> None:
    def flood(start, neighbors):
        seen = {start}
        stack = [start]
        while stack:
            for nxt in neighbors[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return seen

    from_entry = flood(wf.entry, adj)
    if from_entry != set(wf.nodes):
        missing = sorted(set(wf.nodes) - from_entry)
        raise InvalidWorkflow(f"nodes unreachable from entry: {missing}")
    to_exit = flood(wf.exit, rev)
    if to_exit != set(wf.nodes):
        missing = sorted(set(wf.nodes) - to_exit)
        raise InvalidWorkflow(f"nodes that cannot reach exit: {missing}")


def node_levels(wf: WorkflowGraph) -> dict[str, int]:
    """Longest-path depth of every node from the entry (diagram columns)."""
    adj, _ = _adjacency(wf)
    indeg = {n: 0 for n in wf.nodes}
    for _, dst in wf.edges:
        indeg[dst] += 1
    level = {n: 0 for n in wf.nodes}
    queue = [n for n, d in indeg.items() if d == 0]
    while queue:
        cur = queue.pop()
        for nxt in adj[cur]:
            level[nxt] = max(level[nxt], level[cur] + 1)
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                queue.append(nxt)
    return level


def workflow_to_json(wf: WorkflowGraph) -> dict:
    levels = node_levels(wf)
    nodes = []
    for node_id, node in wf.nodes.items():
        entry: dict = {"id": node_id, "level": levels[node_id]}
        if isinstance(node, TaskNode):
            entry["type"] = "task"
        elif isinstance(node, FaultNode):
            entry["type"] = "fault"
        else:
            entry["type"] = "gateway"
            entry["kind"] = node.kind
            if node.guards is not None:
                entry["guards"] = [None if g is None else expr_to_json(g) for g in node.guards]
            if node.guard_rule_ids is not None:
                entry["guardRuleIds"] = list(node.guard_rule_ids)
        nodes.append(entry)
    return {
        "nodes": nodes,
        "edges": [[src, dst] for src, dst in wf.edges],
        "entry": wf.entry,
        "exit": wf.exit,
    }
