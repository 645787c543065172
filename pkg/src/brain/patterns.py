"""Workflow pattern templates and their instantiation into graph fragments.

The catalog mirrors a conventional pattern repository: sequence, parallel
split/join, exclusive choice/merge, loop. The first three instantiate into
series-parallel graph fragments; LOOP stays a catalog entry only, because the
workflow graph is required to be acyclic and the generated activity subset has
no loop construct.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import InvalidWorkflow, UnsupportedPattern
from .expr import Expr
from .workflow import (
    AND_JOIN,
    AND_SPLIT,
    XOR_JOIN,
    XOR_SPLIT,
    Gateway,
    TaskNode,
    WorkflowGraph,
)

SEQUENCE = "SEQUENCE"
AND_SPLIT_JOIN = "AND_SPLIT_JOIN"
XOR_SPLIT_JOIN = "XOR_SPLIT_JOIN"
LOOP = "LOOP"


@dataclass(frozen=True)
class PatternTemplate:
    kind: str
    # XOR: one guard per branch (None allowed once, the default branch).
    # LOOP: exactly one guard, the repeat condition.
    guards: tuple[Optional[Expr], ...] = ()

    def __post_init__(self):
        if self.kind not in (SEQUENCE, AND_SPLIT_JOIN, XOR_SPLIT_JOIN, LOOP):
            raise UnsupportedPattern(f"unknown pattern kind {self.kind!r}")
        if self.kind == LOOP:
            if len(self.guards) != 1 or self.guards[0] is None:
                raise InvalidWorkflow("LOOP template requires exactly one guard expression")
        if self.kind == XOR_SPLIT_JOIN:
            defaults = [g for g in self.guards if g is None]
            if len(defaults) > 1:
                raise InvalidWorkflow("XOR template allows at most one default branch")


PATTERN_CATALOG = (
    PatternTemplate(SEQUENCE),
    PatternTemplate(AND_SPLIT_JOIN),
    PatternTemplate(XOR_SPLIT_JOIN, guards=(None,)),
)
"""Built-in repository entries; XOR/LOOP instances carry their own guards."""


@dataclass
class GraphFragment:
    """A partial graph with one entry and one exit, spliced into workflows."""
    nodes: dict
    edges: list
    entry: str
    exit: str


def task_fragment(task_id: str) -> GraphFragment:
    return GraphFragment(nodes={task_id: TaskNode(task_id)}, edges=[], entry=task_id, exit=task_id)


def sequence_fragments(fragments: list[GraphFragment]) -> GraphFragment:
    if not fragments:
        raise InvalidWorkflow("SEQUENCE requires at least one fragment")
    nodes: dict = {}
    edges: list = []
    for frag in fragments:
        nodes.update(frag.nodes)
        edges.extend(frag.edges)
    for prev, nxt in zip(fragments, fragments[1:]):
        edges.append((prev.exit, nxt.entry))
    return GraphFragment(nodes, edges, fragments[0].entry, fragments[-1].exit)


def and_fragment(name: str, branches: list[GraphFragment]) -> GraphFragment:
    if len(branches) < 2:
        raise InvalidWorkflow("AND_SPLIT_JOIN requires at least two branches")
    split_id = f"and-split-{name}"
    join_id = f"and-join-{name}"
    nodes: dict = {split_id: Gateway(split_id, AND_SPLIT)}
    edges: list = []
    for branch in branches:
        nodes.update(branch.nodes)
    nodes[join_id] = Gateway(join_id, AND_JOIN)
    for branch in branches:
        edges.append((split_id, branch.entry))
        edges.extend(branch.edges)
        edges.append((branch.exit, join_id))
    return GraphFragment(nodes, edges, split_id, join_id)


def xor_fragment(
    name: str,
    branches: list[Optional[GraphFragment]],
    guards: tuple[Optional[Expr], ...],
    guard_rule_ids: tuple[Optional[str], ...],
) -> GraphFragment:
    """Exclusive choice; a None branch is an empty branch (direct edge to the join)."""
    if len(branches) < 2 or len(guards) != len(branches) or len(guard_rule_ids) != len(branches):
        raise InvalidWorkflow("XOR_SPLIT_JOIN requires >= 2 branches with aligned guards")
    split_id = f"xor-split-{name}"
    join_id = f"xor-join-{name}"
    nodes: dict = {split_id: Gateway(split_id, XOR_SPLIT, guards=tuple(guards),
                                     guard_rule_ids=tuple(guard_rule_ids))}
    edges: list = []
    for branch in branches:
        if branch is not None:
            nodes.update(branch.nodes)
    nodes[join_id] = Gateway(join_id, XOR_JOIN)
    for branch in branches:
        if branch is None:
            edges.append((split_id, join_id))
        else:
            edges.append((split_id, branch.entry))
            edges.extend(branch.edges)
            edges.append((branch.exit, join_id))
    return GraphFragment(nodes, edges, split_id, join_id)


def instantiate_pattern(template: PatternTemplate, name: str,
                        branches: list[GraphFragment]) -> GraphFragment:
    """Instantiate a catalog template over existing fragments."""
    if template.kind == SEQUENCE:
        return sequence_fragments(branches)
    if template.kind == AND_SPLIT_JOIN:
        return and_fragment(name, branches)
    if template.kind == XOR_SPLIT_JOIN:
        guards = template.guards if template.guards else (None,) * len(branches)
        return xor_fragment(name, list(branches), guards, (None,) * len(branches))
    raise UnsupportedPattern(
        "LOOP cannot be instantiated: workflow graphs are acyclic and the "
        "generated activity subset has no loop construct"
    )


def fragment_to_graph(frag: GraphFragment) -> WorkflowGraph:
    return WorkflowGraph(nodes=dict(frag.nodes), edges=list(frag.edges),
                         entry=frag.entry, exit=frag.exit)
