"""Process composition: dependency analysis, pattern synthesis, decision points.

The pipeline runs in three steps. Behavior rules and goal-implied pairs become
a dependency graph; the graph is layered by longest-path depth and each layer
is realized with sequence/parallel/choice patterns; constraint rules then
insert guarded decision points around their attached tasks.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Optional

from dataclasses import dataclass

from .errors import (
    BackwardReroute,
    CyclicRules,
    DanglingRuleRef,
    DuplicateId,
    EmptySelection,
    ExclusiveConflict,
    MissingGuard,
    UnknownAttachedTask,
)
from .patterns import (
    GraphFragment,
    and_fragment,
    fragment_to_graph,
    sequence_fragments,
    task_fragment,
    xor_fragment,
)
from .rules import BehaviorRule, ConstraintRule
from .workflow import (
    Atom,
    Choice,
    FaultNode,
    Gateway,
    Par,
    Seq,
    TaskNode,
    WorkflowGraph,
    XOR_JOIN,
    XOR_SPLIT,
    copy_graph,
    decompose,
    validate_workflow,
)


@dataclass(frozen=True)
class DependencyGraph:
    tasks: tuple[str, ...]
    precedence_edges: tuple[tuple[str, str], ...] = ()
    response_edges: tuple[tuple[str, str], ...] = ()
    exclusive_pairs: tuple[tuple[str, str], ...] = ()

    def ordering_edges(self) -> list[tuple[str, str]]:
        """Precedence and response edges, deduplicated, in declaration order."""
        seen = set()
        out = []
        for edge in list(self.precedence_edges) + list(self.response_edges):
            if edge not in seen:
                seen.add(edge)
                out.append(edge)
        return out


def _task_id(task) -> str:
    return getattr(task, "id", task)


def build_dependency_graph(
    tasks: Iterable,
    implied_pairs: Iterable[tuple[str, str]] = (),
    behavior_rules: Iterable[BehaviorRule] = (),
) -> DependencyGraph:
    """Combine goal-implied pairs with behavior rules into a dependency graph."""
    task_ids: list[str] = []
    task_set: set[str] = set()
    for task in tasks:
        tid = _task_id(task)
        if tid not in task_set:
            task_set.add(tid)
            task_ids.append(tid)

    def checked(a: str, b: str, origin: str) -> tuple[str, str]:
        for endpoint in (a, b):
            if endpoint not in task_set:
                raise DanglingRuleRef(f"{origin} references unknown task {endpoint!r}")
        return (a, b)

    precedence: list[tuple[str, str]] = []
    response: list[tuple[str, str]] = []
    exclusive: list[tuple[str, str]] = []
    for a, b in implied_pairs:
        edge = checked(a, b, "implied pair")
        if edge not in precedence:
            precedence.append(edge)
    for rule in behavior_rules:
        edge = checked(rule.antecedent, rule.consequent, f"rule {rule.id}")
        if rule.relation == "precedence":
            if edge not in precedence:
                precedence.append(edge)
        elif rule.relation == "response":
            if edge not in response:
                response.append(edge)
        else:
            pair = tuple(sorted(edge))
            if pair not in exclusive:
                exclusive.append(pair)

    dep = DependencyGraph(tuple(task_ids), tuple(precedence), tuple(response), tuple(exclusive))
    _check_acyclic_rules(dep)
    _check_exclusive_pairs(dep)
    return dep


def _check_acyclic_rules(dep: DependencyGraph) -> None:
    adj: dict[str, list[str]] = {t: [] for t in dep.tasks}
    for src, dst in dep.ordering_edges():
        adj[src].append(dst)

    WHITE, GREY, BLACK = 0, 1, 2
    color = {t: WHITE for t in dep.tasks}
    parent: dict[str, Optional[str]] = {}

    def visit(start: str) -> None:
        stack = [(start, iter(adj[start]))]
        color[start] = GREY
        parent[start] = None
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color[nxt] == GREY:
                    # reconstruct the cycle path nxt -> ... -> node -> nxt
                    path = [node]
                    cur = node
                    while cur != nxt:
                        cur = parent[cur]
                        path.append(cur)
                    path.reverse()
                    raise CyclicRules(path + [nxt])
                if color[nxt] == WHITE:
                    color[nxt] = GREY
                    parent[nxt] = node
                    stack.append((nxt, iter(adj[nxt])))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                stack.pop()

    for task in dep.tasks:
        if color[task] == WHITE:
            visit(task)


def _check_exclusive_pairs(dep: DependencyGraph) -> None:
    edges = set(dep.ordering_edges())
    adj: dict[str, list[str]] = {t: [] for t in dep.tasks}
    for src, dst in edges:
        adj[src].append(dst)

    def reaches(src: str, dst: str) -> bool:
        stack = [src]
        seen = {src}
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt == dst:
                    return True
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return False

    for a, b in dep.exclusive_pairs:
        if (a, b) in edges or (b, a) in edges:
            raise ExclusiveConflict(f"exclusive pair ({a}, {b}) coincides with an ordering edge")
        if reaches(a, b) or reaches(b, a):
            raise ExclusiveConflict(
                f"exclusive pair ({a}, {b}) is connected by an ordering path; "
                "mutually exclusive tasks cannot be ordered"
            )


def task_levels(dep: DependencyGraph) -> dict[str, int]:
    """Longest-path depth of every task over the ordering edges."""
    adj: dict[str, list[str]] = {t: [] for t in dep.tasks}
    indeg = {t: 0 for t in dep.tasks}
    for src, dst in dep.ordering_edges():
        adj[src].append(dst)
        indeg[dst] += 1
    level = {t: 0 for t in dep.tasks}
    queue = [t for t in dep.tasks if indeg[t] == 0]
    while queue:
        cur = queue.pop()
        for nxt in adj[cur]:
            level[nxt] = max(level[nxt], level[cur] + 1)
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                queue.append(nxt)
    return level


class _UnionFind:
    def __init__(self, items):
        self.parent = {i: i for i in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb


def synthesize_workflow(
    dep: DependencyGraph,
    guard_rules: Optional[Mapping[str, ConstraintRule]] = None,
) -> WorkflowGraph:
    """Layered pattern synthesis over the dependency graph.

    Tasks are grouped by longest-path depth; a level with several tasks becomes
    a parallel fragment, exclusive pairs inside a level become an exclusive
    choice whose branch guards come from ``guard_rules`` (pre-mode constraint
    rules keyed by task id). Levels are chained sequentially, so every ordering
    edge ends in a strictly later level and is respected by construction.
    """
    if not dep.tasks:
        raise EmptySelection("dependency graph has no tasks")
    guard_rules = dict(guard_rules or {})
    levels = task_levels(dep)

    exclusive_members: set[str] = set()
    uf = _UnionFind(dep.tasks)
    for a, b in dep.exclusive_pairs:
        if levels[a] != levels[b]:
            raise ExclusiveConflict(
                f"exclusive pair ({a}, {b}) lands in different levels "
                f"({levels[a]} vs {levels[b]}); a level-local choice cannot realize it"
            )
        uf.union(a, b)
        exclusive_members.update((a, b))

    by_level: dict[int, list[str]] = {}
    for task in dep.tasks:
        by_level.setdefault(levels[task], []).append(task)

    level_fragments: list[GraphFragment] = []
    for level in sorted(by_level):
        members = sorted(by_level[level])
        clusters: dict[str, list[str]] = {}
        singles: list[str] = []
        for task in members:
            if task in exclusive_members:
                clusters.setdefault(uf.find(task), []).append(task)
            else:
                singles.append(task)

        fragments: list[tuple[str, GraphFragment]] = [(t, task_fragment(t)) for t in singles]
        for cluster in clusters.values():
            cluster.sort()
            guards = []
            rule_ids = []
            for task in cluster:
                rule = guard_rules.get(task)
                if rule is None or rule.mode != "pre" or rule.attached_task != task:
                    raise MissingGuard(
                        f"exclusive tasks {tuple(cluster)} need a pre-mode constraint "
                        f"rule per branch; none found for {task!r}"
                    )
                guards.append(rule.condition)
                rule_ids.append(rule.id)
            frag = xor_fragment("+".join(cluster), [task_fragment(t) for t in cluster],
                                tuple(guards), tuple(rule_ids))
            fragments.append((cluster[0], frag))

        fragments.sort(key=lambda pair: pair[0])
        frags = [frag for _, frag in fragments]
        if len(frags) == 1:
            level_fragments.append(frags[0])
        else:
            level_fragments.append(and_fragment(str(level), frags))

    wf = fragment_to_graph(sequence_fragments(level_fragments))
    validate_workflow(wf)
    return wf


# -- constraint-rule decision points ------------------------------------------

def _atoms(fragment) -> set[str]:
    if isinstance(fragment, Atom):
        return {fragment.node_id}
    if isinstance(fragment, Seq):
        out: set[str] = set()
        for item in fragment.items:
            out |= _atoms(item)
        return out
    out = set()
    for branch in fragment.branches:
        out |= _atoms(branch)
    return out


def _fragment_entry(fragment) -> str:
    if isinstance(fragment, Atom):
        return fragment.node_id
    if isinstance(fragment, (Par, Choice)):
        return fragment.split_id
    return _fragment_entry(fragment.items[0])


def _fragment_exit(fragment) -> str:
    if isinstance(fragment, Atom):
        return fragment.node_id
    if isinstance(fragment, (Par, Choice)):
        return fragment.join_id
    return _fragment_exit(fragment.items[-1])


def _replace_edge(edges: list, old: tuple[str, str], new: tuple[str, str]) -> None:
    edges[edges.index(old)] = new


def _attach_local(wf: WorkflowGraph, rule: ConstraintRule) -> None:
    task = rule.attached_task
    split_id = f"xor-split-{rule.id}"
    join_id = f"xor-join-{rule.id}"
    split = Gateway(split_id, XOR_SPLIT, guards=(rule.condition, None),
                    guard_rule_ids=(rule.id, None))
    wf.nodes[split_id] = split
    wf.nodes[join_id] = Gateway(join_id, XOR_JOIN)

    fault_id = None
    if rule.on_false == "fault":
        fault_id = f"fault-{rule.id}"
        wf.nodes[fault_id] = FaultNode(fault_id)

    ins = wf.predecessors(task)
    outs = wf.successors(task)
    if rule.mode == "pre":
        # u -> XS; XS -cond-> T -> XJ; XS -else-> (fault ->) XJ; XJ -> v
        if ins:
            _replace_edge(wf.edges, (ins[0], task), (ins[0], split_id))
        else:
            wf.entry = split_id
        wf.edges.append((split_id, task))
        if fault_id:
            wf.edges.append((split_id, fault_id))
            wf.edges.append((fault_id, join_id))
        else:
            wf.edges.append((split_id, join_id))
        if outs:
            _replace_edge(wf.edges, (task, outs[0]), (join_id, outs[0]))
        else:
            wf.exit = join_id
        wf.edges.append((task, join_id))
    else:
        # T -> XS; XS -cond-> XJ; XS -else-> (fault ->) XJ; XJ -> v
        if outs:
            _replace_edge(wf.edges, (task, outs[0]), (task, split_id))
        else:
            wf.exit = join_id
            wf.edges.append((task, split_id))
        wf.edges.append((split_id, join_id))
        if fault_id:
            wf.edges.append((split_id, fault_id))
            wf.edges.append((fault_id, join_id))
        else:
            wf.edges.append((split_id, join_id))
        if outs:
            wf.edges.append((join_id, outs[0]))


def _attach_reroute(wf: WorkflowGraph, rule: ConstraintRule) -> None:
    """Spanning decision point: condition false skips ahead to the reroute target.

    The split wraps whole top-level fragments so the graph stays series-parallel;
    the false branch goes straight to a join placed before the target's fragment.
    """
    target = rule.reroute_target
    if not isinstance(wf.nodes.get(target), TaskNode):
        raise UnknownAttachedTask(f"reroute target {target!r} is not a task of the workflow")
    top = decompose(wf).items
    src_idx = dst_idx = None
    for idx, item in enumerate(top):
        atoms = _atoms(item)
        if rule.attached_task in atoms:
            src_idx = idx
        if target in atoms:
            dst_idx = idx
    if src_idx is None:
        raise UnknownAttachedTask(f"task {rule.attached_task!r} not found in the workflow")
    if dst_idx is None or dst_idx <= src_idx:
        raise BackwardReroute(
            f"reroute target {target!r} must start a strictly later stage than "
            f"task {rule.attached_task!r}"
        )

    split_id = f"xor-split-{rule.id}"
    join_id = f"xor-join-{rule.id}"
    wf.nodes[split_id] = Gateway(split_id, XOR_SPLIT, guards=(rule.condition, None),
                                 guard_rule_ids=(rule.id, None))
    wf.nodes[join_id] = Gateway(join_id, XOR_JOIN)

    if rule.mode == "post":
        left_exit = _fragment_exit(top[src_idx])
        first_skipped = src_idx + 1
    else:
        left_exit = _fragment_exit(top[src_idx - 1]) if src_idx > 0 else None
        first_skipped = src_idx

    skip_entry = _fragment_entry(top[first_skipped]) if first_skipped < dst_idx else None
    target_entry = _fragment_entry(top[dst_idx])

    if left_exit is not None:
        old_next = skip_entry if skip_entry is not None else target_entry
        _replace_edge(wf.edges, (left_exit, old_next), (left_exit, split_id))
    else:
        wf.entry = split_id

    if skip_entry is not None:
        wf.edges.append((split_id, skip_entry))          # condition true: run the stages
        prev_exit = _fragment_exit(top[dst_idx - 1])
        _replace_edge(wf.edges, (prev_exit, target_entry), (prev_exit, join_id))
    else:
        wf.edges.append((split_id, join_id))             # nothing in between
    wf.edges.append((split_id, join_id))                 # condition false: skip ahead
    wf.edges.append((join_id, target_entry))


def attach_constraints(wf: WorkflowGraph, rules: Iterable[ConstraintRule]) -> WorkflowGraph:
    """Insert one decision point per constraint rule; returns a new graph."""
    out = copy_graph(wf)
    for rule in sorted(rules, key=lambda r: r.id):
        if f"xor-split-{rule.id}" in out.nodes:
            raise DuplicateId(f"constraint rule {rule.id!r} already attached")
        if not isinstance(out.nodes.get(rule.attached_task), TaskNode):
            raise UnknownAttachedTask(
                f"constraint rule {rule.id!r} attaches to {rule.attached_task!r}, "
                "which is not a task of the workflow"
            )
        if rule.on_false == "reroute":
            _attach_reroute(out, rule)
        else:
            _attach_local(out, rule)
    validate_workflow(out)
    return out
