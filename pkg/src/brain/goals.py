"""Hierarchical business goal model and its mapping to tasks.

A goal model is a strict tree: interior goals group sub-goals, leaf goals
reference tasks from a flat catalog. Selecting goals yields the union of
tasks beneath them plus implied sequencing pairs contributed by every
`ordered` goal along the way (child i must finish before child i+1 starts).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import (
    CyclicGoal,
    DanglingTaskRef,
    DuplicateGoalId,
    DuplicateTaskId,
    EmptySelection,
    UnknownGoal,
    XmlSyntax,
)
from .xmlio import XmlBuilder, child_elements, parse_document, reject_children, require_attr


@dataclass(frozen=True)
class Task:
    id: str
    name: str
    operation: str
    participant: str
    input_vars: tuple[str, ...] = ()
    output_vars: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.id:
            raise XmlSyntax("task id must be non-empty")
        if not self.operation:
            raise XmlSyntax(f"task {self.id}: operation must be non-empty")


@dataclass(frozen=True)
class Goal:
    id: str
    name: str
    ordered: bool
    children: tuple["Goal", ...] = ()
    task_refs: tuple[str, ...] = ()


@dataclass(frozen=True)
class GoalModel:
    root: Goal
    tasks: dict[str, Task] = field(default_factory=dict)  # catalog in document order


def validate_goal_model(model: GoalModel) -> None:
    """Check tree-ness, id uniqueness and task-reference resolution."""
    seen_ids: set[str] = set()
    on_path: set[int] = set()

    def walk(goal: Goal) -> None:
        if id(goal) in on_path:
            raise CyclicGoal(f"goal {goal.id!r} reaches itself")
        if goal.id in seen_ids:
            raise DuplicateGoalId(f"duplicate goal id {goal.id!r}")
        seen_ids.add(goal.id)
        has_children = len(goal.children) > 0
        has_refs = len(goal.task_refs) > 0
        if has_children == has_refs:
            raise XmlSyntax(f"goal {goal.id!r} must have either sub-goals or task refs, not both/neither")
        for ref in goal.task_refs:
            if ref not in model.tasks:
                raise DanglingTaskRef(f"goal {goal.id!r} references unknown task {ref!r}")
        on_path.add(id(goal))
        for child in goal.children:
            walk(child)
        on_path.discard(id(goal))

    walk(model.root)


def goals_by_id(model: GoalModel) -> dict[str, Goal]:
    out: dict[str, Goal] = {}

    def walk(goal: Goal) -> None:
        out[goal.id] = goal
        for child in goal.children:
            walk(child)

    walk(model.root)
    return out


def tasks_under(goal: Goal) -> list[str]:
    """Task ids beneath a goal in document order (duplicates preserved)."""
    if goal.task_refs:
        return list(goal.task_refs)
    out: list[str] = []
    for child in goal.children:
        out.extend(tasks_under(child))
    return out


@dataclass(frozen=True)
class Selection:
    tasks: tuple[Task, ...]
    implied_pairs: tuple[tuple[str, str], ...]


def select_goals(model: GoalModel, goal_ids: Iterable[str]) -> Selection:
    """Resolve a goal selection into tasks plus implied sequencing pairs.

    Selecting a goal selects its whole subtree. For every ordered goal, the
    children that contain at least one selected task are chained: the last
    selected task (document order) of one child must precede the first
    selected task of the next.
    """
    ids = list(goal_ids)
    if not ids:
        raise EmptySelection("no goals selected")
    index = goals_by_id(model)
    selected_roots = []
    for gid in ids:
        if gid not in index:
            raise UnknownGoal(f"unknown goal {gid!r}")
        selected_roots.append(index[gid])

    selected_tasks: list[str] = []
    selected_set: set[str] = set()
    for goal in selected_roots:
        for task_id in tasks_under(goal):
            if task_id not in selected_set:
                selected_set.add(task_id)
                selected_tasks.append(task_id)
    # present tasks in catalog (document) order regardless of selection order
    ordered_ids = [tid for tid in model.tasks if tid in selected_set]

    pairs: list[tuple[str, str]] = []
    pair_set: set[tuple[str, str]] = set()

    def child_units(goal: Goal) -> list[list[str]]:
        if goal.task_refs:
            return [[ref] for ref in goal.task_refs]
        return [tasks_under(child) for child in goal.children]

    def walk(goal: Goal) -> None:
        if goal.ordered:
            bearing = []
            for unit in child_units(goal):
                picked = [t for t in unit if t in selected_set]
                if picked:
                    bearing.append(picked)
            for prev, nxt in zip(bearing, bearing[1:]):
                pair = (prev[-1], nxt[0])
                if pair[0] != pair[1] and pair not in pair_set:
                    pair_set.add(pair)
                    pairs.append(pair)
        for child in goal.children:
            walk(child)

    walk(model.root)
    return Selection(
        tasks=tuple(model.tasks[tid] for tid in ordered_ids),
        implied_pairs=tuple(pairs),
    )


# -- XML form -----------------------------------------------------------------
#
# <goalModel>
#   <tasks><task id name operation participant inputs="a,b" outputs="c"/>..</tasks>
#   <goal id name ordered="true|false">(<goal../>|<taskRef id=".."/>)..</goal>
# </goalModel>

def _csv(values: tuple[str, ...]) -> Optional[str]:
    return ",".join(values) if values else None


def _parse_csv(value: Optional[str]) -> tuple[str, ...]:
    if not value:
        return ()
    return tuple(part for part in value.split(",") if part)


def serialize_goal_model(model: GoalModel) -> str:
    validate_goal_model(model)
    builder = XmlBuilder()
    builder.open("goalModel")
    builder.open("tasks")
    for task in model.tasks.values():
        builder.leaf("task", [
            ("id", task.id), ("name", task.name), ("operation", task.operation),
            ("participant", task.participant),
            ("inputs", _csv(task.input_vars)), ("outputs", _csv(task.output_vars)),
        ])
    builder.close("tasks")
    _write_goal(builder, model.root)
    builder.close("goalModel")
    return builder.done()


def _write_goal(builder: XmlBuilder, goal: Goal) -> None:
    attrs = [("id", goal.id), ("name", goal.name), ("ordered", "true" if goal.ordered else "false")]
    builder.open("goal", attrs)
    if goal.task_refs:
        for ref in goal.task_refs:
            builder.leaf("taskRef", [("id", ref)])
    else:
        for child in goal.children:
            _write_goal(builder, child)
    builder.close("goal")


def load_goal_model(text: str) -> GoalModel:
    root_elem = parse_document(text, "goalModel")
    kids = child_elements(root_elem)
    if len(kids) != 2 or kids[0].tag != "tasks" or kids[1].tag != "goal":
        raise XmlSyntax("<goalModel> requires <tasks> followed by exactly one root <goal>")

    tasks: dict[str, Task] = {}
    for task_elem in child_elements(kids[0]):
        if task_elem.tag != "task":
            raise XmlSyntax(f"unexpected element <{task_elem.tag}> inside <tasks>")
        reject_children(task_elem)
        task = Task(
            id=require_attr(task_elem, "id"),
            name=require_attr(task_elem, "name"),
            operation=require_attr(task_elem, "operation"),
            participant=require_attr(task_elem, "participant"),
            input_vars=_parse_csv(task_elem.get("inputs")),
            output_vars=_parse_csv(task_elem.get("outputs")),
        )
        if task.id in tasks:
            raise DuplicateTaskId(f"duplicate task id {task.id!r}")
        tasks[task.id] = task

    root = _parse_goal(kids[1])
    model = GoalModel(root=root, tasks=tasks)
    validate_goal_model(model)
    return model


def _parse_goal(elem) -> Goal:
    if elem.tag != "goal":
        raise XmlSyntax(f"expected <goal>, found <{elem.tag}>")
    gid = require_attr(elem, "id")
    name = require_attr(elem, "name")
    ordered_text = require_attr(elem, "ordered")
    if ordered_text not in ("true", "false"):
        raise XmlSyntax(f"goal {gid!r}: ordered must be 'true' or 'false'")
    children: list[Goal] = []
    refs: list[str] = []
    for child in child_elements(elem):
        if child.tag == "goal":
            children.append(_parse_goal(child))
        elif child.tag == "taskRef":
            reject_children(child)
            refs.append(require_attr(child, "id"))
        else:
            raise XmlSyntax(f"goal {gid!r}: unexpected element <{child.tag}>")
    return Goal(id=gid, name=name, ordered=ordered_text == "true",
                children=tuple(children), task_refs=tuple(refs))


def goal_to_json(goal: Goal) -> dict:
    out = {"id": goal.id, "name": goal.name, "ordered": goal.ordered}
    if goal.task_refs:
        out["taskRefs"] = list(goal.task_refs)
    else:
        out["children"] = [goal_to_json(c) for c in goal.children]
    return out


def task_to_json(task: Task) -> dict:
    return {
        "id": task.id, "name": task.name, "operation": task.operation,
        "participant": task.participant,
        "inputs": list(task.input_vars), "outputs": list(task.output_vars),
    }
