"""BPEL-subset documents: model, generation from workflow graphs, binding, XML.

The dialect is deliberately small: sequence, flow, if, invoke, receive, reply,
fault, empty. Conditions are the rule expression language, not XPath. Partner
links carry a family; a document is executable once every link is bound to a
provider of that family.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator, Mapping, Optional, Union

from .errors import FamilyMismatch, NotFound, SchemaViolation, UnboundLink, UnresolvedTask, XmlSyntax
from .expr import Expr, expr_to_json, parse_single_expr, write_expr
from .goals import Task
from .workflow import Atom, Choice, FaultNode, Par, Seq, TaskNode, WorkflowGraph, decompose
from .xmlio import XmlBuilder, child_elements, parse_document, reject_children, require_attr


@dataclass(frozen=True)
class PartnerLink:
    name: str
    family: str
    provider: Optional[str] = None


@dataclass(frozen=True)
class Invoke:
    name: str
    partner_link: str
    operation: str
    input_var: Optional[str] = None
    output_var: Optional[str] = None


@dataclass(frozen=True)
class Receive:
    name: str
    partner_link: str
    operation: str
    variable: Optional[str] = None


@dataclass(frozen=True)
class Reply:
    name: str
    partner_link: str
    operation: str
    variable: Optional[str] = None


@dataclass(frozen=True)
class Fault:
    name: str


@dataclass(frozen=True)
class Empty:
    pass


@dataclass(frozen=True)
class Sequence:
    children: tuple["Activity", ...]


@dataclass(frozen=True)
class Flow:
    children: tuple["Activity", ...]


@dataclass(frozen=True)
class If:
    condition: Expr
    then: "Activity"
    orelse: Optional["Activity"] = None
    rule_id: Optional[str] = None


Activity = Union[Invoke, Receive, Reply, Fault, Empty, Sequence, Flow, If]


@dataclass(frozen=True)
class BpelProcess:
    name: str
    partner_links: tuple[PartnerLink, ...]
    variables: tuple[str, ...]
    body: Activity

    @property
    def is_executable(self) -> bool:
        return all(link.provider is not None for link in self.partner_links)

    def link(self, name: str) -> PartnerLink:
        for link in self.partner_links:
            if link.name == name:
                return link
        raise NotFound(f"no partner link named {name!r}")


def walk_activities(activity: Activity) -> Iterator[Activity]:
    """Depth-first, document-order traversal."""
    yield activity
    if isinstance(activity, (Sequence, Flow)):
        for child in activity.children:
            yield from walk_activities(child)
    elif isinstance(activity, If):
        yield from walk_activities(activity.then)
        if activity.orelse is not None:
            yield from walk_activities(activity.orelse)


def message_activities(process: BpelProcess) -> list[Union[Invoke, Receive, Reply]]:
    return [a for a in walk_activities(process.body) if isinstance(a, (Invoke, Receive, Reply))]


# -- generation from a workflow graph ------------------------------------------

def partner_link_name(participant: str) -> str:
    return f"{participant}PL"


def graph_to_bpel(
    wf: WorkflowGraph,
    task_catalog: Mapping[str, Task],
    process_name: str,
    requester: Optional[str] = None,
) -> BpelProcess:
    """Map a validated workflow graph onto an abstract process document.

    Tasks become invokes, except that when ``requester`` is given, the entry
    task owned by the requester becomes the initial receive and the exit task
    owned by the requester becomes the closing reply. One partner link is
    declared per participant (family = participant, unbound); variables are
    the union of task inputs/outputs in first-use order.
    """
    for task_id in wf.task_ids():
        if task_id not in task_catalog:
            raise UnresolvedTask(f"task {task_id!r} is not in the catalog")

    fragment = decompose(wf)
    doc_tasks: list[str] = [a.node_id for a in _atoms_in_order(fragment)
                            if isinstance(wf.nodes[a.node_id], TaskNode)]

    links: list[PartnerLink] = []
    link_names: set[str] = set()
    variables: list[str] = []
    seen_vars: set[str] = set()
    for task_id in doc_tasks:
        task = task_catalog[task_id]
        name = partner_link_name(task.participant)
        if name not in link_names:
            link_names.add(name)
            links.append(PartnerLink(name=name, family=task.participant))
        for var in list(task.input_vars) + list(task.output_vars):
            if var not in seen_vars:
                seen_vars.add(var)
                variables.append(var)

    receive_task = None
    reply_task = None
    entry_node = wf.nodes.get(wf.entry)
    exit_node = wf.nodes.get(wf.exit)
    if requester is not None:
        if isinstance(entry_node, TaskNode) and task_catalog[entry_node.id].participant == requester:
            receive_task = entry_node.id
        if (isinstance(exit_node, TaskNode) and exit_node.id != receive_task
                and task_catalog[exit_node.id].participant == requester):
            reply_task = exit_node.id

    def task_activity(task_id: str) -> Activity:
        task = task_catalog[task_id]
        link = partner_link_name(task.participant)
        main_var = next(iter(task.output_vars or task.input_vars), None)
        if task_id == receive_task:
            return Receive(name=task_id, partner_link=link, operation=task.operation, variable=main_var)
        if task_id == reply_task:
            return Reply(name=task_id, partner_link=link, operation=task.operation, variable=main_var)
        return Invoke(
            name=task_id, partner_link=link, operation=task.operation,
            input_var=next(iter(task.input_vars), None),
            output_var=next(iter(task.output_vars), None),
        )

    def map_seq(seq: Seq) -> Optional[Activity]:
        acts = [map_fragment(item) for item in seq.items]
        if not acts:
            return None
        if len(acts) == 1:
            return acts[0]
        return Sequence(tuple(acts))

    def map_fragment(frag) -> Activity:
        if isinstance(frag, Atom):
            node = wf.nodes[frag.node_id]
            if isinstance(node, FaultNode):
                return Fault(name=frag.node_id)
            return task_activity(frag.node_id)
        if isinstance(frag, Par):
            return Flow(tuple(map_seq(branch) or Empty() for branch in frag.branches))
        if isinstance(frag, Choice):
            return _choice_to_if(frag, map_seq)
        return map_seq(frag) or Empty()

    body = map_seq(fragment) or Empty()
    process = BpelProcess(process_name, tuple(links), tuple(variables), body)
    validate_process(process)
    return process


def _atoms_in_order(fragment) -> list[Atom]:
    if isinstance(fragment, Atom):
        return [fragment]
    out: list[Atom] = []
    if isinstance(fragment, Seq):
        for item in fragment.items:
            out.extend(_atoms_in_order(item))
    else:
        for branch in fragment.branches:
            out.extend(_atoms_in_order(branch))
    return out


def _choice_to_if(choice: Choice, map_seq) -> Activity:
    """Nested-if encoding: guards tried in branch order, unguarded branch is the else."""
    def build(index: int) -> Optional[Activity]:
        if index == len(choice.branches):
            return None
        guard = choice.guards[index]
        branch_act = map_seq(choice.branches[index])
        if guard is None:
            return branch_act  # default branch: whatever remains (possibly nothing)
        return If(
            condition=guard,
            then=branch_act or Empty(),
            orelse=build(index + 1),
            rule_id=choice.guard_rule_ids[index],
        )

    built = build(0)
    if built is None:
        raise SchemaViolation(choice.split_id, "exclusive choice has no realizable branch")
    return built


# -- binding -------------------------------------------------------------------

def bind_partners(process: BpelProcess, bindings: Mapping[str, str], registry) -> BpelProcess:
    """Bind partner links to registered providers of the same family.

    Every link must end up bound; rebinding an already-bound link is allowed.
    """
    by_name = {link.name: link for link in process.partner_links}
    for link_name, provider_id in bindings.items():
        if link_name not in by_name:
            raise NotFound(f"no partner link named {link_name!r}")
        provider = registry.get(provider_id)
        link = by_name[link_name]
        if provider.family != link.family:
            raise FamilyMismatch(
                f"link {link_name!r} has family {link.family!r} but provider "
                f"{provider_id!r} has family {provider.family!r}"
            )
        by_name[link_name] = replace(link, provider=provider_id)
    unbound = [name for name, link in by_name.items() if link.provider is None]
    if unbound:
        raise UnboundLink(f"partner links left unbound: {', '.join(sorted(unbound))}")
    new_links = tuple(by_name[link.name] for link in process.partner_links)
    return replace(process, partner_links=new_links)


# -- validation ----------------------------------------------------------------

def validate_process(process: BpelProcess) -> None:
    link_names = {link.name for link in process.partner_links}
    if len(link_names) != len(process.partner_links):
        raise SchemaViolation("/process/partnerLinks", "duplicate partner link names")
    declared = set(process.variables)
    if len(declared) != len(process.variables):
        raise SchemaViolation("/process/variables", "duplicate variable names")
    names: set[str] = set()

    def check(activity: Activity, path: str) -> None:
        if isinstance(activity, (Invoke, Receive, Reply, Fault)):
            if activity.name in names:
                raise SchemaViolation(path, f"duplicate activity name {activity.name!r}")
            names.add(activity.name)
        if isinstance(activity, (Invoke, Receive, Reply)):
            if activity.partner_link not in link_names:
                raise SchemaViolation(path, f"undeclared partner link {activity.partner_link!r}")
            refs = ((activity.input_var, activity.output_var)
                    if isinstance(activity, Invoke) else (activity.variable,))
            for var in refs:
                if var is not None and var not in declared:
                    raise SchemaViolation(path, f"undeclared variable {var!r}")
        elif isinstance(activity, (Sequence, Flow)):
            if not activity.children:
                raise SchemaViolation(path, "sequence/flow must have at least one child")
            tag = "sequence" if isinstance(activity, Sequence) else "flow"
            for i, child in enumerate(activity.children):
                check(child, f"{path}/{tag}[{i}]")
        elif isinstance(activity, If):
            check(activity.then, f"{path}/if/then")
            if activity.orelse is not None:
                check(activity.orelse, f"{path}/if/else")

    check(process.body, "/process")


# -- XML form ------------------------------------------------------------------

def serialize_bpel(process: BpelProcess) -> str:
    builder = XmlBuilder()
    builder.open("process", [("name", process.name)])
    if process.partner_links:
        builder.open("partnerLinks")
        for link in process.partner_links:
            builder.leaf("partnerLink", [("name", link.name), ("family", link.family),
                                         ("provider", link.provider)])
        builder.close("partnerLinks")
    else:
        builder.leaf("partnerLinks")
    if process.variables:
        builder.open("variables")
        for var in process.variables:
            builder.leaf("variable", [("name", var)])
        builder.close("variables")
    else:
        builder.leaf("variables")
    _write_activity(builder, process.body)
    builder.close("process")
    return builder.done()


def _write_activity(builder: XmlBuilder, activity: Activity) -> None:
    if isinstance(activity, Sequence):
        builder.open("sequence")
        for child in activity.children:
            _write_activity(builder, child)
        builder.close("sequence")
    elif isinstance(activity, Flow):
        builder.open("flow")
        for child in activity.children:
            _write_activity(builder, child)
        builder.close("flow")
    elif isinstance(activity, If):
        builder.open("if", [("rule", activity.rule_id)])
        builder.open("condition")
        write_expr(builder, activity.condition)
        builder.close("condition")
        builder.open("then")
        _write_activity(builder, activity.then)
        builder.close("then")
        if activity.orelse is not None:
            builder.open("else")
            _write_activity(builder, activity.orelse)
            builder.close("else")
        builder.close("if")
    elif isinstance(activity, Invoke):
        builder.leaf("invoke", [("name", activity.name), ("partnerLink", activity.partner_link),
                                ("operation", activity.operation),
                                ("inputVariable", activity.input_var),
                                ("outputVariable", activity.output_var)])
    elif isinstance(activity, Receive):
        builder.leaf("receive", [("name", activity.name), ("partnerLink", activity.partner_link),
                                 ("operation", activity.operation), ("variable", activity.variable)])
    elif isinstance(activity, Reply):
        builder.leaf("reply", [("name", activity.name), ("partnerLink", activity.partner_link),
                               ("operation", activity.operation), ("variable", activity.variable)])
    elif isinstance(activity, Fault):
        builder.leaf("fault", [("name", activity.name)])
    elif isinstance(activity, Empty):
        builder.leaf("empty")
    else:
        raise SchemaViolation("/", f"unknown activity {activity!r}")


def parse_bpel(text: str) -> BpelProcess:
    root = parse_document(text, "process")
    name = require_attr(root, "name")
    kids = child_elements(root)
    if len(kids) != 3 or kids[0].tag != "partnerLinks" or kids[1].tag != "variables":
        raise XmlSyntax("<process> requires <partnerLinks>, <variables>, then one body activity")

    links: list[PartnerLink] = []
    for elem in child_elements(kids[0]):
        if elem.tag != "partnerLink":
            raise XmlSyntax(f"unexpected element <{elem.tag}> inside <partnerLinks>")
        reject_children(elem)
        links.append(PartnerLink(name=require_attr(elem, "name"),
                                 family=require_attr(elem, "family"),
                                 provider=elem.get("provider")))
    variables: list[str] = []
    for elem in child_elements(kids[1]):
        if elem.tag != "variable":
            raise XmlSyntax(f"unexpected element <{elem.tag}> inside <variables>")
        reject_children(elem)
        variables.append(require_attr(elem, "name"))

    process = BpelProcess(name, tuple(links), tuple(variables), _parse_activity(kids[2]))
    validate_process(process)
    return process


def _parse_activity(elem) -> Activity:
    tag = elem.tag
    if tag in ("sequence", "flow"):
        children = tuple(_parse_activity(k) for k in child_elements(elem))
        return Sequence(children) if tag == "sequence" else Flow(children)
    if tag == "if":
        kids = child_elements(elem)
        tags = [k.tag for k in kids]
        if tags not in (["condition", "then"], ["condition", "then", "else"]):
            raise XmlSyntax("<if> requires <condition>, <then> and optionally <else>")
        condition = parse_single_expr(kids[0], "<condition>")
        then_kids = child_elements(kids[1])
        if len(then_kids) != 1:
            raise XmlSyntax("<then> must contain exactly one activity")
        orelse = None
        if len(kids) == 3:
            else_kids = child_elements(kids[2])
            if len(else_kids) != 1:
                raise XmlSyntax("<else> must contain exactly one activity")
            orelse = _parse_activity(else_kids[0])
        return If(condition, _parse_activity(then_kids[0]), orelse, elem.get("rule"))
    if tag == "invoke":
        reject_children(elem)
        return Invoke(require_attr(elem, "name"), require_attr(elem, "partnerLink"),
                      require_attr(elem, "operation"),
                      elem.get("inputVariable"), elem.get("outputVariable"))
    if tag == "receive":
        reject_children(elem)
        return Receive(require_attr(elem, "name"), require_attr(elem, "partnerLink"),
                       require_attr(elem, "operation"), elem.get("variable"))
    if tag == "reply":
        reject_children(elem)
        return Reply(require_attr(elem, "name"), require_attr(elem, "partnerLink"),
                     require_attr(elem, "operation"), elem.get("variable"))
    if tag == "fault":
        reject_children(elem)
        return Fault(require_attr(elem, "name"))
    if tag == "empty":
        reject_children(elem)
        return Empty()
    raise XmlSyntax(f"unknown activity element <{tag}>")


def process_to_json(process: BpelProcess) -> dict:
    return {
        "name": process.name,
        "executable": process.is_executable,
        "partnerLinks": [
            {"name": l.name, "family": l.family, "provider": l.provider}
            for l in process.partner_links
        ],
        "variables": list(process.variables),
        "xml": serialize_bpel(process),
    }


def activity_to_json(activity: Activity) -> dict:
    if isinstance(activity, Sequence):
        return {"type": "sequence", "children": [activity_to_json(c) for c in activity.children]}
    if isinstance(activity, Flow):
        return {"type": "flow", "children": [activity_to_json(c) for c in activity.children]}
    if isinstance(activity, If):
        out = {"type": "if", "condition": expr_to_json(activity.condition),
               "then": activity_to_json(activity.then), "rule": activity.rule_id}
        if activity.orelse is not None:
            out["else"] = activity_to_json(activity.orelse)
        return out
    if isinstance(activity, Invoke):
        return {"type": "invoke", "name": activity.name, "partnerLink": activity.partner_link,
                "operation": activity.operation, "inputVariable": activity.input_var,
                "outputVariable": activity.output_var}
    if isinstance(activity, Receive):
        return {"type": "receive", "name": activity.name, "partnerLink": activity.partner_link,
                "operation": activity.operation, "variable": activity.variable}
    if isinstance(activity, Reply):
        return {"type": "reply", "name": activity.name, "partnerLink": activity.partner_link,
                "operation": activity.operation, "variable": activity.variable}
    if isinstance(activity, Fault):
        return {"type": "fault", "name": activity.name}
    return {"type": "empty"}
