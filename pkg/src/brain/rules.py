"""Externalized business rules: types, XML dialect, and the queryable repository.

Three rule kinds are supported. Behavior rules impose temporal order on task
events, constraint rules test a condition at a task boundary and react when it
fails, discovery rules filter service providers by their attributes.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .errors import DuplicateId, InvalidRule, NotFound, UnknownRuleKind, XmlSyntax
from .expr import Expr, expr_to_json, parse_single_expr, write_expr
from .xmlio import XmlBuilder, child_elements, parse_document, reject_children, require_attr

BEHAVIOR_RELATIONS = ("precedence", "response", "exclusive")
CONSTRAINT_MODES = ("pre", "post")
ON_FALSE_ACTIONS = ("fault", "skip", "reroute")


@dataclass(frozen=True)
class BehaviorRule:
    """Temporal constraint between two task events (precedence, response or exclusive)."""

    id: str
    relation: str
    antecedent: str
    consequent: str

    def __post_init__(self):
        if not self.id:
            raise InvalidRule("rule id must be non-empty")
        if self.relation not in BEHAVIOR_RELATIONS:
            raise InvalidRule(f"unknown behavior relation {self.relation!r}")
        if not self.antecedent or not self.consequent:
            raise InvalidRule(f"rule {self.id}: task references must be non-empty")
        if self.antecedent == self.consequent:
            raise InvalidRule(f"rule {self.id}: antecedent and consequent must differ")


@dataclass(frozen=True)
class ConstraintRule:
    """Condition tested before/after a task; a false verdict triggers the onFalse reaction."""

    id: str
    attached_task: str
    mode: str
    condition: Expr
    on_false: str
    reroute_target: Optional[str] = None

    def __post_init__(self):
        if not self.id:
            raise InvalidRule("rule id must be non-empty")
        if not self.attached_task:
            raise InvalidRule(f"rule {self.id}: task reference must be non-empty")
        if self.mode not in CONSTRAINT_MODES:
            raise InvalidRule(f"rule {self.id}: unknown mode {self.mode!r}")
        if self.on_false not in ON_FALSE_ACTIONS:
            raise InvalidRule(f"rule {self.id}: unknown onFalse action {self.on_false!r}")
        if self.on_false == "reroute":
            if not self.reroute_target:
                raise InvalidRule(f"rule {self.id}: reroute requires a rerouteTarget")
            if self.reroute_target == self.attached_task:
                raise InvalidRule(f"rule {self.id}: reroute target must differ from the attached task")
        elif self.reroute_target is not None:
            raise InvalidRule(f"rule {self.id}: rerouteTarget only allowed with onFalse='reroute'")


@dataclass(frozen=True)
class DiscoveryRule:
    """Predicate over provider attributes selecting suitable providers for a task."""

    id: str
    task_ref: str
    predicate: Expr
    required_family: Optional[str] = None

    def __post_init__(self):
        if not self.id:
            raise InvalidRule("rule id must be non-empty")
        if not self.task_ref:
            raise InvalidRule(f"rule {self.id}: task reference must be non-empty")


Rule = Union[BehaviorRule, ConstraintRule, DiscoveryRule]

_KIND_BY_TYPE = {BehaviorRule: "behavior", ConstraintRule: "constraint", DiscoveryRule: "discovery"}


def rule_kind(rule: Rule) -> str:
    return _KIND_BY_TYPE[type(rule)]


def referenced_tasks(rule: Rule) -> tuple[str, ...]:
    if isinstance(rule, BehaviorRule):
        return (rule.antecedent, rule.consequent)
    if isinstance(rule, ConstraintRule):
        return (rule.attached_task,)
    return (rule.task_ref,)


# -- XML dialect ----------------------------------------------------------

def write_rule(builder: XmlBuilder, rule: Rule) -> None:
    if isinstance(rule, BehaviorRule):
        builder.open("rule", [("id", rule.id), ("kind", "behavior")])
        builder.leaf(rule.relation, [("antecedent", rule.antecedent), ("consequent", rule.consequent)])
        builder.close("rule")
    elif isinstance(rule, ConstraintRule):
        builder.open("rule", [
            ("id", rule.id), ("kind", "constraint"), ("task", rule.attached_task),
            ("mode", rule.mode), ("onFalse", rule.on_false), ("rerouteTarget", rule.reroute_target),
        ])
        builder.open("condition")
        write_expr(builder, rule.condition)
        builder.close("condition")
        builder.close("rule")
    elif isinstance(rule, DiscoveryRule):
        builder.open("rule", [
            ("id", rule.id), ("kind", "discovery"), ("task", rule.task_ref),
            ("family", rule.required_family),
        ])
        builder.open("predicate")
        write_expr(builder, rule.predicate)
        builder.close("predicate")
        builder.close("rule")
    else:
        raise InvalidRule(f"not a rule: {rule!r}")


def serialize_rule(rule: Rule) -> str:
    builder = XmlBuilder()
    write_rule(builder, rule)
    return builder.done()


def serialize_rules(rules: Iterable[Rule]) -> str:
    builder = XmlBuilder()
    builder.open("rules")
    for rule in rules:
        write_rule(builder, rule)
    builder.close("rules")
    return builder.done()


def _parse_rule_element(elem) -> Rule:
    if elem.tag != "rule":
        raise XmlSyntax(f"expected <rule>, found <{elem.tag}>")
    rule_id = require_attr(elem, "id")
    kind = require_attr(elem, "kind")
    if kind == "behavior":
        kids = child_elements(elem)
        if len(kids) != 1:
            raise XmlSyntax(f"rule {rule_id}: behavior rule requires exactly one relation element")
        rel = kids[0]
        if rel.tag not in BEHAVIOR_RELATIONS:
            raise XmlSyntax(f"rule {rule_id}: unknown relation element <{rel.tag}>")
        reject_children(rel)
        return BehaviorRule(rule_id, rel.tag, require_attr(rel, "antecedent"), require_attr(rel, "consequent"))
    if kind == "constraint":
        kids = child_elements(elem)
        if len(kids) != 1 or kids[0].tag != "condition":
            raise XmlSyntax(f"rule {rule_id}: constraint rule requires exactly one <condition>")
        condition = parse_single_expr(kids[0], "<condition>")
        return ConstraintRule(
            rule_id,
            require_attr(elem, "task"),
            require_attr(elem, "mode"),
            condition,
            require_attr(elem, "onFalse"),
            elem.get("rerouteTarget"),
        )
    if kind == "discovery":
        kids = child_elements(elem)
        if len(kids) != 1 or kids[0].tag != "predicate":
            raise XmlSyntax(f"rule {rule_id}: discovery rule requires exactly one <predicate>")
        predicate = parse_single_expr(kids[0], "<predicate>")
        return DiscoveryRule(rule_id, require_attr(elem, "task"), predicate, elem.get("family"))
    raise UnknownRuleKind(f"rule {rule_id}: unknown kind {kind!r}")


def parse_rule(text: str) -> Rule:
    """Parse a single-rule document."""
    return _parse_rule_element(parse_document(text, "rule"))


def parse_rules(text: str) -> list[Rule]:
    """Parse either a single <rule> document or a <rules> wrapper of many."""
    root = parse_document(text)
    if root.tag == "rule":
        return [_parse_rule_element(root)]
    if root.tag == "rules":
        return [_parse_rule_element(child) for child in child_elements(root)]
    raise XmlSyntax(f"expected <rule> or <rules>, found <{root.tag}>")


def rule_to_json(rule: Rule) -> dict:
    base = {"id": rule.id, "kind": rule_kind(rule), "xml": serialize_rule(rule)}
    if isinstance(rule, BehaviorRule):
        base.update(relation=rule.relation, antecedent=rule.antecedent, consequent=rule.consequent)
    elif isinstance(rule, ConstraintRule):
        base.update(task=rule.attached_task, mode=rule.mode, onFalse=rule.on_false,
                    rerouteTarget=rule.reroute_target, condition=expr_to_json(rule.condition))
    else:
        base.update(task=rule.task_ref, family=rule.required_family,
                    predicate=expr_to_json(rule.predicate))
    return base


# -- repository -------------------------------------------------------------

class RuleRepository:
    """Keyed rule store with kind and task indexes.

    Reads and writes are serialized by a lock; a mutation is atomic with
    respect to queries.
    """

    def __init__(self, rules: Iterable[Rule] = ()):
        self._rules: dict[str, Rule] = {}
        self._by_kind: dict[str, set[str]] = {}
        self._by_task: dict[str, set[str]] = {}
        self._lock = threading.Lock()
        for rule in rules:
            self.put(rule)

    def put(self, rule: Rule) -> None:
        with self._lock:
            if rule.id in self._rules:
                raise DuplicateId(f"rule id {rule.id!r} already present")
            self._rules[rule.id] = rule
            self._by_kind.setdefault(rule_kind(rule), set()).add(rule.id)
            for task in referenced_tasks(rule):
                self._by_task.setdefault(task, set()).add(rule.id)

    def get(self, rule_id: str) -> Rule:
        with self._lock:
            try:
                return self._rules[rule_id]
            except KeyError:
                raise NotFound(f"no rule with id {rule_id!r}") from None

    def query(self, kind: Optional[str] = None, task_ref: Optional[str] = None) -> list[Rule]:
        """All rules matching every given filter, in id-lexicographic order."""
        with self._lock:
            ids = set(self._rules)
            if kind is not None:
                ids &= self._by_kind.get(kind, set())
            if task_ref is not None:
                ids &= self._by_task.get(task_ref, set())
            return [self._rules[i] for i in sorted(ids)]

    def __len__(self) -> int:
        with self._lock:
            return len(self._rules)

    def __contains__(self, rule_id: str) -> bool:
        with self._lock:
            return rule_id in self._rules
