"""A-posteriori conformance checking of execution traces against behavior rules.

Pinned semantics:
  precedence(A,B) - every start of B needs some earlier end of A;
  response(A,B)   - in a completed trace, every end of A needs some later end of B;
  exclusive(A,B)  - A and B must not both start.
Faulted traces suspend response obligations (the fault aborted the process).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .rules import BehaviorRule
from .simulator import COMPLETED, ExecutionTrace, TraceEvent


@dataclass(frozen=True)
class Violation:
    rule_id: str
    evidence: tuple[TraceEvent, ...]

    def describe(self) -> str:
        parts = ", ".join(f"{e.tick} {e.kind} {e.subject}" for e in self.evidence)
        return f"{self.rule_id}: {parts}"


def check_conformance(trace: ExecutionTrace, rules: Iterable[BehaviorRule]) -> list[Violation]:
    """Violations of the given behavior rules, ordered by rule id.

    Total: any trace and rule set yields a verdict, never an error. Non-behavior
    rules in the input are ignored.
    """
    violations = []
    for rule in sorted(rules, key=lambda r: r.id):
        if not isinstance(rule, BehaviorRule):
            continue
        evidence = _check_rule(trace, rule)
        if evidence:
            violations.append(Violation(rule.id, tuple(evidence)))
    return violations


def _check_rule(trace: ExecutionTrace, rule: BehaviorRule) -> list[TraceEvent]:
    a, b = rule.antecedent, rule.consequent
    if rule.relation == "precedence":
        offenders = []
        a_ended = False
        for event in trace.events:
            if event.kind == "taskEnd" and event.subject == a:
                a_ended = True
            elif event.kind == "taskStart" and event.subject == b and not a_ended:
                offenders.append(event)
        return offenders
    if rule.relation == "response":
        if trace.status != COMPLETED:
            return []
        offenders = []
        b_end_indices = [i for i, e in enumerate(trace.events)
                         if e.kind == "taskEnd" and e.subject == b]
        for i, event in enumerate(trace.events):
            if event.kind == "taskEnd" and event.subject == a:
                if not any(j > i for j in b_end_indices):
                    offenders.append(event)
        return offenders
    # exclusive
    a_start = next((e for e in trace.events if e.kind == "taskStart" and e.subject == a), None)
    b_start = next((e for e in trace.events if e.kind == "taskStart" and e.subject == b), None)
    if a_start is not None and b_start is not None:
        return [a_start, b_start]
    return []
