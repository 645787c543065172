"""Deterministic desk-scale simulator for executable process documents.

Tasks execute atomically against mock endpoints (start tick, mock latency,
end tick); parallel flows are interleaved by a seeded scheduler, so a trace
is a pure function of (process, mocks, env, seed). The same interpreter,
driven by a scripted chooser, exhaustively enumerates all interleavings.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional

from .bpel import (
    BpelProcess,
    Empty,
    Fault,
    Flow,
    If,
    Invoke,
    Receive,
    Reply,
    Sequence,
    message_activities,
)
from .errors import MissingMock, SchemaViolation, TooLarge, TraceSyntax, UnboundLink
from .expr import eval_expr

COMPLETED = "completed"
FAULTED = "faulted"

EVENT_KINDS = ("taskStart", "taskEnd", "ruleEval", "faultRaised", "branchTaken")


@dataclass(frozen=True)
class TraceEvent:
    tick: int
    kind: str
    subject: str
    detail: Optional[str] = None


@dataclass(frozen=True)
class ExecutionTrace:
    events: tuple[TraceEvent, ...]
    status: str

    def task_order(self) -> list[str]:
        return [e.subject for e in self.events if e.kind == "taskStart"]


class MockEndpoint:
    """Mock responses for one provider: operation -> (env) -> (outputs, latency)."""

    def __init__(self, provider_id: str):
        self.provider_id = provider_id
        self._operations: dict[str, Callable] = {}

    def respond(self, operation: str, outputs: Optional[Mapping] = None, latency: int = 1) -> "MockEndpoint":
        fixed = dict(outputs or {})

        def handler(env):
            return dict(fixed), latency

        self._operations[operation] = handler
        return self

    def respond_with(self, operation: str, handler: Callable) -> "MockEndpoint":
        self._operations[operation] = handler
        return self

    def call(self, operation: str, env):
        try:
            handler = self._operations[operation]
        except KeyError:
            raise MissingMock(self.provider_id, operation) from None
        outputs, latency = handler(env)
        return dict(outputs or {}), max(0, int(latency))

    def operations(self) -> list[str]:
        return sorted(self._operations)


class MockEndpoints:
    """Collection of mock endpoints keyed by provider id."""

    def __init__(self):
        self._endpoints: dict[str, MockEndpoint] = {}

    def endpoint(self, provider_id: str) -> MockEndpoint:
        if provider_id not in self._endpoints:
            self._endpoints[provider_id] = MockEndpoint(provider_id)
        return self._endpoints[provider_id]

    def add(self, provider_id: str, operation: str, outputs: Optional[Mapping] = None,
            latency: int = 1) -> "MockEndpoints":
        self.endpoint(provider_id).respond(operation, outputs, latency)
        return self

    def call(self, provider_id: str, operation: str, env):
        if provider_id not in self._endpoints:
            raise MissingMock(provider_id, operation)
        return self._endpoints[provider_id].call(operation, env)


def auto_mocks(process: BpelProcess, latency: int = 1) -> MockEndpoints:
    """Unit mocks covering every bound (provider, operation) pair of the process."""
    links = {l.name: l for l in process.partner_links}
    mocks = MockEndpoints()
    for activity in message_activities(process):
        provider = links[activity.partner_link].provider
        if provider is not None:
            mocks.add(provider, activity.operation, outputs={}, latency=latency)
    return mocks


# -- interpreter ----------------------------------------------------------------

def _index_activities(process: BpelProcess):
    parent: dict[int, Optional[object]] = {}
    if_subjects: dict[int, str] = {}
    if_count = 0

    def walk(activity, up):
        nonlocal if_count
        if id(activity) in parent:
            raise SchemaViolation("/process", "activity object reused within the tree")
        parent[id(activity)] = up
        if isinstance(activity, (Sequence, Flow)):
            for child in activity.children:
                walk(child, activity)
        elif isinstance(activity, If):
            if_count += 1
            if_subjects[id(activity)] = activity.rule_id or f"if-{if_count}"
            walk(activity.then, activity)
            if activity.orelse is not None:
                walk(activity.orelse, activity)

    walk(process.body, None)
    return parent, if_subjects


def _run(process: BpelProcess, mocks: MockEndpoints, initial_env: Mapping,
         choose: Callable[[int], int]) -> ExecutionTrace:
    parent, if_subjects = _index_activities(process)
    links = {l.name: l for l in process.partner_links}
    env = dict(initial_env)
    events: list[TraceEvent] = []
    ready: list = []
    flow_pending: dict[int, int] = {}
    clock = 0
    aborted = False

    def activate(activity):
        if isinstance(activity, Sequence):
            activate(activity.children[0])
        elif isinstance(activity, Flow):
            flow_pending[id(activity)] = len(activity.children)
            for child in activity.children:
                activate(child)
        elif isinstance(activity, Empty):
            complete(activity)
        else:
            ready.append(activity)

    def complete(activity):
        up = parent[id(activity)]
        if up is None:
            return
        if isinstance(up, Sequence):
            siblings = up.children
            idx = next(i for i, c in enumerate(siblings) if c is activity)
            if idx + 1 < len(siblings):
                activate(siblings[idx + 1])
            else:
                complete(up)
        elif isinstance(up, Flow):
            flow_pending[id(up)] -= 1
            if flow_pending[id(up)] == 0:
                complete(up)
        else:  # If
            complete(up)

    def step(activity):
        nonlocal clock, aborted
        if isinstance(activity, (Invoke, Receive, Reply)):
            provider = links[activity.partner_link].provider
            outputs, latency = mocks.call(provider, activity.operation, env)
            events.append(TraceEvent(clock, "taskStart", activity.name))
            env.update(outputs)
            clock += latency
            events.append(TraceEvent(clock, "taskEnd", activity.name))
            complete(activity)
        elif isinstance(activity, If):
            subject = if_subjects[id(activity)]
            verdict = eval_expr(activity.condition, env)
            events.append(TraceEvent(clock, "ruleEval", subject, "true" if verdict else "false"))
            branch = activity.then if verdict else activity.orelse
            events.append(TraceEvent(clock, "branchTaken", subject, "then" if verdict else "else"))
            if branch is None:
                complete(activity)
            else:
                activate(branch)
        elif isinstance(activity, Fault):
            events.append(TraceEvent(clock, "faultRaised", activity.name))
            aborted = True
        else:
            raise SchemaViolation("/process", f"unexpected activity in ready set: {activity!r}")

    activate(process.body)
    while ready and not aborted:
        index = choose(len(ready)) if len(ready) > 1 else 0
        step(ready.pop(index))
    return ExecutionTrace(tuple(events), FAULTED if aborted else COMPLETED)


def execute(process: BpelProcess, mocks: MockEndpoints, initial_env: Mapping,
            seed: int) -> ExecutionTrace:
    """Run an executable process once; the trace is fully determined by the arguments."""
    unbound = [l.name for l in process.partner_links if l.provider is None]
    if unbound:
        raise UnboundLink(f"cannot simulate: unbound partner links {', '.join(sorted(unbound))}")
    rng = random.Random(seed)
    return _run(process, mocks, initial_env, lambda n: rng.randrange(n))


def enumerate_schedules(
    process: BpelProcess,
    tick_bound: int = 100_000,
    mocks: Optional[MockEndpoints] = None,
    initial_env: Optional[Mapping] = None,
) -> list[ExecutionTrace]:
    """All scheduler interleavings of the process, deduplicated by event order.

    Exhaustive over the chooser's decision tree; each leaf is one schedule, so
    more than 10,000 schedules (or a trace outrunning ``tick_bound``) raises
    TooLarge. Defaults to unit-latency mocks and an empty environment.
    """
    if len(message_activities(process)) > 8:
        raise TooLarge("schedule enumeration supports at most 8 task activities")
    if mocks is None:
        mocks = auto_mocks(process)
    env = dict(initial_env or {})

    results: dict = {}
    stack: list[list[int]] = [[]]
    runs = 0
    while stack:
        prefix = stack.pop()
        recorded: list[int] = []
        pos = 0

        def choose(n: int) -> int:
            nonlocal pos
            if pos < len(prefix):
                choice = prefix[pos]
                pos += 1
                return choice
            pos += 1
            recorded.append(n)
            return 0

        trace = _run(process, mocks, env, choose)
        runs += 1
        if runs > 10_000:
            raise TooLarge("more than 10,000 interleavings")
        if trace.events and trace.events[-1].tick > tick_bound:
            raise TooLarge(f"trace exceeds tick bound {tick_bound}")
        results[(trace.events, trace.status)] = trace
        for offset, width in enumerate(recorded):
            for alt in range(1, width):
                stack.append(prefix + [0] * offset + [alt])
    return list(results.values())


# -- line-oriented trace text (one event per line: tick kind subject [detail]) ----

_STATUS_LINE = re.compile(r"#\s*status:\s*(\w+)\s*$")


def format_trace(trace: ExecutionTrace) -> str:
    lines = []
    for event in trace.events:
        line = f"{event.tick} {event.kind} {event.subject}"
        if event.detail is not None:
            line += f" {event.detail}"
        lines.append(line)
    lines.append(f"# status: {trace.status}")
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> ExecutionTrace:
    events: list[TraceEvent] = []
    status = COMPLETED
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            match = _STATUS_LINE.match(line)
            if match:
                if match.group(1) not in (COMPLETED, FAULTED):
                    raise TraceSyntax(f"line {lineno}: unknown status {match.group(1)!r}")
                status = match.group(1)
            continue
        parts = line.split(" ", 3)
        if len(parts) < 3:
            raise TraceSyntax(f"line {lineno}: expected 'tick kind subject [detail]'")
        try:
            tick = int(parts[0])
        except ValueError:
            raise TraceSyntax(f"line {lineno}: tick must be an integer") from None
        kind = parts[1]
        if kind not in EVENT_KINDS:
            raise TraceSyntax(f"line {lineno}: unknown event kind {kind!r}")
        events.append(TraceEvent(tick, kind, parts[2], parts[3] if len(parts) == 4 else None))
    return ExecutionTrace(tuple(events), status)


def trace_to_json(trace: ExecutionTrace) -> dict:
    return {
        "status": trace.status,
        "events": [
            {"tick": e.tick, "kind": e.kind, "subject": e.subject, "detail": e.detail}
            for e in trace.events
        ],
        "text": format_trace(trace),
    }


def mocks_from_xml(text: str) -> MockEndpoints:
    """Load constant mock responses from the fixture format.

    <mocks><mock provider=".." operation=".." latency="1">
      <set var="a.b" type="str">v</set>..</mock></mocks>
    """
    from .xmlio import child_elements, parse_document, parse_scalar, reject_children, require_attr

    root = parse_document(text, "mocks")
    mocks = MockEndpoints()
    for elem in child_elements(root):
        if elem.tag != "mock":
            raise TraceSyntax(f"unexpected element <{elem.tag}> inside <mocks>")
        outputs = {}
        for setter in child_elements(elem):
            if setter.tag != "set":
                raise TraceSyntax(f"unexpected element <{setter.tag}> inside <mock>")
            reject_children(setter)
            outputs[require_attr(setter, "var")] = parse_scalar(
                require_attr(setter, "type"), setter.text, "<set>")
        latency_text = elem.get("latency", "1")
        try:
            latency = int(latency_text)
        except ValueError:
            raise TraceSyntax(f"mock latency must be an integer, got {latency_text!r}") from None
        mocks.add(require_attr(elem, "provider"), require_attr(elem, "operation"),
                  outputs=outputs, latency=latency)
    return mocks


def serialize_mocks_fixture(entries: Iterable[tuple[str, str, Mapping, int]]) -> str:
    """Canonical mocks fixture from (provider, operation, outputs, latency) rows."""
    from .xmlio import XmlBuilder, format_scalar

    builder = XmlBuilder()
    builder.open("mocks")
    for provider, operation, outputs, latency in entries:
        attrs = [("provider", provider), ("operation", operation), ("latency", str(latency))]
        if outputs:
            builder.open("mock", attrs)
            for var, value in outputs.items():
                type_name, text = format_scalar(value)
                builder.text_leaf("set", [("var", var), ("type", type_name)], text)
            builder.close("mock")
        else:
            builder.leaf("mock", attrs)
    builder.close("mocks")
    return builder.done()
