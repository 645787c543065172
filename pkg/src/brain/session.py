"""Design sessions: the staged pipeline behind both the HTTP API and the CLI.

A session advances through goals -> workflow -> schema -> instance, mirroring
the three design steps (select goals, derive and constrain the schema, bind
providers). Re-running an earlier stage resets every later artifact. The
module-level pipeline helpers are the single implementation both front ends
call, so file-based and session-based composition behave identically.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .bpel import BpelProcess, bind_partners, graph_to_bpel, message_activities
from .composer import DependencyGraph, attach_constraints, build_dependency_graph, synthesize_workflow
from .conformance import Violation, check_conformance
from .errors import InvalidRule, NotFound, StageViolation
from .goals import GoalModel, Selection, load_goal_model, select_goals
from .registry import Provider, Registry, discover, load_providers
from .rules import BehaviorRule, ConstraintRule, RuleRepository, parse_rules
from .simulator import ExecutionTrace, MockEndpoints, execute, mocks_from_xml
from .workflow import TaskNode, WorkflowGraph

STAGES = ("goals", "workflow", "schema", "instance")


# -- pipeline helpers -----------------------------------------------------------

def applicable_behavior_rules(repo: RuleRepository, task_ids: Iterable[str]) -> list[BehaviorRule]:
    """Behavior rules whose both endpoints lie inside the selected task set."""
    tasks = set(task_ids)
    return [r for r in repo.query(kind="behavior")
            if r.antecedent in tasks and r.consequent in tasks]


def applicable_constraint_rules(repo: RuleRepository, task_ids: Iterable[str]) -> list[ConstraintRule]:
    tasks = set(task_ids)
    return [r for r in repo.query(kind="constraint") if r.attached_task in tasks]


def guard_sources(repo: RuleRepository, dep: DependencyGraph) -> dict[str, ConstraintRule]:
    """Pre-mode constraint rules guarding exclusive-pair tasks, one per task.

    When several qualify the lexicographically first rule id wins (query order).
    """
    guards: dict[str, ConstraintRule] = {}
    members = {t for pair in dep.exclusive_pairs for t in pair}
    for task in members:
        for rule in repo.query(kind="constraint", task_ref=task):
            if rule.mode == "pre":
                guards[task] = rule
                break
    return guards


def infer_requester(wf: WorkflowGraph, catalog) -> Optional[str]:
    """The requesting actor: participant of the entry task, when the entry is a task."""
    node = wf.nodes.get(wf.entry)
    if isinstance(node, TaskNode):
        return catalog[node.id].participant
    return None


def analyze_selection(model: GoalModel, repo: RuleRepository, goal_ids: Iterable[str]):
    selection = select_goals(model, goal_ids)
    task_ids = [t.id for t in selection.tasks]
    behavior = applicable_behavior_rules(repo, task_ids)
    dep = build_dependency_graph(task_ids, selection.implied_pairs, behavior)
    return selection, behavior, dep


def synthesize_stage(model: GoalModel, repo: RuleRepository, dep: DependencyGraph,
                     process_name: str):
    guards = guard_sources(repo, dep)
    wf = synthesize_workflow(dep, guards)
    consumed = {rule.id for rule in guards.values()}
    abstract = graph_to_bpel(wf, model.tasks, process_name,
                             requester=infer_requester(wf, model.tasks))
    return wf, consumed, abstract


def constraints_stage(model: GoalModel, base_wf: WorkflowGraph,
                      rules: Iterable[ConstraintRule], process_name: str):
    annotated = attach_constraints(base_wf, rules)
    abstract = graph_to_bpel(annotated, model.tasks, process_name,
                             requester=infer_requester(annotated, model.tasks))
    return annotated, abstract


def compose_abstract_process(model: GoalModel, repo: RuleRepository,
                             goal_ids: Iterable[str],
                             process_name: Optional[str] = None) -> BpelProcess:
    """Headless composition: select, synthesize, attach every applicable constraint."""
    name = process_name or model.root.id
    selection, _behavior, dep = analyze_selection(model, repo, goal_ids)
    wf, consumed, _abstract = synthesize_stage(model, repo, dep, name)
    remaining = [r for r in applicable_constraint_rules(repo, [t.id for t in selection.tasks])
                 if r.id not in consumed]
    if not remaining:
        return _abstract
    _annotated, abstract = constraints_stage(model, wf, remaining, name)
    return abstract


def proposals_for_link(process: BpelProcess, link_name: str, registry: Registry,
                       repo: RuleRepository) -> list[Provider]:
    """Broker proposals for a partner link: same family, all task discovery rules pass."""
    link = process.link(link_name)
    task_ids = [a.name for a in message_activities(process) if a.partner_link == link_name]
    discovery = repo.query(kind="discovery")
    allowed: Optional[set[str]] = None
    for task_id in task_ids:
        ids = {p.id for p in discover(registry, task_id, discovery)}
        allowed = ids if allowed is None else (allowed & ids)
    candidates = registry.by_family(link.family)
    if allowed is None:
        return candidates
    return [p for p in candidates if p.id in allowed]


# -- session state ----------------------------------------------------------------

@dataclass
class SessionState:
    id: str
    stage: str = "goals"
    selected_goal_ids: list[str] = field(default_factory=list)
    selection: Optional[Selection] = None
    behavior_rules: list[BehaviorRule] = field(default_factory=list)
    dep: Optional[DependencyGraph] = None
    workflow_base: Optional[WorkflowGraph] = None
    workflow: Optional[WorkflowGraph] = None
    guard_rule_ids: set[str] = field(default_factory=set)
    attached_rule_ids: list[str] = field(default_factory=list)
    abstract_process: Optional[BpelProcess] = None
    bound_process: Optional[BpelProcess] = None
    bindings: dict[str, str] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def _reset_from(self, stage: str) -> None:
        """Drop artifacts of ``stage`` and everything after it."""
        order = STAGES.index(stage)
        if order <= STAGES.index("workflow"):
            self.selection = None
            self.behavior_rules = []
            self.dep = None
        if order <= STAGES.index("schema"):
            self.workflow_base = None
            self.workflow = None
            self.guard_rule_ids = set()
            self.attached_rule_ids = []
            self.abstract_process = None
        self.bound_process = None
        self.bindings = {}


@dataclass
class SimulationResult:
    trace: ExecutionTrace
    violations: list[Violation]


class DesignerService:
    """Application core: fixtures plus the per-session staged pipeline."""

    def __init__(self, goal_model: GoalModel, rules: RuleRepository,
                 registry: Optional[Registry] = None,
                 mocks: Optional[MockEndpoints] = None,
                 process_name: Optional[str] = None):
        self.goal_model = goal_model
        self.rules = rules
        self.registry = registry if registry is not None else Registry()
        self.mocks = mocks if mocks is not None else MockEndpoints()
        self.process_name = process_name or goal_model.root.id
        self._sessions: dict[str, SessionState] = {}
        self._session_counter = itertools.count(1)
        self._lock = threading.Lock()

    @classmethod
    def from_fixtures(cls, fixtures_dir) -> "DesignerService":
        """Load fixtures/{goals.xml, rules/*.xml, providers.xml, mocks.xml}."""
        root = Path(fixtures_dir)
        model = load_goal_model((root / "goals.xml").read_text(encoding="utf-8"))
        repo = RuleRepository()
        rules_dir = root / "rules"
        if rules_dir.is_dir():
            for path in sorted(rules_dir.glob("*.xml")):
                for rule in parse_rules(path.read_text(encoding="utf-8")):
                    repo.put(rule)
        registry = Registry()
        providers_path = root / "providers.xml"
        if providers_path.exists():
            registry = Registry(load_providers(providers_path.read_text(encoding="utf-8")))
        mocks = MockEndpoints()
        mocks_path = root / "mocks.xml"
        if mocks_path.exists():
            mocks = mocks_from_xml(mocks_path.read_text(encoding="utf-8"))
        return cls(model, repo, registry, mocks)

    # -- session management --

    def create_session(self) -> SessionState:
        with self._lock:
            session_id = f"s{next(self._session_counter)}"
            session = SessionState(id=session_id)
            self._sessions[session_id] = session
            return session

    def get_session(self, session_id: str) -> SessionState:
        with self._lock:
            try:
                return self._sessions[session_id]
            except KeyError:
                raise NotFound(f"no session {session_id!r}") from None

    # -- staged operations --

    def select(self, session: SessionState, goal_ids: Iterable[str]):
        with session.lock:
            selection, behavior, dep = analyze_selection(self.goal_model, self.rules, goal_ids)
            session._reset_from("workflow")
            session.selected_goal_ids = list(goal_ids)
            session.selection = selection
            session.behavior_rules = behavior
            session.dep = dep
            session.stage = "workflow"
            return selection, behavior, dep

    def synthesize(self, session: SessionState):
        with session.lock:
            if session.dep is None:
                raise StageViolation("synthesize requires a goal selection first")
            wf, consumed, abstract = synthesize_stage(
                self.goal_model, self.rules, session.dep, self.process_name)
            session._reset_from("schema")
            session.workflow_base = wf
            session.workflow = wf
            session.guard_rule_ids = consumed
            session.abstract_process = abstract
            session.stage = "schema"
            return wf, abstract

    def constraints(self, session: SessionState, rule_ids: Iterable[str]):
        with session.lock:
            if session.workflow_base is None:
                raise StageViolation("constraints require a synthesized workflow first")
            rules = []
            for rule_id in rule_ids:
                if rule_id in session.guard_rule_ids:
                    continue  # already realized as an exclusive-branch guard
                rule = self.rules.get(rule_id)
                if not isinstance(rule, ConstraintRule):
                    raise InvalidRule(f"rule {rule_id!r} is not a constraint rule")
                rules.append(rule)
            annotated, abstract = constraints_stage(
                self.goal_model, session.workflow_base, rules, self.process_name)
            session.workflow = annotated
            session.attached_rule_ids = [r.id for r in rules]
            session.abstract_process = abstract
            session.bound_process = None
            session.bindings = {}
            session.stage = "schema"
            return annotated, abstract

    def providers(self, session: SessionState, link_name: str) -> list[Provider]:
        with session.lock:
            if session.abstract_process is None:
                raise StageViolation("provider proposals require a schema first")
            return proposals_for_link(session.abstract_process, link_name,
                                      self.registry, self.rules)

    def bind(self, session: SessionState, bindings: Mapping[str, str]) -> BpelProcess:
        with session.lock:
            if session.abstract_process is None:
                raise StageViolation("bind requires a schema first")
            bound = bind_partners(session.abstract_process, bindings, self.registry)
            session.bound_process = bound
            session.bindings = dict(bindings)
            session.stage = "instance"
            return bound

    def simulate(self, session: SessionState, env: Mapping, seed: int) -> SimulationResult:
        with session.lock:
            if session.bound_process is None:
                raise StageViolation("simulate requires a bound process instance")
            trace = execute(session.bound_process, self.mocks, env, seed)
            violations = check_conformance(trace, session.behavior_rules)
            return SimulationResult(trace=trace, violations=violations)
