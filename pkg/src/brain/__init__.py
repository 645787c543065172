"""Rule-driven business process composition.

Goals select tasks; behavior rules order them into a series-parallel workflow;
constraint rules insert decision points; discovery rules pick providers; the
result is a BPEL-subset document that a deterministic simulator can execute
and whose traces a conformance checker verifies against the same rules.
"""

from .composer import DependencyGraph, attach_constraints, build_dependency_graph, synthesize_workflow, task_levels
from .conformance import Violation, check_conformance
from .expr import And, Compare, Const, Expr, Not, Or, Var, eval_expr, expr_to_xml
from .goals import Goal, GoalModel, Selection, Task, load_goal_model, select_goals, serialize_goal_model
from .bpel import (
    BpelProcess,
    Empty,
    Fault,
    Flow,
    If,
    Invoke,
    PartnerLink,
    Receive,
    Reply,
    Sequence,
    bind_partners,
    graph_to_bpel,
    parse_bpel,
    serialize_bpel,
)
from .registry import Provider, Registry, discover, load_providers, serialize_providers
from .rules import (
    BehaviorRule,
    ConstraintRule,
    DiscoveryRule,
    Rule,
    RuleRepository,
    parse_rule,
    parse_rules,
    serialize_rule,
    serialize_rules,
)
from .session import DesignerService, SessionState, compose_abstract_process
from .simulator import (
    ExecutionTrace,
    MockEndpoint,
    MockEndpoints,
    TraceEvent,
    auto_mocks,
    enumerate_schedules,
    execute,
    format_trace,
    mocks_from_xml,
    parse_trace,
)
from .workflow import FaultNode, Gateway, TaskNode, WorkflowGraph, decompose, validate_workflow

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
