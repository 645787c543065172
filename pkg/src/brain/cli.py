"""Headless command line for scripted composition.

Exit codes: 0 success, 1 domain error (name and message on stderr), 2 usage
error. `compose -> bind -> simulate -> check` over fixture files walks the
same pipeline the HTTP sessions do.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from .bpel import bind_partners, message_activities, parse_bpel, serialize_bpel
from .conformance import check_conformance
from .errors import BrainError, NoProviderFound
from .goals import load_goal_model
from .registry import Registry, discover, load_providers
from .rules import BehaviorRule, RuleRepository, parse_rules
from .session import DesignerService, compose_abstract_process
from .simulator import execute, format_trace, mocks_from_xml, parse_trace

_PATH_IN = click.Path(exists=True, dir_okay=False, path_type=Path)
_DIR_IN = click.Path(exists=True, file_okay=False, path_type=Path)


def _load_rules_dir(rules_dir: Path) -> RuleRepository:
    repo = RuleRepository()
    for path in sorted(rules_dir.glob("*.xml")):
        for rule in parse_rules(path.read_text(encoding="utf-8")):
            repo.put(rule)
    return repo


def _domain_errors(func):
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except BrainError as exc:
            click.echo(f"{type(exc).__name__}: {exc}", err=True)
            sys.exit(1)

    wrapper.__name__ = func.__name__
    wrapper.__doc__ = func.__doc__
    return wrapper


@click.group(no_args_is_help=False)
def main():
    """Compose, bind, simulate and check rule-driven business processes."""


@main.command()
@click.option("--goals", "goals_path", required=True, type=_PATH_IN, help="Goal model XML.")
@click.option("--rules", "rules_dir", required=True, type=_DIR_IN, help="Directory of rule XML files.")
@click.option("--select", "select_ids", required=True, help="Comma-separated goal ids.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False, path_type=Path))
@click.option("--name", "process_name", default=None, help="Process name (default: root goal id).")
@_domain_errors
def compose(goals_path: Path, rules_dir: Path, select_ids: str, out_path: Path, process_name):
    """Select goals and emit the abstract process document."""
    model = load_goal_model(goals_path.read_text(encoding="utf-8"))
    repo = _load_rules_dir(rules_dir)
    goal_ids = [g for g in select_ids.split(",") if g]
    process = compose_abstract_process(model, repo, goal_ids, process_name)
    out_path.write_text(serialize_bpel(process), encoding="utf-8")
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--process", "process_path", required=True, type=_PATH_IN)
@click.option("--providers", "providers_path", required=True, type=_PATH_IN)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False, path_type=Path))
@click.option("--rules", "rules_dir", default=None, type=_DIR_IN,
              help="Rule directory for discovery filtering.")
@click.option("--bind", "overrides", multiple=True, metavar="LINK=PROVIDER",
              help="Explicit binding, repeatable.")
@_domain_errors
def bind(process_path: Path, providers_path: Path, out_path: Path, rules_dir, overrides):
    """Bind every partner link to a provider and emit the executable document."""
    process = parse_bpel(process_path.read_text(encoding="utf-8"))
    registry = Registry(load_providers(providers_path.read_text(encoding="utf-8")))
    repo = _load_rules_dir(rules_dir) if rules_dir else RuleRepository()
    discovery = repo.query(kind="discovery")

    bindings: dict[str, str] = {}
    for override in overrides:
        if "=" not in override:
            raise click.UsageError(f"--bind takes LINK=PROVIDER, got {override!r}")
        link, provider = override.split("=", 1)
        bindings[link] = provider

    for link in process.partner_links:
        if link.name in bindings:
            continue
        tasks = [a.name for a in message_activities(process) if a.partner_link == link.name]
        candidates = registry.by_family(link.family)
        for task in tasks:
            allowed = {p.id for p in discover(registry, task, discovery)}
            candidates = [p for p in candidates if p.id in allowed]
        if not candidates:
            raise NoProviderFound(f"no provider available for partner link {link.name!r}")
        bindings[link.name] = candidates[0].id

    bound = bind_partners(process, bindings, registry)
    out_path.write_text(serialize_bpel(bound), encoding="utf-8")
    for name in sorted(bindings):
        click.echo(f"{name} -> {bindings[name]}")
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--process", "process_path", required=True, type=_PATH_IN)
@click.option("--mocks", "mocks_path", required=True, type=_PATH_IN)
@click.option("--env", "env_path", required=True, type=_PATH_IN, help="Initial environment (JSON).")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--trace", "trace_path", required=True, type=click.Path(dir_okay=False, path_type=Path))
@_domain_errors
def simulate(process_path: Path, mocks_path: Path, env_path: Path, seed: int, trace_path: Path):
    """Execute a bound process against mock endpoints and write the trace."""
    process = parse_bpel(process_path.read_text(encoding="utf-8"))
    mocks = mocks_from_xml(mocks_path.read_text(encoding="utf-8"))
    env = json.loads(env_path.read_text(encoding="utf-8"))
    trace = execute(process, mocks, env, seed)
    trace_path.write_text(format_trace(trace), encoding="utf-8")
    click.echo(f"status: {trace.status}")
    click.echo(f"wrote {trace_path}")


@main.command()
@click.option("--trace", "trace_path", required=True, type=_PATH_IN)
@click.option("--rules", "rules_dir", required=True, type=_DIR_IN)
@_domain_errors
def check(trace_path: Path, rules_dir: Path):
    """Check a trace against the behavior rules; exit 1 when violations exist."""
    trace = parse_trace(trace_path.read_text(encoding="utf-8"))
    repo = _load_rules_dir(rules_dir)
    behavior = [r for r in repo.query(kind="behavior") if isinstance(r, BehaviorRule)]
    violations = check_conformance(trace, behavior)
    if violations:
        for violation in violations:
            click.echo(f"VIOLATION {violation.describe()}")
        sys.exit(1)
    click.echo(f"conformant: {len(behavior)} rules checked, no violations")


@main.command()
@click.option("--trace", "trace_path", required=True, type=_PATH_IN)
@click.option("--process", "process_path", default=None, type=_PATH_IN,
              help="Also render the process workflow diagram.")
@click.option("--out-dir", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path))
@_domain_errors
def report(trace_path: Path, process_path, out_dir: Path):
    """Render timeline/diagram figures plus an events CSV for a trace."""
    from . import report as rendering

    out_dir.mkdir(parents=True, exist_ok=True)
    trace = parse_trace(trace_path.read_text(encoding="utf-8"))
    written = [
        rendering.save_trace_timeline(trace, out_dir / "timeline.png"),
        rendering.write_events_csv(trace, out_dir / "events.csv"),
    ]
    if process_path is not None:
        process = parse_bpel(process_path.read_text(encoding="utf-8"))
        graph = _process_overview_graph(process)
        written.append(rendering.save_workflow_diagram(graph, out_dir / "process.png"))
    for path in written:
        click.echo(f"wrote {path}")


def _process_overview_graph(process):
    """Rebuild a displayable graph from a process document's activity tree."""
    from .bpel import Empty, Fault, Flow, If, Invoke, Receive, Reply, Sequence
    from .patterns import GraphFragment, and_fragment, sequence_fragments, xor_fragment
    from .workflow import FaultNode, TaskNode, WorkflowGraph

    counter = {"if": 0, "flow": 0, "empty": 0}

    def frag(activity) -> GraphFragment:
        if isinstance(activity, (Invoke, Receive, Reply)):
            return GraphFragment({activity.name: TaskNode(activity.name)}, [],
                                 activity.name, activity.name)
        if isinstance(activity, Fault):
            return GraphFragment({activity.name: FaultNode(activity.name)}, [],
                                 activity.name, activity.name)
        if isinstance(activity, Empty):
            counter["empty"] += 1
            name = f"empty-{counter['empty']}"
            return GraphFragment({name: TaskNode(name)}, [], name, name)
        if isinstance(activity, Sequence):
            return sequence_fragments([frag(c) for c in activity.children])
        if isinstance(activity, Flow):
            counter["flow"] += 1
            return and_fragment(f"f{counter['flow']}", [frag(c) for c in activity.children])
        if isinstance(activity, If):
            counter["if"] += 1
            name = activity.rule_id or f"if{counter['if']}"
            branches = [frag(activity.then),
                        frag(activity.orelse) if activity.orelse is not None else None]
            return xor_fragment(name, branches, (activity.condition, None),
                                (activity.rule_id, None))
        raise BrainError(f"cannot draw activity {activity!r}")

    fragment = frag(process.body)
    return WorkflowGraph(nodes=dict(fragment.nodes), edges=list(fragment.edges),
                         entry=fragment.entry, exit=fragment.exit)


@main.command()
@click.option("--fixtures", "fixtures_dir", required=True, type=_DIR_IN,
              help="Directory with goals.xml, rules/, providers.xml, mocks.xml.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=None, type=int,
              help="Port (default: $BRAIN_PORT or 8080).")
@_domain_errors
def serve(fixtures_dir: Path, host: str, port):
    """Run the designer HTTP API."""
    from .server import DEFAULT_PORT, run_server

    if port is None:
        port = int(os.environ.get("BRAIN_PORT", DEFAULT_PORT))
    service = DesignerService.from_fixtures(fixtures_dir)
    run_server(service, host=host, port=port)


if __name__ == "__main__":
    main()
