"""Headless report rendering: workflow diagrams and trace timelines.

Figures go to files (Agg backend); the event table goes to CSV next to them.
Layout is the synthesis layering itself: node depth = column, so the diagram
reads left to right in execution order.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.patches import FancyArrowPatch

from .simulator import ExecutionTrace
from .workflow import FaultNode, Gateway, TaskNode, WorkflowGraph, node_levels

_GATEWAY_MARKS = {"AND_SPLIT": "+", "AND_JOIN": "+", "XOR_SPLIT": "x", "XOR_JOIN": "x"}


def save_workflow_diagram(wf: WorkflowGraph, path) -> Path:
    levels = node_levels(wf)
    columns: dict[int, list[str]] = {}
    for node_id in wf.nodes:
        columns.setdefault(levels[node_id], []).append(node_id)

    positions: dict[str, tuple[float, float]] = {}
    for level, members in columns.items():
        members.sort()
        for row, node_id in enumerate(members):
            positions[node_id] = (level * 2.4, -(row - (len(members) - 1) / 2) * 1.6)

    width = max(6.0, (max(levels.values()) + 1) * 2.2)
    height = max(3.0, max(len(m) for m in columns.values()) * 1.8)
    fig, ax = plt.subplots(figsize=(width, height))

    for src, dst in wf.edges:
        arrow = FancyArrowPatch(positions[src], positions[dst], arrowstyle="-|>",
                                mutation_scale=12, color="0.45", shrinkA=16, shrinkB=16,
                                connectionstyle="arc3,rad=0.08")
        ax.add_patch(arrow)

    for node_id, node in wf.nodes.items():
        x, y = positions[node_id]
        if isinstance(node, TaskNode):
            ax.scatter([x], [y], marker="s", s=1600, color="#dbeafe", edgecolor="#1d4ed8",
                       zorder=3)
            ax.text(x, y, node_id, ha="center", va="center", fontsize=7, zorder=4, wrap=True)
        elif isinstance(node, FaultNode):
            ax.scatter([x], [y], marker="8", s=1100, color="#fee2e2", edgecolor="#b91c1c",
                       zorder=3)
            ax.text(x, y, node_id, ha="center", va="center", fontsize=6, zorder=4)
        elif isinstance(node, Gateway):
            ax.scatter([x], [y], marker="D", s=900, color="#fef9c3", edgecolor="#a16207",
                       zorder=3)
            ax.text(x, y, _GATEWAY_MARKS.get(node.kind, "?"), ha="center", va="center",
                    fontsize=10, zorder=4)
            ax.text(x, y - 0.55, node_id, ha="center", va="top", fontsize=5.5, color="0.35",
                    zorder=4)

    ax.set_xlim(-1.5, max(x for x, _ in positions.values()) + 1.5)
    ys = [y for _, y in positions.values()]
    ax.set_ylim(min(ys) - 1.2, max(ys) + 1.2)
    ax.axis("off")
    ax.set_title("workflow")
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def save_trace_timeline(trace: ExecutionTrace, path) -> Path:
    starts: dict[str, int] = {}
    bars: list[tuple[str, int, int]] = []
    marks: list[tuple[int, str, str, str]] = []  # tick, subject, kind, detail
    subjects: list[str] = []

    def row_for(subject: str) -> None:
        if subject not in subjects:
            subjects.append(subject)

    for event in trace.events:
        row_for(event.subject)
        if event.kind == "taskStart":
            starts[event.subject] = event.tick
        elif event.kind == "taskEnd":
            bars.append((event.subject, starts.get(event.subject, event.tick), event.tick))
        else:
            marks.append((event.tick, event.subject, event.kind, event.detail or ""))

    fig, ax = plt.subplots(figsize=(9, max(2.5, 0.45 * len(subjects) + 1.2)))
    rows = {subject: i for i, subject in enumerate(subjects)}
    for subject, start, end in bars:
        ax.barh(rows[subject], max(end - start, 0.12), left=start, height=0.45,
                color="#93c5fd", edgecolor="#1d4ed8")
    for tick, subject, kind, detail in marks:
        if kind == "faultRaised":
            ax.scatter([tick], [rows[subject]], marker="X", s=90, color="#b91c1c", zorder=3)
        elif kind == "ruleEval":
            color = "#15803d" if detail == "true" else "#b91c1c"
            ax.scatter([tick], [rows[subject]], marker="D", s=45, color=color, zorder=3)
        else:  # branchTaken
            ax.scatter([tick], [rows[subject]], marker="|", s=60, color="0.3", zorder=3)

    ax.set_yticks(range(len(subjects)), labels=subjects, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel("tick")
    ax.set_title(f"trace ({trace.status})")
    ax.grid(axis="x", color="0.9")
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def write_events_csv(trace: ExecutionTrace, path) -> Path:
    out = Path(path)
    with out.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["tick", "kind", "subject", "detail"])
        for event in trace.events:
            writer.writerow([event.tick, event.kind, event.subject, event.detail or ""])
        writer.writerow(["", "status", trace.status, ""])
    return out
