"""HTTP/JSON API over the designer pipeline.

Routes mirror the design stages; error bodies always carry the domain error
class name (404 unknown session/resource, 409 stage-order violation, 422 any
other domain error).
"""

from __future__ import annotations

from typing import Any, Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .bpel import serialize_bpel
from .errors import BrainError, NotFound, SchemaViolation, StageViolation
from .goals import goal_to_json, task_to_json
from .registry import provider_to_json
from .rules import parse_rule, rule_to_json
from .session import DesignerService, SessionState
from .simulator import trace_to_json
from .workflow import workflow_to_json

DEFAULT_PORT = 8080


class SelectBody(BaseModel):
    goalIds: list[str]


class ConstraintsBody(BaseModel):
    ruleIds: list[str]


class BindBody(BaseModel):
    bindings: dict[str, str]


class SimulateBody(BaseModel):
    env: dict[str, Any] = {}
    seed: int = 0


def _status_for(exc: BrainError) -> int:
    if isinstance(exc, NotFound):
        return 404
    if isinstance(exc, StageViolation):
        return 409
    return 422


def _session_json(session: SessionState) -> dict:
    return {
        "sessionId": session.id,
        "stage": session.stage,
        "selectedGoals": list(session.selected_goal_ids),
        "guardRuleIds": sorted(session.guard_rule_ids),
        "attachedRuleIds": list(session.attached_rule_ids),
        "bindings": dict(session.bindings),
    }


def create_app(service: DesignerService) -> FastAPI:
    app = FastAPI(title="brain designer", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(BrainError)
    async def domain_error_handler(_request: Request, exc: BrainError):
        return JSONResponse(status_code=_status_for(exc),
                            content={"error": type(exc).__name__, "detail": str(exc)})

    @app.get("/goals")
    def get_goals():
        model = service.goal_model
        return {
            "processName": service.process_name,
            "tasks": [task_to_json(t) for t in model.tasks.values()],
            "root": goal_to_json(model.root),
        }

    @app.get("/rules")
    def get_rules(kind: Optional[str] = None, task: Optional[str] = None):
        return {"rules": [rule_to_json(r) for r in service.rules.query(kind=kind, task_ref=task)]}

    @app.post("/rules")
    async def post_rule(request: Request):
        body = await request.body()
        rule = parse_rule(body.decode("utf-8"))
        service.rules.put(rule)
        return {"id": rule.id}

    @app.post("/sessions")
    def create_session():
        session = service.create_session()
        return _session_json(session)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return _session_json(service.get_session(session_id))

    @app.post("/sessions/{session_id}/select")
    def select(session_id: str, body: SelectBody):
        session = service.get_session(session_id)
        selection, behavior, dep = service.select(session, body.goalIds)
        return {
            "stage": session.stage,
            "tasks": [task_to_json(t) for t in selection.tasks],
            "impliedPairs": [list(p) for p in selection.implied_pairs],
            "behaviorRules": [rule_to_json(r) for r in behavior],
            "dependencies": {
                "precedence": [list(e) for e in dep.precedence_edges],
                "response": [list(e) for e in dep.response_edges],
                "exclusive": [list(p) for p in dep.exclusive_pairs],
            },
        }

    @app.post("/sessions/{session_id}/synthesize")
    def synthesize(session_id: str):
        session = service.get_session(session_id)
        wf, _abstract = service.synthesize(session)
        return {"stage": session.stage, "workflow": workflow_to_json(wf)}

    @app.post("/sessions/{session_id}/constraints")
    def constraints(session_id: str, body: ConstraintsBody):
        session = service.get_session(session_id)
        annotated, abstract = service.constraints(session, body.ruleIds)
        return {
            "stage": session.stage,
            "workflow": workflow_to_json(annotated),
            "bpelXml": serialize_bpel(abstract),
            "consumedAsGuards": sorted(set(body.ruleIds) & session.guard_rule_ids),
        }

    @app.get("/sessions/{session_id}/providers/{partner_link}")
    def providers(session_id: str, partner_link: str):
        session = service.get_session(session_id)
        proposals = service.providers(session, partner_link)
        family = session.abstract_process.link(partner_link).family
        return {
            "partnerLink": partner_link,
            "family": family,
            "proposals": [provider_to_json(p) for p in proposals],
            "noneAvailable": len(proposals) == 0,
        }

    @app.post("/sessions/{session_id}/bind")
    def bind(session_id: str, body: BindBody):
        session = service.get_session(session_id)
        bound = service.bind(session, body.bindings)
        return {"stage": session.stage, "bpelXml": serialize_bpel(bound)}

    @app.post("/sessions/{session_id}/simulate")
    def simulate(session_id: str, body: SimulateBody):
        for key, value in body.env.items():
            if not isinstance(value, (bool, int, float, str)):
                raise SchemaViolation(f"/env/{key}", "environment values must be scalars")
        session = service.get_session(session_id)
        result = service.simulate(session, body.env, body.seed)
        return {
            "stage": session.stage,
            "trace": trace_to_json(result.trace),
            "violations": [
                {"ruleId": v.rule_id,
                 "evidence": [{"tick": e.tick, "kind": e.kind, "subject": e.subject,
                               "detail": e.detail} for e in v.evidence]}
                for v in result.violations
            ],
            "conformant": not result.violations,
        }

    return app


def run_server(service: DesignerService, host: str = "127.0.0.1",
               port: int = DEFAULT_PORT) -> None:
    import uvicorn

    uvicorn.run(create_app(service), host=host, port=port, log_level="info")
