"""HTTP API exposing sessions to the companion UI.

A pure façade over the engine: every state change goes through a session
operation, and per-session writes are serialized behind an optimistic
version token (the event-journal length). Stale writes get 409.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import analysis, inference, kb as kbmod, session as sess
from .errors import (
    AlreadyResolvedError,
    AmbiguousNameError,
    ArchdeskError,
    BindError,
    ContradictionError,
    DanglingReferenceError,
    DuplicateIdError,
    NotCommittedError,
    OverrideNoteRequiredError,
    ParamError,
    ParseError,
    PhaseError,
    SchemaError,
    UnknownDecisionError,
    UnknownOutcomeError,
    VersionMismatchError,
)
from .inference import ScoreWeights

_ERROR_MAP: list[tuple[type, int, str]] = [
    (ParseError, 422, "parse_error"),
    (BindError, 422, "bind_error"),
    (ContradictionError, 422, "contradiction"),
    (OverrideNoteRequiredError, 422, "override_note_required"),
    (SchemaError, 400, "schema_error"),
    (DanglingReferenceError, 400, "dangling_reference"),
    (DuplicateIdError, 400, "duplicate_id"),
    (AmbiguousNameError, 400, "ambiguous_name"),
    (ParamError, 422, "param_error"),
    (UnknownDecisionError, 404, "unknown_decision"),
    (UnknownOutcomeError, 404, "unknown_outcome"),
    (NotCommittedError, 404, "not_committed"),
    (AlreadyResolvedError, 409, "already_resolved"),
    (PhaseError, 409, "phase_error"),
    (VersionMismatchError, 409, "version_mismatch"),
]


class VersionConflict(ArchdeskError):
    def __init__(self, expected: int, got):
        super().__init__(f"stale version token {got!r}; session is at {expected}")
        self.expected = expected


class NotFound(ArchdeskError):
    """Unknown session or knowledge base id."""


@dataclass
class ServiceConfig:
    addr: str = "127.0.0.1:8571"
    kb_dir: str = "fixtures"
    data_dir: Optional[str] = None
    ui_dir: Optional[str] = None
    cors_origins: tuple[str, ...] = ("*",)

    @staticmethod
    def load(path: Optional[str] = None, env: Optional[dict] = None) -> "ServiceConfig":
        """Config file first, environment overrides second."""
        env = os.environ if env is None else env
        config = ServiceConfig()
        if path:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
            config = ServiceConfig(
                addr=doc.get("addr", config.addr),
                kb_dir=doc.get("kb_dir", config.kb_dir),
                data_dir=doc.get("data_dir", config.data_dir),
                ui_dir=doc.get("ui_dir", config.ui_dir),
                cors_origins=tuple(doc.get("cors_origins", config.cors_origins)),
            )
        if env.get("QUARK_ADDR"):
            config.addr = env["QUARK_ADDR"]
        if env.get("QUARK_KB_DIR"):
            config.kb_dir = env["QUARK_KB_DIR"]
        if env.get("QUARK_DATA_DIR"):
            config.data_dir = env["QUARK_DATA_DIR"]
        return config


class CreateSessionBody(BaseModel):
    kb_id: str
    spec_text: str = ""
    weights: Optional[dict] = None
    threshold: float = 0.5
    session_id: Optional[str] = None


class SpecBody(BaseModel):
    spec_text: str
    version: int


class WhatIfBody(BaseModel):
    decision_id: str


class CommitBody(BaseModel):
    decision_id: str
    override_note: Optional[str] = None
    version: int


class AdvanceBody(BaseModel):
    version: int


class OutcomeBody(BaseModel):
    verdict: str
    edited_statement: Optional[str] = None
    version: int


def _session_payload(session: sess.Session, kb_id: str) -> dict:
    return {
        "id": session.id,
        "version": session.version,
        "kb_id": kb_id,
        "kb_version": session.kb_version,
        "phase": session.phase,
        "iteration": session.iteration,
        "ended": session.ended,
        "spec_text": session.spec_text(),
        "statements": [
            {"index": i, "text": s.render(), "origin": s.origin, "kind": type(s).__name__}
            for i, s in enumerate(session.spec.statements)
        ],
        "warnings": list(session.bound.warnings),
        "config": sorted(session.config),
        "candidates": [c.to_json_dict() for c in session.candidates],
        "outcomes": [o.to_json_dict() for o in session.outcomes],
        "log": [e.to_json_dict() for e in session.log],
        "weights": session.weights.to_json_dict(),
        "threshold": session.threshold,
        "history": list(session.history),
    }


def create_app(config: Optional[ServiceConfig] = None) -> FastAPI:
    config = config or ServiceConfig.load()
    app = FastAPI(title="archdesk", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(config.cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    kbs: dict[str, kbmod.KnowledgeBase] = {}
    kb_ids: dict[str, str] = {}  # session id -> kb id
    sessions: dict[str, sess.Session] = {}
    locks: dict[str, threading.Lock] = {}
    registry_lock = threading.Lock()

    kb_dir = Path(config.kb_dir)
    if kb_dir.is_dir():
        for path in sorted(kb_dir.glob("*.json")):
            try:
                kbs[path.stem] = kbmod.load_kb_file(str(path))
            except ArchdeskError:
                continue  # not a KB document; skip

    data_dir = Path(config.data_dir) if config.data_dir else None
    if data_dir:
        data_dir.mkdir(parents=True, exist_ok=True)
        for path in sorted(data_dir.glob("*.session.json")):
            try:
                doc = json.loads(path.read_text(encoding="utf-8"))
                kb = kbs.get(doc.get("kb_id", ""))
                if kb is None:
                    continue
                restored = sess.load_session(doc, kb)
                sessions[restored.id] = restored
                kb_ids[restored.id] = doc["kb_id"]
                locks[restored.id] = threading.Lock()
            except (ArchdeskError, json.JSONDecodeError):
                continue

    def persist(session: sess.Session) -> None:
        if not data_dir:
            return
        doc = sess.save_session(session)
        doc["kb_id"] = kb_ids[session.id]
        path = data_dir / f"{session.id}.session.json"
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False), encoding="utf-8")
        tmp.replace(path)

    @app.exception_handler(ArchdeskError)
    async def engine_error(request: Request, exc: ArchdeskError):
        status, kind = 500, "internal"
        for klass, code, name in _ERROR_MAP:
            if isinstance(exc, klass):
                status, kind = code, name
                break
        if isinstance(exc, VersionConflict):
            status, kind = 409, "version_conflict"
        if isinstance(exc, NotFound):
            status, kind = 404, "not_found"
        details: dict = {}
        if isinstance(exc, ParseError):
            details["diagnostics"] = [
                {"line": d.line, "column": d.column, "message": d.message, "expected": list(d.expected)}
                for d in exc.diagnostics
            ]
        if isinstance(exc, BindError):
            details["unresolved"] = [{"statement": i, "name": n} for i, n in exc.unresolved]
        return JSONResponse(
            status_code=status,
            content={"status": status, "kind": kind, "message": str(exc), "details": details},
        )

    def get_session(session_id: str) -> tuple[sess.Session, threading.Lock]:
        session = sessions.get(session_id)
        if session is None:
            raise NotFound(f"unknown session {session_id!r}")
        return session, locks[session_id]

    def check_version(session: sess.Session, version: int) -> None:
        if version != session.version:
            raise VersionConflict(session.version, version)

    @app.get("/kb")
    def list_kbs():
        return {
            "knowledge_bases": [
                {"id": kb_id, "version": kb.version, "decisions": len(kb.decisions)}
                for kb_id, kb in sorted(kbs.items())
            ]
        }

    @app.get("/kb/{kb_id}/decisions")
    def kb_decisions(kb_id: str):
        kb = kbs.get(kb_id)
        if kb is None:
            raise NotFound(f"unknown knowledge base {kb_id!r}")
        return {
            "decisions": [
                {
                    "id": d.id,
                    "display_name": d.display_name,
                    "selects": d.selects,
                    "impacts": [
                        {"attribute": i.attribute_id, "valence": i.valence, "certainty": i.certainty, "note": i.note}
                        for i in d.impacts
                    ],
                    "dependencies": [
                        {"kind": dep.kind_id, "predicate": dep.predicate.render() if dep.predicate else None, "label": dep.label}
                        for dep in d.dependencies
                    ],
                    "incompatible_with": sorted(d.incompatible_with),
                }
                for d in kb.decisions.values()
            ]
        }

    @app.get("/kb/{kb_id}/elements")
    def kb_elements(kb_id: str):
        kb = kbs.get(kb_id)
        if kb is None:
            raise NotFound(f"unknown knowledge base {kb_id!r}")
        return {
            "elements": [
                {
                    "id": e.id,
                    "kind": e.kind_id,
                    "display_name": e.display_name,
                    "properties": dict(e.properties),
                    "compatible_with": sorted(e.compatible_with),
                }
                for e in kb.elements.values()
            ]
        }

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        kb = kbs.get(body.kb_id)
        if kb is None:
            raise NotFound(f"unknown knowledge base {body.kb_id!r}")
        weights = ScoreWeights.from_json_dict(body.weights) if body.weights else ScoreWeights()
        session = sess.new_session(
            kb, body.spec_text, weights=weights, threshold=body.threshold, session_id=body.session_id
        )
        with registry_lock:
            sessions[session.id] = session
            kb_ids[session.id] = body.kb_id
            locks[session.id] = threading.Lock()
        persist(session)
        return _session_payload(session, body.kb_id)

    @app.get("/sessions/{session_id}")
    def get_state(session_id: str):
        session, _ = get_session(session_id)
        return _session_payload(session, kb_ids[session_id])

    @app.put("/sessions/{session_id}/spec")
    def put_spec(session_id: str, body: SpecBody):
        session, lock = get_session(session_id)
        with lock:
            check_version(session, body.version)
            sess.update_spec(session, body.spec_text)
            persist(session)
            return _session_payload(session, kb_ids[session_id])

    @app.get("/sessions/{session_id}/candidates")
    def list_candidates(session_id: str):
        session, _ = get_session(session_id)
        return {"version": session.version, "candidates": [c.to_json_dict() for c in session.candidates]}

    @app.post("/sessions/{session_id}/whatif")
    def what_if(session_id: str, body: WhatIfBody):
        session, lock = get_session(session_id)
        with lock:
            if body.decision_id not in session.kb.decisions:
                raise UnknownDecisionError(body.decision_id)
            if body.decision_id in session.config:
                raise UnknownDecisionError(body.decision_id, "already committed")
            base = inference.score_configuration(session.config, session.bound, session.kb, session.weights)
            with_candidate = inference.score_configuration(
                set(session.config) | {body.decision_id}, session.bound, session.kb, session.weights
            )
            issues = sess.introduced_issues(session, body.decision_id)
            rationale = inference.build_rationale(
                session.kb.decisions[body.decision_id], session.config, session.bound, session.kb
            )
            return {
                "decision": body.decision_id,
                "score": with_candidate.minus(base).to_json_dict(),
                "new_total": with_candidate.total,
                "issues_introduced": [i.to_json_dict() for i in issues],
                "findings": [c.to_json_dict() for c in rationale.constraint_findings],
            }

    @app.post("/sessions/{session_id}/decisions")
    def commit(session_id: str, body: CommitBody):
        session, lock = get_session(session_id)
        with lock:
            check_version(session, body.version)
            sess.commit_decision(session, body.decision_id, body.override_note)
            persist(session)
            payload = _session_payload(session, kb_ids[session_id])
            payload["issues"] = [
                i.to_json_dict()
                for i in analysis.detect_incompatibilities(session.config, session.kb)
            ]
            return payload

    @app.delete("/sessions/{session_id}/decisions/{decision_id}")
    def retract(session_id: str, decision_id: str, version: int):
        session, lock = get_session(session_id)
        with lock:
            check_version(session, version)
            sess.retract_decision(session, decision_id)
            persist(session)
            return _session_payload(session, kb_ids[session_id])

    @app.post("/sessions/{session_id}/advance")
    def do_advance(session_id: str, body: AdvanceBody):
        session, lock = get_session(session_id)
        with lock:
            check_version(session, body.version)
            sess.advance(session)
            persist(session)
            return _session_payload(session, kb_ids[session_id])

    @app.get("/sessions/{session_id}/outcomes")
    def list_outcomes(session_id: str):
        session, _ = get_session(session_id)
        return {"version": session.version, "outcomes": [o.to_json_dict() for o in session.outcomes]}

    @app.post("/sessions/{session_id}/outcomes/{outcome_id}")
    def resolve(session_id: str, outcome_id: str, body: OutcomeBody):
        session, lock = get_session(session_id)
        with lock:
            check_version(session, body.version)
            sess.resolve_outcome(session, outcome_id, body.verdict, body.edited_statement)
            persist(session)
            return _session_payload(session, kb_ids[session_id])

    @app.get("/sessions/{session_id}/report")
    def report(session_id: str, request: Request):
        session, _ = get_session(session_id)
        document = sess.final_report(session)
        accept = request.headers.get("accept", "application/json")
        if "text/markdown" in accept:
            return Response(content=document.to_markdown(), media_type="text/markdown")
        return document.to_json_dict()

    @app.get("/sessions/{session_id}/analysis")
    def session_analysis(session_id: str):
        session, _ = get_session(session_id)
        report = analysis.analyze(session.config, session.bound, session.kb, session.threshold)
        return report.to_json_dict()

    if config.ui_dir and Path(config.ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app


def main(argv: Optional[list[str]] = None) -> int:
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(prog="archdesk-service")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--addr", help="host:port override")
    parser.add_argument("--kb-dir")
    parser.add_argument("--data-dir")
    parser.add_argument("--ui-dir")
    args = parser.parse_args(argv)

    config = ServiceConfig.load(args.config)
    if args.addr:
        config.addr = args.addr
    if args.kb_dir:
        config.kb_dir = args.kb_dir
    if args.data_dir:
        config.data_dir = args.data_dir
    if args.ui_dir:
        config.ui_dir = args.ui_dir

    host, _, port = config.addr.partition(":")
    uvicorn.run(create_app(config), host=host or "127.0.0.1", port=int(port or 8571))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
