"""The iterative design session: four phases, outcomes, fold-back, reports.

A session is event-sourced: every state change appends an event to the
journal and state is derived by applying it, so replaying the journal
against the same KB reproduces the session bit for bit. The decision log
exposed to reports is a view over the journal.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from typing import Optional

from . import analysis, inference, speclang
from .analysis import (
    KIND_DEPENDENCY,
    KIND_INCOMPATIBILITY,
    KIND_QR_VIOLATION,
    SPEC_OWNER,
    AnalysisReport,
    Issue,
    Suggestion,
)
from .errors import (
    AlreadyResolvedError,
    Diagnostic,
    NotCommittedError,
    OverrideNoteRequiredError,
    ParseError,
    PhaseError,
    SchemaError,
    UnknownDecisionError,
    UnknownOutcomeError,
    VersionMismatchError,
)
from .inference import ScoreWeights, build_rationale, generate_candidates
from .kb import KnowledgeBase
from .speclang import (
    ORIGIN_REFINEMENT,
    ArchSpec,
    BoundSpec,
    Comparator,
    PropertyConstraint,
    QualityRequirement,
    SpecStatement,
    UseStatement,
    bind_spec,
    parse_spec,
    serialize_spec,
    statement_key,
)

PHASES = ("specification", "inference", "decision_making", "refinement")

OUTCOME_KINDS = ("incompatibility", "dependency", "suggestion", "qr_violation")

_ISSUE_TO_OUTCOME = {
    KIND_INCOMPATIBILITY: "incompatibility",
    KIND_DEPENDENCY: "dependency",
    KIND_QR_VIOLATION: "qr_violation",
}


@dataclass
class OutcomeItem:
    id: str
    kind: str  # incompatibility | dependency | suggestion | qr_violation
    payload: dict  # JSON form of the originating Issue or Suggestion
    proposed_statements: tuple[SpecStatement, ...]
    status: str = "pending"  # pending | accepted | rejected
    origin_statement_index: Optional[int] = None  # set for qr_violation
    iteration: int = 1
    applied: bool = False

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "payload": self.payload,
            "proposed_statements": [s.render() for s in self.proposed_statements],
            "status": self.status,
            "origin_statement_index": self.origin_statement_index,
            "iteration": self.iteration,
        }

    def dedupe_key(self) -> tuple:
        return (self.kind, tuple(statement_key(s) for s in self.proposed_statements), self.payload.get("message"))


@dataclass
class DecisionLogEntry:
    decision_id: str
    action: str  # committed | retracted | overridden
    iteration: int
    override_note: Optional[str] = None

    def to_json_dict(self) -> dict:
        return {
            "decision": self.decision_id,
            "action": self.action,
            "iteration": self.iteration,
            "override_note": self.override_note,
        }


@dataclass
class Session:
    id: str
    kb: KnowledgeBase
    spec: ArchSpec
    bound: BoundSpec
    weights: ScoreWeights
    threshold: float = 0.5
    config: set = field(default_factory=set)
    iteration: int = 1
    phase: str = "specification"
    outcomes: list = field(default_factory=list)
    log: list = field(default_factory=list)
    events: list = field(default_factory=list)
    candidates: list = field(default_factory=list)
    history: list = field(default_factory=list)  # {"iteration", "spec_text"}
    ended: bool = False
    _outcome_seq: int = 0

    @property
    def kb_version(self) -> str:
        return self.kb.version

    @property
    def version(self) -> int:
        """Optimistic-concurrency token: the journal length."""
        return len(self.events)

    def spec_text(self) -> str:
        return serialize_spec(self.spec)

    def find_outcome(self, outcome_id: str) -> OutcomeItem:
        for outcome in self.outcomes:
            if outcome.id == outcome_id:
                return outcome
        raise UnknownOutcomeError(outcome_id)


# --- event application ---------------------------------------------------------


def _apply(session: Session, event: dict) -> None:
    kind = event["type"]
    if kind == "created":
        pass  # state set by new_session/replay before events are applied
    elif kind == "spec_updated":
        if session.phase != "specification":
            raise PhaseError(session.phase, "update spec")
        _set_spec(session, parse_spec(event["spec_text"]))
    elif kind == "advanced":
        _advance(session)
    elif kind == "committed":
        _commit(session, event["decision_id"], event.get("override_note"))
    elif kind == "retracted":
        _retract(session, event["decision_id"])
    elif kind == "outcome_resolved":
        _resolve(session, event["outcome_id"], event["verdict"], event.get("edited_statement"))
    elif kind == "ended":
        if session.phase not in ("decision_making", "refinement"):
            raise PhaseError(session.phase, "end session")
        session.ended = True
    else:
        raise SchemaError(f"unknown event type {kind!r}", "$.events")


def _record(session: Session, event: dict) -> None:
    """Validate by applying, then append to the journal."""
    _apply(session, event)
    session.events.append(event)


def _set_spec(session: Session, spec: ArchSpec, origins: Optional[list[str]] = None) -> None:
    if origins is not None:
        statements = tuple(
            _with_origin(stmt, origin) for stmt, origin in zip(spec.statements, origins)
        )
        spec = ArchSpec(statements=statements)
    session.bound = bind_spec(spec, session.kb)
    session.spec = spec


def _with_origin(stmt: SpecStatement, origin: str) -> SpecStatement:
    if stmt.origin == origin:
        return stmt
    cls = type(stmt)
    fields = {k: getattr(stmt, k) for k in ("origin", "source_text")}
    fields["origin"] = origin
    if isinstance(stmt, UseStatement):
        return UseStatement(stmt.kind_name, **fields)
    if isinstance(stmt, PropertyConstraint):
        return PropertyConstraint(stmt.property_name, stmt.comparator, stmt.values, **fields)
    return QualityRequirement(stmt.attribute_name, stmt.comparator, stmt.level, **fields)


def _advance(session: Session) -> None:
    index = PHASES.index(session.phase)
    nxt = PHASES[(index + 1) % len(PHASES)]
    if nxt == "inference":
        session.bound = bind_spec(session.spec, session.kb)
        session.candidates = generate_candidates(
            session.config, session.bound, session.kb, session.weights
        )
    elif nxt == "refinement":
        report = analysis.analyze(session.config, session.bound, session.kb, session.threshold)
        _materialize_outcomes(session, report)
    elif nxt == "specification":
        _fold_back(session)
        session.iteration += 1
        session.history.append({"iteration": session.iteration, "spec_text": session.spec_text()})
        session.candidates = []
    session.phase = nxt


def _materialize_outcomes(session: Session, report: AnalysisReport) -> None:
    seen = {o.dedupe_key() for o in session.outcomes}
    existing_statements = {statement_key(s) for s in session.spec.statements}

    def add(kind: str, payload: dict, statements: tuple, origin_index: Optional[int] = None) -> None:
        item = OutcomeItem(
            id="",  # assigned below
            kind=kind,
            payload=payload,
            proposed_statements=statements,
            origin_statement_index=origin_index,
            iteration=session.iteration,
        )
        key = item.dedupe_key()
        if key in seen:
            return
        if statements and origin_index is None and all(statement_key(s) in existing_statements for s in statements):
            return
        seen.add(key)
        session._outcome_seq += 1
        item.id = f"o{session._outcome_seq}"
        session.outcomes.append(item)

    for issue in report.issues:
        kind = _ISSUE_TO_OUTCOME[issue.kind]
        if issue.kind == KIND_INCOMPATIBILITY:
            add(kind, issue.to_json_dict(), _translate_incompatibility(session, issue))
        elif issue.kind == KIND_QR_VIOLATION:
            statement, index = _originating_qr(session, issue)
            add(kind, issue.to_json_dict(), (statement,), origin_index=index)
        else:
            if issue.data["owner"] == SPEC_OWNER:
                continue  # the use-statement is already in the spec
            add(kind, issue.to_json_dict(), _translate_dependency(session, issue))
    for suggestion in report.suggestions:
        add("suggestion", suggestion.to_json_dict(), (suggestion.proposed_statement,))


def _translate_incompatibility(session: Session, issue: Issue) -> tuple:
    data = issue.data
    if data.get("variant") == "slot":
        loser = _later_committed(session, data["a"], data["b"])
        element_id = data["element_a"] if loser == data["a"] else data["element_b"]
        kind = session.kb.kinds[data["kind"]]
        return (
            PropertyConstraint(
                property_name=kind.display_name,
                comparator=Comparator.EXCLUDES,
                values=(element_id,),
            ),
        )
    if data.get("variant") == "dependency":
        return (parse_spec(data["predicate"]).statements[0],)
    # declared decision pair: no constraint-level translation exists
    return ()


def _later_committed(session: Session, a: str, b: str) -> str:
    last = {a: -1, b: -1}
    for i, event in enumerate(session.events):
        if event["type"] == "committed" and event["decision_id"] in last:
            last[event["decision_id"]] = i
    return a if last[a] >= last[b] else b


def _translate_dependency(session: Session, issue: Issue) -> tuple:
    kind = session.kb.kinds[issue.data["kind"]]
    statements: list[SpecStatement] = [UseStatement(kind_name=kind.display_name)]
    if issue.data.get("predicate"):
        statements.append(parse_spec(issue.data["predicate"]).statements[0])
    return tuple(statements)


def _originating_qr(session: Session, issue: Issue) -> tuple[QualityRequirement, int]:
    for idx, stmt, attr_id in session.bound.quality_requirements():
        if attr_id == issue.data["attribute"] and stmt.render() == issue.data["requirement"]:
            return stmt, idx
    raise UnknownOutcomeError(issue.data["requirement"])  # unreachable for engine-made issues


def _folded_spec(session: Session, overrides: Optional[dict] = None) -> ArchSpec:
    """The spec after applying every accepted-but-unapplied outcome.

    `overrides` maps outcome id -> replacement statements, letting a
    pending edit be validated as if it were already accepted.
    """
    overrides = overrides or {}
    statements = list(session.spec.statements)
    replacements: dict[int, SpecStatement] = {}
    additions: list[SpecStatement] = []
    for outcome in session.outcomes:
        accepted = outcome.status == "accepted" or outcome.id in overrides
        if not accepted or outcome.applied:
            continue
        proposed = overrides.get(outcome.id, outcome.proposed_statements)
        injected = [_with_origin(s, ORIGIN_REFINEMENT) for s in proposed]
        if outcome.kind == "qr_violation" and outcome.origin_statement_index is not None:
            if injected:
                replacements[outcome.origin_statement_index] = injected[0]
                additions.extend(injected[1:])
        else:
            additions.extend(injected)

    new_statements: list[SpecStatement] = [
        replacements.get(i, stmt) for i, stmt in enumerate(statements)
    ]
    present = {statement_key(s) for s in new_statements}
    for stmt in additions:
        if statement_key(stmt) in present:
            continue
        present.add(statement_key(stmt))
        new_statements.append(stmt)
    return ArchSpec(statements=tuple(new_statements))


def _fold_back(session: Session) -> None:
    # bind before mutating any outcome: edits were validated jointly at
    # resolve time, so this never raises for engine-produced statements
    _set_spec(session, _folded_spec(session))
    for outcome in session.outcomes:
        if outcome.status == "accepted":
            outcome.applied = True


def _commit(session: Session, decision_id: str, override_note: Optional[str]) -> None:
    if session.phase != "decision_making":
        raise PhaseError(session.phase, "commit decision")
    if decision_id not in session.kb.decisions:
        raise UnknownDecisionError(decision_id)
    if decision_id in session.config:
        raise UnknownDecisionError(decision_id, "already committed")

    top = session.candidates[0].decision_id if session.candidates else None
    is_override = top is not None and decision_id != top
    if is_override and not override_note:
        raise OverrideNoteRequiredError(decision_id, top)

    session.config.add(decision_id)
    session.log.append(
        DecisionLogEntry(
            decision_id=decision_id,
            action="overridden" if is_override else "committed",
            iteration=session.iteration,
            override_note=override_note if is_override else None,
        )
    )
    session.candidates = generate_candidates(
        session.config, session.bound, session.kb, session.weights
    )


def _retract(session: Session, decision_id: str) -> None:
    if decision_id not in session.config:
        raise NotCommittedError(decision_id)
    session.config.discard(decision_id)
    session.log.append(
        DecisionLogEntry(decision_id=decision_id, action="retracted", iteration=session.iteration)
    )
    if session.phase in ("inference", "decision_making"):
        session.candidates = generate_candidates(
            session.config, session.bound, session.kb, session.weights
        )


def _resolve(
    session: Session, outcome_id: str, verdict: str, edited_statement: Optional[str]
) -> None:
    if session.phase not in ("refinement", "specification"):
        raise PhaseError(session.phase, "resolve outcome")
    outcome = session.find_outcome(outcome_id)
    if outcome.status != "pending":
        raise AlreadyResolvedError(outcome_id, outcome.status)
    if verdict not in ("accepted", "rejected"):
        raise SchemaError(f"verdict must be accepted or rejected, got {verdict!r}")
    if verdict == "accepted" and edited_statement is not None:
        parsed = parse_spec(edited_statement)
        if len(parsed.statements) != 1:
            raise ParseError(
                [Diagnostic(1, 1, f"expected exactly one statement, got {edited_statement!r}")]
            )
        replacement = parsed.statements[0]
        _validate_prospective(session, outcome, replacement)
        outcome.proposed_statements = (replacement,)
    outcome.status = verdict


def _validate_prospective(session: Session, outcome: OutcomeItem, stmt: SpecStatement) -> None:
    """The edit must bind cleanly into the spec as it will look after
    fold-back, other accepted edits included."""
    bind_spec(_folded_spec(session, overrides={outcome.id: (stmt,)}), session.kb)


# --- public operations -----------------------------------------------------------


def new_session(
    kb: KnowledgeBase,
    spec_text: str,
    weights: ScoreWeights = ScoreWeights(),
    threshold: float = 0.5,
    session_id: Optional[str] = None,
) -> Session:
    """Start a session at iteration 1, phase specification.

    Parse and bind errors propagate; bind warnings are tolerated.
    """
    spec = parse_spec(spec_text)
    session = Session(
        id=session_id or f"session-{uuid.uuid4().hex[:12]}",
        kb=kb,
        spec=spec,
        bound=bind_spec(spec, kb),
        weights=weights,
        threshold=threshold,
    )
    session.history.append({"iteration": 1, "spec_text": session.spec_text()})
    _record(
        session,
        {
            "type": "created",
            "id": session.id,
            "spec_text": spec_text,
            "weights": weights.to_json_dict(),
            "threshold": threshold,
        },
    )
    return session


def update_spec(session: Session, spec_text: str) -> Session:
    _record(session, {"type": "spec_updated", "spec_text": spec_text})
    session.history[-1] = {"iteration": session.iteration, "spec_text": session.spec_text()}
    return session


def advance(session: Session) -> Session:
    _record(session, {"type": "advanced"})
    return session


def commit_decision(session: Session, decision_id: str, override_note: Optional[str] = None) -> Session:
    event: dict = {"type": "committed", "decision_id": decision_id}
    if override_note:
        event["override_note"] = override_note
    _record(session, event)
    return session


def retract_decision(session: Session, decision_id: str) -> Session:
    _record(session, {"type": "retracted", "decision_id": decision_id})
    return session


def resolve_outcome(
    session: Session,
    outcome_id: str,
    verdict: str,
    edited_statement: Optional[str] = None,
) -> Session:
    event: dict = {"type": "outcome_resolved", "outcome_id": outcome_id, "verdict": verdict}
    if edited_statement is not None:
        event["edited_statement"] = edited_statement
    _record(session, event)
    return session


def end_session(session: Session) -> Session:
    _record(session, {"type": "ended"})
    return session


def introduced_issues(session: Session, decision_id: str) -> list[Issue]:
    """Incompatibilities a commit of `decision_id` would add right now."""
    before = analysis.detect_incompatibilities(session.config, session.kb)
    after = analysis.detect_incompatibilities(set(session.config) | {decision_id}, session.kb)
    before_set = {(i.kind, i.refs) for i in before}
    return [i for i in after if (i.kind, i.refs) not in before_set]


# --- report and persistence -------------------------------------------------------


@dataclass(frozen=True)
class ReportDocument:
    session_id: str
    kb_version: str
    iteration: int
    phase: str
    spec_text: str
    decisions: tuple[dict, ...]
    log: tuple[dict, ...]
    analysis_report: AnalysisReport
    history: tuple[dict, ...]

    def to_json_dict(self) -> dict:
        return {
            "session": self.session_id,
            "kb_version": self.kb_version,
            "iteration": self.iteration,
            "phase": self.phase,
            "spec_text": self.spec_text,
            "decisions": list(self.decisions),
            "log": list(self.log),
            "analysis": self.analysis_report.to_json_dict(),
            "history": list(self.history),
        }

    def to_markdown(self) -> str:
        lines = [f"# Session report: {self.session_id}", ""]
        lines.append(f"Knowledge base version: {self.kb_version}")
        lines.append(f"Iteration: {self.iteration} (phase: {self.phase})")
        lines.append("")
        lines.append("## Specification")
        lines.append("")
        lines.append("```")
        lines.append(self.spec_text or "(empty)")
        lines.append("```")
        lines.append("")
        lines.append("## Committed decisions")
        lines.append("")
        if not self.decisions:
            lines.append("(none)")
        for entry in self.decisions:
            lines.append(f"### {entry['display_name']} (`{entry['decision']}`)")
            rationale = entry["rationale"]
            for title, key in (
                ("Offered because", "offered_because"),
                ("Impacts", "impact_summary"),
                ("Obligations", "obligations"),
                ("Constraint findings", "constraint_findings"),
            ):
                clauses = rationale[key]
                if clauses:
                    lines.append(f"- {title}:")
                    for clause in clauses:
                        lines.append(f"  - {clause['text']}")
            lines.append("")
        lines.append("## Decision log")
        lines.append("")
        if not self.log:
            lines.append("(empty)")
        for entry in self.log:
            line = f"- iteration {entry['iteration']}: {entry['action']} `{entry['decision']}`"
            if entry.get("override_note"):
                line += f" — note: {entry['override_note']}"
            lines.append(line)
        lines.append("")
        lines.append("## Evaluation")
        lines.append("")
        for ev in self.analysis_report.evaluations:
            lines.append(f"- {ev.attribute_id}: predicted {ev.predicted.text}")
        if self.analysis_report.issues:
            lines.append("")
            lines.append("## Open issues")
            lines.append("")
            for issue in self.analysis_report.issues:
                lines.append(f"- [{issue.severity}] {issue.message}")
        if self.history:
            lines.append("")
            lines.append("## Iteration history")
            lines.append("")
            for entry in self.history:
                lines.append(f"### Iteration {entry['iteration']}")
                lines.append("```")
                lines.append(entry["spec_text"] or "(empty)")
                lines.append("```")
        return "\n".join(lines) + "\n"


def final_report(session: Session) -> ReportDocument:
    """Committed decisions with rationale, the log, and a fresh analysis."""
    report = analysis.analyze(session.config, session.bound, session.kb, session.threshold)
    decisions = []
    for did in sorted(session.config):
        decision = session.kb.decisions[did]
        rationale = build_rationale(decision, session.config - {did}, session.bound, session.kb)
        decisions.append(
            {
                "decision": did,
                "display_name": decision.display_name,
                "rationale": rationale.to_json_dict(),
            }
        )
    return ReportDocument(
        session_id=session.id,
        kb_version=session.kb_version,
        iteration=session.iteration,
        phase=session.phase,
        spec_text=session.spec_text(),
        decisions=tuple(decisions),
        log=tuple(entry.to_json_dict() for entry in session.log),
        analysis_report=report,
        history=tuple(session.history),
    )


SESSION_DOC_KEYS = ("id", "kb_version", "spec_text", "log", "outcomes", "weights", "iteration", "phase", "events")


def save_session(session: Session) -> dict:
    """JSON-ready session document; the journal makes it replayable."""
    return {
        "id": session.id,
        "kb_version": session.kb_version,
        "spec_text": session.spec_text(),
        "spec_origins": [s.origin for s in session.spec.statements],
        "log": [entry.to_json_dict() for entry in session.log],
        "outcomes": [o.to_json_dict() for o in session.outcomes],
        "weights": session.weights.to_json_dict(),
        "threshold": session.threshold,
        "iteration": session.iteration,
        "phase": session.phase,
        "events": list(session.events),
        "history": list(session.history),
        "ended": session.ended,
    }


def replay_session(kb: KnowledgeBase, events: list[dict]) -> Session:
    """Rebuild a session by applying its journal from scratch."""
    if not events or events[0].get("type") != "created":
        raise SchemaError("journal must start with a 'created' event", "$.events")
    head = events[0]
    session = new_session(
        kb,
        head["spec_text"],
        weights=ScoreWeights.from_json_dict(head.get("weights", {})),
        threshold=head.get("threshold", 0.5),
        session_id=head["id"],
    )
    for event in events[1:]:
        _record(session, event)
    return session


def load_session(document: dict, kb: KnowledgeBase) -> Session:
    """Rebuild a session from a document, verifying the KB version."""
    if not isinstance(document, dict):
        raise SchemaError("session document must be an object")
    missing = [k for k in SESSION_DOC_KEYS if k not in document]
    if missing:
        raise SchemaError(f"missing required fields: {', '.join(missing)}")
    if document["kb_version"] != kb.version:
        raise VersionMismatchError(expected=kb.version, found=document["kb_version"])
    return replay_session(kb, document["events"])
