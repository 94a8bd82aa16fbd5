"""Issue detection and quality evaluation over a committed configuration.

Everything here is a pure function of (configuration set, bound spec, KB);
commit order never matters. Issues are reported, never enforced: the
architect can always continue with open conflicts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Optional

from .kb import Decision, Element, KnowledgeBase
from .speclang import (
    BoundSpec,
    Comparator,
    OrdinalLevel,
    PropertyConstraint,
    QualityRequirement,
    UseStatement,
    Verdict,
    eval_property_constraint,
    statement_key,
)

SPEC_OWNER = "specification"  # synthetic owner for use-statement obligations

SEVERITY_ERROR = "error"
SEVERITY_WARNING = "warning"

KIND_INCOMPATIBILITY = "incompatibility"
KIND_DEPENDENCY = "unresolved_dependency"
KIND_QR_VIOLATION = "qr_violation"


@dataclass(frozen=True)
class QaEvaluation:
    attribute_id: str
    predicted: OrdinalLevel
    aggregate_valence: int
    contributing: tuple[tuple[str, object], ...]  # (decision id, Impact)

    def to_json_dict(self) -> dict:
        return {
            "attribute": self.attribute_id,
            "predicted": self.predicted.text,
            "aggregate_valence": self.aggregate_valence,
            "contributing": [
                {
                    "decision": did,
                    "valence": imp.valence,
                    "certainty": imp.certainty,
                    "note": imp.note,
                }
                for did, imp in self.contributing
            ],
        }


@dataclass(frozen=True)
class Issue:
    kind: str
    severity: str
    refs: tuple[str, ...]
    message: str
    data: dict = field(default_factory=dict, compare=False)

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "severity": self.severity,
            "refs": list(self.refs),
            "message": self.message,
            "data": dict(self.data),
        }


@dataclass(frozen=True)
class Suggestion:
    attribute_id: str
    supporting_decisions: tuple[str, ...]
    proposed_statement: QualityRequirement

    def to_json_dict(self) -> dict:
        return {
            "attribute": self.attribute_id,
            "supporting_decisions": list(self.supporting_decisions),
            "proposed_statement": self.proposed_statement.render(),
        }


@dataclass(frozen=True)
class AnalysisReport:
    issues: tuple[Issue, ...]
    suggestions: tuple[Suggestion, ...]
    evaluations: tuple[QaEvaluation, ...]

    def to_json_dict(self) -> dict:
        return {
            "issues": [i.to_json_dict() for i in self.issues],
            "suggestions": [s.to_json_dict() for s in self.suggestions],
            "evaluations": [e.to_json_dict() for e in self.evaluations],
        }


def _selected_elements(config: Iterable[str], kb: KnowledgeBase) -> list[tuple[Decision, Element]]:
    out = []
    for did in sorted(config):
        decision = kb.decisions[did]
        if decision.selects:
            out.append((decision, kb.elements[decision.selects]))
    return out


def _conforms(element: Element, predicate: Optional[PropertyConstraint]) -> bool:
    """A dependency is satisfiable by an element unless the predicate is
    outright violated; missing knowledge does not disqualify."""
    if predicate is None:
        return True
    return eval_property_constraint(predicate, element) is not Verdict.VIOLATED


def detect_incompatibilities(config: Iterable[str], kb: KnowledgeBase) -> list[Issue]:
    """Error-severity conflicts inside the committed configuration.

    Three sources: explicit decision-pair incompatibility, a dependency
    predicate violated by a committed element of the required kind, and two
    decisions selecting different elements of the same kind (slot conflict).
    """
    config = sorted(set(config))
    issues: list[Issue] = []

    for a, b in combinations(config, 2):
        if b in kb.decisions[a].incompatible_with:
            issues.append(
                Issue(
                    kind=KIND_INCOMPATIBILITY,
                    severity=SEVERITY_ERROR,
                    refs=(f"decision:{a}", f"decision:{b}"),
                    message=f"{kb.decisions[a].display_name} is declared incompatible with {kb.decisions[b].display_name}",
                    data={"variant": "declared", "a": a, "b": b},
                )
            )

    selected = _selected_elements(config, kb)
    for did in config:
        for dep in kb.decisions[did].dependencies:
            if dep.predicate is None:
                continue
            for other, element in selected:
                if element.kind_id != dep.kind_id:
                    continue
                if eval_property_constraint(dep.predicate, element) is Verdict.VIOLATED:
                    issues.append(
                        Issue(
                            kind=KIND_INCOMPATIBILITY,
                            severity=SEVERITY_ERROR,
                            refs=(f"decision:{did}", f"element:{element.id}", f"decision:{other.id}"),
                            message=(
                                f"{kb.decisions[did].display_name} requires {kb.kinds[dep.kind_id].display_name} "
                                f"with {dep.predicate.render()}, violated by {element.display_name}"
                            ),
                            data={
                                "variant": "dependency",
                                "owner": did,
                                "element": element.id,
                                "selector": other.id,
                                "predicate": dep.predicate.render(),
                                "kind": dep.kind_id,
                            },
                        )
                    )

    for (da, ea), (db, eb) in combinations(selected, 2):
        if ea.kind_id == eb.kind_id and ea.id != eb.id:
            issues.append(
                Issue(
                    kind=KIND_INCOMPATIBILITY,
                    severity=SEVERITY_ERROR,
                    refs=(f"decision:{da.id}", f"decision:{db.id}", f"kind:{ea.kind_id}"),
                    message=(
                        f"both {ea.display_name} and {eb.display_name} are selected "
                        f"for the {kb.kinds[ea.kind_id].display_name} slot"
                    ),
                    data={
                        "variant": "slot",
                        "a": da.id,
                        "b": db.id,
                        "element_a": ea.id,
                        "element_b": eb.id,
                        "kind": ea.kind_id,
                    },
                )
            )

    issues.sort(key=lambda i: (i.data.get("variant", ""), i.refs))
    return issues


def detect_dependencies(config: Iterable[str], spec: BoundSpec, kb: KnowledgeBase) -> list[Issue]:
    """Open obligations: decision dependencies and spec use-statements with
    no conforming committed selection of the required kind."""
    config = sorted(set(config))
    selected = _selected_elements(config, kb)
    issues: list[Issue] = []

    def fulfilled(kind_id: str, predicate: Optional[PropertyConstraint]) -> bool:
        return any(
            element.kind_id == kind_id and _conforms(element, predicate)
            for _, element in selected
        )

    for did in config:
        for dep in kb.decisions[did].dependencies:
            if fulfilled(dep.kind_id, dep.predicate):
                continue
            detail = dep.label or kb.kinds[dep.kind_id].display_name
            message = f"{kb.decisions[did].display_name} needs a {kb.kinds[dep.kind_id].display_name} selection"
            if dep.predicate is not None:
                message += f" satisfying {dep.predicate.render()}"
            message += f" ({detail})"
            issues.append(
                Issue(
                    kind=KIND_DEPENDENCY,
                    severity=SEVERITY_WARNING,
                    refs=(f"decision:{did}", f"kind:{dep.kind_id}"),
                    message=message,
                    data={
                        "owner": did,
                        "kind": dep.kind_id,
                        "predicate": dep.predicate.render() if dep.predicate else None,
                        "label": dep.label,
                    },
                )
            )

    for idx, stmt, kind_id in spec.use_statements():
        if fulfilled(kind_id, None):
            continue
        issues.append(
            Issue(
                kind=KIND_DEPENDENCY,
                severity=SEVERITY_WARNING,
                refs=(f"spec:{statement_key(stmt)}", f"kind:{kind_id}"),
                message=f"the specification asks for a {kb.kinds[kind_id].display_name} but none is selected",
                data={"owner": SPEC_OWNER, "kind": kind_id, "predicate": None, "label": stmt.render()},
            )
        )

    issues.sort(key=lambda i: i.refs)
    return issues


def evaluate_quality(
    config: Iterable[str], spec: BoundSpec, kb: KnowledgeBase
) -> tuple[list[QaEvaluation], list[Issue]]:
    """Predicted level per touched attribute, plus QR violations.

    Predicted = clamp(AVERAGE + clamp(sum of certain valences, -2, +2));
    possible/conditional impacts are listed as contributing but not summed.
    """
    config = sorted(set(config))
    touched: set[str] = set()
    contributions: dict[str, list[tuple[str, object]]] = {}
    sums: dict[str, int] = {}
    for did in config:
        for impact in kb.decisions[did].impacts:
            touched.add(impact.attribute_id)
            contributions.setdefault(impact.attribute_id, []).append((did, impact))
            if impact.certainty == "certain":
                sums[impact.attribute_id] = sums.get(impact.attribute_id, 0) + impact.valence

    qrs = spec.quality_requirements()
    for _, _, attr_id in qrs:
        touched.add(attr_id)

    evaluations: list[QaEvaluation] = []
    by_attr: dict[str, QaEvaluation] = {}
    for attr_id in sorted(touched):
        aggregate = max(-2, min(2, sums.get(attr_id, 0)))
        predicted = OrdinalLevel(max(0, min(4, int(OrdinalLevel.AVERAGE) + aggregate)))
        evaluation = QaEvaluation(
            attribute_id=attr_id,
            predicted=predicted,
            aggregate_valence=aggregate,
            contributing=tuple(contributions.get(attr_id, ())),
        )
        evaluations.append(evaluation)
        by_attr[attr_id] = evaluation

    violations: list[Issue] = []
    for _, stmt, attr_id in qrs:
        evaluation = by_attr[attr_id]
        if stmt.comparator.holds(int(evaluation.predicted), int(stmt.level)):
            continue
        violations.append(
            Issue(
                kind=KIND_QR_VIOLATION,
                severity=SEVERITY_ERROR,
                refs=(f"attribute:{attr_id}", f"spec:{statement_key(stmt)}"),
                message=(
                    f"{kb.attributes[attr_id].display_name} is predicted "
                    f"{evaluation.predicted.text!r} but the specification requires "
                    f"{stmt.comparator.value} {stmt.level.text!r}"
                ),
                data={
                    "attribute": attr_id,
                    "predicted": evaluation.predicted.text,
                    "requirement": stmt.render(),
                },
            )
        )
    violations.sort(key=lambda i: i.refs)
    return evaluations, violations


def suggest_qrs(
    config: Iterable[str], spec: BoundSpec, kb: KnowledgeBase, threshold: float = 0.5
) -> list[Suggestion]:
    """Propose a QR for attributes the committed decisions collectively push
    up while the spec says nothing about them."""
    if not 0 < threshold <= 1:
        raise ValueError("threshold must be in (0, 1]")
    config = sorted(set(config))
    if not config:
        return []
    constrained = {attr_id for _, _, attr_id in spec.quality_requirements()}
    supporters: dict[str, list[str]] = {}
    for did in config:
        for impact in kb.decisions[did].impacts:
            if impact.valence > 0:
                supporters.setdefault(impact.attribute_id, [])
                if did not in supporters[impact.attribute_id]:
                    supporters[impact.attribute_id].append(did)

    suggestions: list[Suggestion] = []
    for attr_id in sorted(supporters):
        if attr_id in constrained:
            continue
        backing = supporters[attr_id]
        if len(backing) < 2 or len(backing) < threshold * len(config):
            continue
        proposed = QualityRequirement(
            attribute_name=kb.attributes[attr_id].display_name,
            comparator=Comparator.AT_LEAST,
            level=OrdinalLevel.HIGH,
        )
        suggestions.append(
            Suggestion(
                attribute_id=attr_id,
                supporting_decisions=tuple(sorted(backing)),
                proposed_statement=proposed,
            )
        )
    return suggestions


def analyze(
    config: Iterable[str], spec: BoundSpec, kb: KnowledgeBase, threshold: float = 0.5
) -> AnalysisReport:
    """Full report: incompatibilities, QR violations, open dependencies,
    suggestions, and per-attribute evaluations, in stable order."""
    incompatibilities = detect_incompatibilities(config, kb)
    evaluations, violations = evaluate_quality(config, spec, kb)
    dependencies = detect_dependencies(config, spec, kb)
    suggestions = suggest_qrs(config, spec, kb, threshold)
    return AnalysisReport(
        issues=tuple(incompatibilities + violations + dependencies),
        suggestions=tuple(suggestions),
        evaluations=tuple(evaluations),
    )
