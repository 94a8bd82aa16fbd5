"""Candidate generation, scoring, rationale, and configuration search.

The priority criterion is a weighted sum over constraint verdicts, met
quality requirements, forward compatibility, and introduced conflicts.
UNKNOWN verdicts contribute nothing: missing knowledge never penalizes.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Iterable, Optional

from . import analysis
from .errors import ParamError
from .kb import Decision, Element, KnowledgeBase
from .speclang import (
    BoundSpec,
    Comparator,
    PropertyConstraint,
    QualityRequirement,
    UseStatement,
    Verdict,
    eval_property_constraint,
    explain_property_constraint,
    statement_key,
)


@dataclass(frozen=True)
class ScoreWeights:
    w_satisfied: float = 10
    w_violated: float = -20
    w_qr: float = 4
    w_compat: float = 2
    w_issue: float = -15

    def __post_init__(self):
        if not self.w_satisfied > 0:
            raise ValueError("w_satisfied must be positive")
        if not self.w_violated < 0:
            raise ValueError("w_violated must be negative")
        if self.w_qr < 0 or self.w_compat < 0:
            raise ValueError("w_qr and w_compat must be non-negative")
        if self.w_issue > 0:
            raise ValueError("w_issue must be non-positive")

    def to_json_dict(self) -> dict:
        return {
            "w_satisfied": self.w_satisfied,
            "w_violated": self.w_violated,
            "w_qr": self.w_qr,
            "w_compat": self.w_compat,
            "w_issue": self.w_issue,
        }

    @staticmethod
    def from_json_dict(doc: dict) -> "ScoreWeights":
        defaults = ScoreWeights()
        return ScoreWeights(
            **{
                name: doc.get(name, getattr(defaults, name))
                for name in ("w_satisfied", "w_violated", "w_qr", "w_compat", "w_issue")
            }
        )


@dataclass(frozen=True)
class ScoreBreakdown:
    satisfied_count: int = 0
    violated_count: int = 0
    unknown_count: int = 0
    qr_met_count: int = 0
    compat_count: int = 0
    introduced_issues: int = 0
    total: float = 0

    def minus(self, other: "ScoreBreakdown") -> "ScoreBreakdown":
        return ScoreBreakdown(
            satisfied_count=self.satisfied_count - other.satisfied_count,
            violated_count=self.violated_count - other.violated_count,
            unknown_count=self.unknown_count - other.unknown_count,
            qr_met_count=self.qr_met_count - other.qr_met_count,
            compat_count=self.compat_count - other.compat_count,
            introduced_issues=self.introduced_issues - other.introduced_issues,
            total=self.total - other.total,
        )

    def to_json_dict(self) -> dict:
        return {
            "satisfied": self.satisfied_count,
            "violated": self.violated_count,
            "unknown": self.unknown_count,
            "qr_met": self.qr_met_count,
            "compat": self.compat_count,
            "introduced_issues": self.introduced_issues,
            "total": self.total,
        }


@dataclass(frozen=True)
class Clause:
    text: str
    refs: tuple[str, ...]

    def to_json_dict(self) -> dict:
        return {"text": self.text, "refs": list(self.refs)}


@dataclass(frozen=True)
class Rationale:
    offered_because: tuple[Clause, ...]
    impact_summary: tuple[Clause, ...]
    obligations: tuple[Clause, ...]
    constraint_findings: tuple[Clause, ...]

    def to_json_dict(self) -> dict:
        return {
            "offered_because": [c.to_json_dict() for c in self.offered_because],
            "impact_summary": [c.to_json_dict() for c in self.impact_summary],
            "obligations": [c.to_json_dict() for c in self.obligations],
            "constraint_findings": [c.to_json_dict() for c in self.constraint_findings],
        }


@dataclass(frozen=True)
class CandidateDecision:
    decision_id: str
    display_name: str
    rationale: Rationale
    score: ScoreBreakdown  # marginal against the current configuration
    rank: int

    def to_json_dict(self) -> dict:
        return {
            "rank": self.rank,
            "decision": self.decision_id,
            "display_name": self.display_name,
            "score": self.score.to_json_dict(),
            "rationale": self.rationale.to_json_dict(),
        }


def _int_total(value: float) -> float:
    return int(value) if float(value).is_integer() else value


def score_configuration(
    config: Iterable[str],
    spec: BoundSpec,
    kb: KnowledgeBase,
    weights: ScoreWeights = ScoreWeights(),
) -> ScoreBreakdown:
    """Absolute breakdown for a set of committed decisions.

    Constraint verdicts are evaluated on each selected element whose kind
    carries the constrained property; compat counts distinct KB elements
    compatible with at least one selected element and violating nothing.
    """
    config = sorted(set(config))
    selected = [
        kb.elements[kb.decisions[did].selects]
        for did in config
        if kb.decisions[did].selects
    ]
    constraints = [stmt for _, stmt in spec.property_constraints()]

    satisfied = violated = unknown = 0
    for constraint in constraints:
        carriers = kb.carriers(constraint.property_name)
        for element in selected:
            if element.kind_id not in carriers:
                continue
            verdict = eval_property_constraint(constraint, element)
            satisfied += verdict is Verdict.SATISFIED
            violated += verdict is Verdict.VIOLATED
            unknown += verdict is Verdict.UNKNOWN

    evaluations, violations = analysis.evaluate_quality(config, spec, kb)
    qr_met = len(spec.quality_requirements()) - len(violations)

    compat_ids: set[str] = set()
    for element in selected:
        compat_ids |= element.compatible_with
    compat = 0
    for cid in sorted(compat_ids):
        candidate = kb.elements[cid]
        if all(eval_property_constraint(c, candidate) is not Verdict.VIOLATED for c in constraints):
            compat += 1

    introduced = len(analysis.detect_incompatibilities(config, kb))
    total = (
        weights.w_satisfied * satisfied
        + weights.w_violated * violated
        + weights.w_qr * qr_met
        + weights.w_compat * compat
        + weights.w_issue * introduced
    )
    return ScoreBreakdown(
        satisfied_count=satisfied,
        violated_count=violated,
        unknown_count=unknown,
        qr_met_count=qr_met,
        compat_count=compat,
        introduced_issues=introduced,
        total=_int_total(total),
    )


def _trigger_matches(decision: Decision, spec: BoundSpec) -> list[Clause]:
    """Clauses for every offered_when trigger matched by the spec."""
    trigger = decision.offered_when
    if not trigger:
        return []
    clauses = []
    if "attribute" in trigger:
        attr_id = trigger["attribute"]
        for _, stmt, bound_attr in spec.quality_requirements():
            if bound_attr == attr_id and stmt.comparator.is_lower_bound:
                clauses.append(
                    Clause(
                        text=f"the specification requires {stmt.render()}",
                        refs=(f"attribute:{attr_id}", f"spec:{statement_key(stmt)}"),
                    )
                )
    if "constraint" in trigger:
        from .speclang import normalize_name, parse_spec

        pattern = parse_spec(trigger["constraint"]).statements[0]
        for _, stmt in spec.property_constraints():
            if normalize_name(stmt.property_name) == normalize_name(pattern.property_name):
                clauses.append(
                    Clause(
                        text=f"the specification constrains {stmt.property_name}: {stmt.render()}",
                        refs=(f"decision:{decision.id}", f"spec:{statement_key(stmt)}"),
                    )
                )
    return clauses


def _open_slots(config: list[str], spec: BoundSpec, kb: KnowledgeBase) -> set[str]:
    """Kinds demanded by use-statements with no committed selection."""
    filled = {
        kb.elements[kb.decisions[did].selects].kind_id
        for did in config
        if kb.decisions[did].selects
    }
    return {kind_id for _, _, kind_id in spec.use_statements() if kind_id not in filled}


def _open_dependencies(config: list[str], spec: BoundSpec, kb: KnowledgeBase) -> list:
    issues = analysis.detect_dependencies(config, spec, kb)
    return [i for i in issues if i.data["owner"] != analysis.SPEC_OWNER]


def _is_offered(
    decision: Decision,
    config: list[str],
    spec: BoundSpec,
    kb: KnowledgeBase,
    open_slots: set[str],
    open_deps: list,
) -> bool:
    if decision.id in config:
        return False
    if _trigger_matches(decision, spec):
        return True
    if decision.selects:
        element = kb.elements[decision.selects]
        if element.kind_id in open_slots:
            return True
        for issue in open_deps:
            if issue.data["kind"] != element.kind_id:
                continue
            predicate_text = issue.data.get("predicate")
            if predicate_text is None:
                return True
            from .speclang import parse_spec

            predicate = parse_spec(predicate_text).statements[0]
            if eval_property_constraint(predicate, element) is not Verdict.VIOLATED:
                return True
    return False


def build_rationale(
    decision: Decision,
    config: Iterable[str],
    spec: BoundSpec,
    kb: KnowledgeBase,
) -> Rationale:
    """Descriptive three-part explanation, every clause tied to KB/spec ids."""
    config = sorted(set(config))
    offered: list[Clause] = list(_trigger_matches(decision, spec))

    element = kb.elements[decision.selects] if decision.selects else None
    if element is not None:
        open_slots = _open_slots(config, spec, kb)
        for idx, stmt, kind_id in spec.use_statements():
            if kind_id == element.kind_id and kind_id in open_slots:
                offered.append(
                    Clause(
                        text=f"fills the open {stmt.render()!r} request with {element.display_name}",
                        refs=(f"spec:{statement_key(stmt)}", f"element:{element.id}"),
                    )
                )
        for issue in _open_dependencies(config, spec, kb):
            if issue.data["kind"] == element.kind_id:
                offered.append(
                    Clause(
                        text=f"can resolve the dependency of {kb.decisions[issue.data['owner']].display_name}",
                        refs=(f"decision:{issue.data['owner']}", f"element:{element.id}"),
                    )
                )

    findings: list[Clause] = []
    if element is not None:
        for _, constraint in spec.property_constraints():
            if element.kind_id not in kb.carriers(constraint.property_name):
                continue
            verdict, detail = explain_property_constraint(constraint, element)
            refs = (f"spec:{statement_key(constraint)}", f"element:{element.id}")
            if verdict is Verdict.SATISFIED:
                findings.append(Clause(text=f"satisfies {constraint.render()}: {detail}", refs=refs))
                offered.append(Clause(text=f"offered because {detail}, satisfying {constraint.render()}", refs=refs))
            elif verdict is Verdict.VIOLATED:
                findings.append(Clause(text=f"violates {constraint.render()}: {detail}", refs=refs))
            else:
                findings.append(Clause(text=detail, refs=refs))

    impacts: list[Clause] = []
    for impact in decision.impacts:
        attr = kb.attributes[impact.attribute_id]
        if impact.valence > 0:
            verb = "improves" if impact.certainty == "certain" else "may improve"
        elif impact.valence < 0:
            verb = "damages" if impact.certainty == "certain" else "may damage"
        else:
            verb = "has a neutral impact on"
        text = f"{verb} {attr.display_name} ({impact.certainty})"
        if impact.note:
            text += f": {impact.note}"
        impacts.append(
            Clause(
                text=text,
                refs=(f"decision:{decision.id}", f"attribute:{attr.id}"),
            )
        )

    obligations: list[Clause] = []
    for dep in decision.dependencies:
        kind = kb.kinds[dep.kind_id]
        text = f"requires a {kind.display_name} selection"
        if dep.predicate is not None:
            text = f"requires a {kind.display_name} with {dep.predicate.render()}"
        if dep.label:
            text += f" ({dep.label})"
        obligations.append(Clause(text=text, refs=(f"decision:{decision.id}", f"kind:{kind.id}")))

    return Rationale(
        offered_because=tuple(offered),
        impact_summary=tuple(impacts),
        obligations=tuple(obligations),
        constraint_findings=tuple(findings),
    )


def generate_candidates(
    config: Iterable[str],
    spec: BoundSpec,
    kb: KnowledgeBase,
    weights: ScoreWeights = ScoreWeights(),
) -> list[CandidateDecision]:
    """Offered decisions ranked by marginal score against `config`."""
    config = sorted(set(config))
    base = score_configuration(config, spec, kb, weights)
    open_slots = _open_slots(config, spec, kb)
    open_deps = _open_dependencies(config, spec, kb)

    scored = []
    for decision in kb.decisions.values():
        if not _is_offered(decision, config, spec, kb, open_slots, open_deps):
            continue
        with_candidate = score_configuration(config + [decision.id], spec, kb, weights)
        marginal = with_candidate.minus(base)
        scored.append((decision, marginal))

    scored.sort(
        key=lambda pair: (
            -pair[1].total,
            -pair[1].satisfied_count,
            pair[1].introduced_issues,
            pair[0].id,
        )
    )
    return [
        CandidateDecision(
            decision_id=decision.id,
            display_name=decision.display_name,
            rationale=build_rationale(decision, config, spec, kb),
            score=marginal,
            rank=rank,
        )
        for rank, (decision, marginal) in enumerate(scored, start=1)
    ]


# --- simulated annealing --------------------------------------------------------

@dataclass(frozen=True)
class AnnealParams:
    initial_temperature: float = 10.0
    cooling: float = 0.95
    steps_per_decision: int = 200

    def validate(self) -> None:
        if self.initial_temperature <= 0:
            raise ParamError("initial temperature must be positive")
        if not 0 < self.cooling < 1:
            raise ParamError("cooling factor must be in (0, 1)")
        if self.steps_per_decision <= 0:
            raise ParamError("steps per decision must be positive")


def applicable_universe(spec: BoundSpec, kb: KnowledgeBase) -> list[str]:
    """Decisions the search may toggle: trigger matches and use-statement
    fillers, closed under conforming dependency fillers."""
    used_kinds = {kind_id for _, _, kind_id in spec.use_statements()}
    universe: set[str] = set()
    for decision in kb.decisions.values():
        if _trigger_matches(decision, spec):
            universe.add(decision.id)
        elif decision.selects and kb.elements[decision.selects].kind_id in used_kinds:
            universe.add(decision.id)

    changed = True
    while changed:
        changed = False
        deps = [
            dep
            for did in universe
            for dep in kb.decisions[did].dependencies
        ]
        for decision in kb.decisions.values():
            if decision.id in universe or not decision.selects:
                continue
            element = kb.elements[decision.selects]
            for dep in deps:
                if dep.kind_id == element.kind_id and _conforming(element, dep.predicate):
                    universe.add(decision.id)
                    changed = True
                    break
    return sorted(universe)


def _conforming(element: Element, predicate: Optional[PropertyConstraint]) -> bool:
    return predicate is None or eval_property_constraint(predicate, element) is not Verdict.VIOLATED


def anneal(
    spec: BoundSpec,
    kb: KnowledgeBase,
    weights: ScoreWeights = ScoreWeights(),
    seed: int = 0,
    params: AnnealParams = AnnealParams(),
) -> tuple[frozenset[str], ScoreBreakdown]:
    """Search configurations by simulated annealing; returns the best visited.

    Moves: add an applicable decision, remove a committed one, or swap a
    selecting decision for another of the same kind. Geometric cooling with
    Metropolis acceptance; a fixed seed gives a bit-identical run.
    """
    params.validate()
    universe = applicable_universe(spec, kb)
    rng = random.Random(seed)

    cache: dict[frozenset[str], ScoreBreakdown] = {}

    def scored(cfg: frozenset[str]) -> ScoreBreakdown:
        if cfg not in cache:
            cache[cfg] = score_configuration(cfg, spec, kb, weights)
        return cache[cfg]

    current: frozenset[str] = frozenset()
    best = current
    current_score = scored(current)
    best_score = current_score

    steps = params.steps_per_decision * len(universe)
    temperature = params.initial_temperature
    kind_of = {
        did: kb.elements[kb.decisions[did].selects].kind_id
        for did in universe
        if kb.decisions[did].selects
    }

    for _ in range(steps):
        moves: list[frozenset[str]] = []
        committed = sorted(current)
        outside = [d for d in universe if d not in current]
        for did in outside:
            moves.append(current | {did})
        for did in committed:
            moves.append(current - {did})
        for out_id in committed:
            kind = kind_of.get(out_id)
            if kind is None:
                continue
            for in_id in outside:
                if kind_of.get(in_id) == kind:
                    moves.append((current - {out_id}) | {in_id})
        if not moves:
            break
        proposal = rng.choice(moves)
        proposal_score = scored(proposal)
        delta = proposal_score.total - current_score.total
        if delta >= 0 or rng.random() < _acceptance(delta, temperature):
            current, current_score = proposal, proposal_score
            if current_score.total > best_score.total:
                best, best_score = current, current_score
        temperature *= params.cooling

    return best, best_score


def _acceptance(delta: float, temperature: float) -> float:
    if temperature <= 1e-12:
        return 0.0
    try:
        return math.exp(delta / temperature)
    except OverflowError:
        return 0.0
