"""Knowledge-driven workbench for software architecture decision making.

Loads a knowledge base of elements and decisions, parses an architect's
specification of quality requirements and constraints, proposes ranked and
explained candidate decisions, detects conflicts and obligations, and runs
an iterative refinement loop. Detected conflicts are reported, never
enforced: every commit and every accepted outcome is an explicit choice.
"""

from .analysis import AnalysisReport, Issue, QaEvaluation, Suggestion, analyze
from .errors import ArchdeskError
from .inference import (
    AnnealParams,
    CandidateDecision,
    Rationale,
    ScoreBreakdown,
    ScoreWeights,
    anneal,
    build_rationale,
    generate_candidates,
    score_configuration,
)
from .kb import KnowledgeBase, elements_of_kind, load_kb, load_kb_file, lookup_concept, serialize_kb
from .session import (
    Session,
    advance,
    commit_decision,
    final_report,
    load_session,
    new_session,
    resolve_outcome,
    retract_decision,
    save_session,
)
from .speclang import (
    ArchSpec,
    BoundSpec,
    Comparator,
    OrdinalLevel,
    Verdict,
    bind_spec,
    eval_property_constraint,
    parse_spec,
    serialize_spec,
)

__version__ = "0.1.0"
