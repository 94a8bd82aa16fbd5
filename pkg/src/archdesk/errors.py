"""Exception hierarchy shared across the engine modules."""

from __future__ import annotations

from dataclasses import dataclass, field


class ArchdeskError(Exception):
    """Base class for all engine errors."""


# --- knowledge base loading -------------------------------------------------

class SchemaError(ArchdeskError):
    """Malformed document. `path` points at the offending field."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class DanglingReferenceError(ArchdeskError):
    """A cross-reference names an id that does not exist."""

    def __init__(self, ref: str, context: str = ""):
        msg = f"unknown reference {ref!r}"
        if context:
            msg += f" in {context}"
        super().__init__(msg)
        self.ref = ref


class DuplicateIdError(ArchdeskError):
    def __init__(self, entity_id: str, section: str):
        super().__init__(f"duplicate id {entity_id!r} in {section}")
        self.entity_id = entity_id


class AmbiguousNameError(ArchdeskError):
    """A concept lookup matched more than one entity."""

    def __init__(self, name: str, matches: list[str]):
        super().__init__(f"name {name!r} is ambiguous: matches {', '.join(matches)}")
        self.name = name
        self.matches = matches


# --- specification language ---------------------------------------------------

@dataclass(frozen=True)
class Diagnostic:
    line: int
    column: int
    message: str
    expected: tuple[str, ...] = ()

    def render(self) -> str:
        text = f"{self.line}:{self.column}: {self.message}"
        if self.expected:
            text += " (expected " + " | ".join(self.expected) + ")"
        return text


class ParseError(ArchdeskError):
    """One or more syntax errors, each with line/column and expected tokens."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(d.render() for d in self.diagnostics))

    @property
    def line(self) -> int:
        return self.diagnostics[0].line

    @property
    def column(self) -> int:
        return self.diagnostics[0].column


class BindError(ArchdeskError):
    """Unresolved names, each paired with its statement index."""

    def __init__(self, unresolved: list[tuple[int, str]]):
        self.unresolved = list(unresolved)
        detail = ", ".join(f"{name!r} (statement {idx})" for idx, name in self.unresolved)
        super().__init__(f"unresolved names: {detail}")


class ContradictionError(ArchdeskError):
    """Quality requirements on one attribute admit no level at all."""

    def __init__(self, attribute: str, statements: list[str]):
        super().__init__(
            f"contradictory requirements on {attribute!r}: " + " vs ".join(statements)
        )
        self.attribute = attribute
        self.statements = statements


# --- inference ---------------------------------------------------------------

class ParamError(ArchdeskError):
    """Invalid annealing parameter."""


# --- session -----------------------------------------------------------------

class UnknownDecisionError(ArchdeskError):
    def __init__(self, decision_id: str, reason: str = "not found in the knowledge base"):
        super().__init__(f"decision {decision_id!r}: {reason}")
        self.decision_id = decision_id


class PhaseError(ArchdeskError):
    def __init__(self, phase: str, operation: str):
        super().__init__(f"operation {operation!r} not allowed in phase {phase!r}")
        self.phase = phase


class NotCommittedError(ArchdeskError):
    def __init__(self, decision_id: str):
        super().__init__(f"decision {decision_id!r} is not committed")
        self.decision_id = decision_id


class OverrideNoteRequiredError(ArchdeskError):
    def __init__(self, decision_id: str, top_id: str | None):
        msg = f"committing {decision_id!r} against the top-ranked candidate requires an override note"
        if top_id:
            msg += f" (rank 1 is {top_id!r})"
        super().__init__(msg)
        self.decision_id = decision_id


class UnknownOutcomeError(ArchdeskError):
    def __init__(self, outcome_id: str):
        super().__init__(f"unknown outcome {outcome_id!r}")
        self.outcome_id = outcome_id


class AlreadyResolvedError(ArchdeskError):
    def __init__(self, outcome_id: str, status: str):
        super().__init__(f"outcome {outcome_id!r} already {status}")
        self.outcome_id = outcome_id


class VersionMismatchError(ArchdeskError):
    def __init__(self, expected: str, found: str):
        super().__init__(f"session was saved against KB version {found!r}, not {expected!r}")
        self.expected = expected
        self.found = found
