"""The architect's specification language: parse, serialize, bind, evaluate.

Statements are newline- or semicolon-separated; `#` starts a line comment.
Three statement forms:

    use DBMS
    "License" includes {"GPL", "LGPL", "BSD"}
    "Reliability" greater than "average"

A statement with an ordering comparator and a level literal parses as a
quality requirement; binding against a knowledge base may downgrade it to a
property constraint when the name is not a quality attribute.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from typing import Optional, Union

from .errors import BindError, ContradictionError, Diagnostic, ParseError

ORIGIN_ARCHITECT = "architect"
ORIGIN_REFINEMENT = "refinement"

UNKNOWN_VALUE = "?"


def normalize_name(name: str) -> str:
    """Case- and separator-insensitive key used for all name matching."""
    return "".join(ch for ch in name.lower() if ch not in " _-")


class Comparator(Enum):
    EQUAL = "equal"
    NOT_EQUAL = "not equal"
    INCLUDES = "includes"
    EXCLUDES = "excludes"
    GREATER_THAN = "greater than"
    LESS_THAN = "less than"
    AT_LEAST = "at least"
    AT_MOST = "at most"

    @property
    def is_ordering(self) -> bool:
        return self in (
            Comparator.GREATER_THAN,
            Comparator.LESS_THAN,
            Comparator.AT_LEAST,
            Comparator.AT_MOST,
        )

    @property
    def is_set(self) -> bool:
        return self in (Comparator.INCLUDES, Comparator.EXCLUDES)

    @property
    def is_lower_bound(self) -> bool:
        return self in (Comparator.GREATER_THAN, Comparator.AT_LEAST)

    def holds(self, left: float, right: float) -> bool:
        if self is Comparator.GREATER_THAN:
            return left > right
        if self is Comparator.LESS_THAN:
            return left < right
        if self is Comparator.AT_LEAST:
            return left >= right
        if self is Comparator.AT_MOST:
            return left <= right
        raise ValueError(f"{self} is not an ordering comparator")


class OrdinalLevel(IntEnum):
    VERY_LOW = 0
    LOW = 1
    AVERAGE = 2
    HIGH = 3
    VERY_HIGH = 4

    @property
    def text(self) -> str:
        return _LEVEL_TEXT[self]

    @staticmethod
    def parse(text: str) -> Optional["OrdinalLevel"]:
        return _LEVEL_BY_TEXT.get(" ".join(text.lower().split()))


_LEVEL_TEXT = {
    OrdinalLevel.VERY_LOW: "very low",
    OrdinalLevel.LOW: "low",
    OrdinalLevel.AVERAGE: "average",
    OrdinalLevel.HIGH: "high",
    OrdinalLevel.VERY_HIGH: "very high",
}
_LEVEL_BY_TEXT = {text: level for level, text in _LEVEL_TEXT.items()}


class Verdict(Enum):
    SATISFIED = "satisfied"
    VIOLATED = "violated"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class UseStatement:
    kind_name: str
    origin: str = field(default=ORIGIN_ARCHITECT, compare=False)
    source_text: str = field(default="", compare=False)

    def render(self) -> str:
        return f"use {_render_name(self.kind_name)}"


@dataclass(frozen=True)
class PropertyConstraint:
    property_name: str
    comparator: Comparator
    values: tuple[str, ...]  # canonical: unique, sorted casefold
    origin: str = field(default=ORIGIN_ARCHITECT, compare=False)
    source_text: str = field(default="", compare=False)

    def __post_init__(self):
        canonical = tuple(sorted(dict.fromkeys(self.values), key=str.casefold))
        object.__setattr__(self, "values", canonical)
        if not self.values:
            raise ValueError("property constraint needs at least one value")
        if not self.comparator.is_set and len(self.values) != 1:
            raise ValueError(f"{self.comparator.value} takes exactly one value")

    @property
    def value(self) -> str:
        return self.values[0]

    def render(self) -> str:
        if self.comparator.is_set:
            rhs = "{" + ", ".join(_render_literal(v) for v in self.values) + "}"
        else:
            rhs = _render_literal(self.value)
        return f"{_render_name(self.property_name, force_quote=True)} {self.comparator.value} {rhs}"


@dataclass(frozen=True)
class QualityRequirement:
    attribute_name: str
    comparator: Comparator
    level: OrdinalLevel
    origin: str = field(default=ORIGIN_ARCHITECT, compare=False)
    source_text: str = field(default="", compare=False)

    def __post_init__(self):
        if not self.comparator.is_ordering:
            raise ValueError("quality requirements take ordering comparators")

    def render(self) -> str:
        name = _render_name(self.attribute_name, force_quote=True)
        return f'{name} {self.comparator.value} "{self.level.text}"'

    def admissible(self) -> tuple[int, int]:
        """Inclusive level interval this requirement allows (may be empty)."""
        if self.comparator is Comparator.GREATER_THAN:
            return (int(self.level) + 1, int(OrdinalLevel.VERY_HIGH))
        if self.comparator is Comparator.AT_LEAST:
            return (int(self.level), int(OrdinalLevel.VERY_HIGH))
        if self.comparator is Comparator.LESS_THAN:
            return (int(OrdinalLevel.VERY_LOW), int(self.level) - 1)
        return (int(OrdinalLevel.VERY_LOW), int(self.level))


SpecStatement = Union[UseStatement, PropertyConstraint, QualityRequirement]


@dataclass(frozen=True)
class ArchSpec:
    statements: tuple[SpecStatement, ...] = ()

    def __len__(self) -> int:
        return len(self.statements)


_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER_RE = re.compile(r"[0-9]+(\.[0-9]+)?")

_KEYWORDS = frozenset(
    ["use", "equal", "not", "includes", "excludes", "greater", "less", "than", "at", "least", "most"]
)
_COMPARATOR_KEYWORDS = (
    "equal", "not equal", "includes", "excludes",
    "greater than", "less than", "at least", "at most",
)


def _render_name(name: str, force_quote: bool = False) -> str:
    if not force_quote and _IDENT_RE.fullmatch(name) and name.lower() not in _KEYWORDS:
        return name
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _render_literal(value: str) -> str:
    if _NUMBER_RE.fullmatch(value):
        return value
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


@dataclass(frozen=True)
class _Token:
    kind: str  # IDENT | STRING | NUMBER | LBRACE | RBRACE | COMMA
    value: str
    line: int
    column: int

    def keyword(self) -> Optional[str]:
        return self.value.lower() if self.kind == "IDENT" and self.value.lower() in _KEYWORDS else None


def _tokenize_line(text: str, line_no: int, diagnostics: list[Diagnostic]) -> list[list[_Token]]:
    """Tokens of one physical line, split into `;`-separated statements."""
    statements: list[list[_Token]] = [[]]
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        col = i + 1
        if ch in " \t\r":
            i += 1
        elif ch == "#":
            break
        elif ch == ";":
            statements.append([])
            i += 1
        elif ch == "{":
            statements[-1].append(_Token("LBRACE", ch, line_no, col))
            i += 1
        elif ch == "}":
            statements[-1].append(_Token("RBRACE", ch, line_no, col))
            i += 1
        elif ch == ",":
            statements[-1].append(_Token("COMMA", ch, line_no, col))
            i += 1
        elif ch == '"':
            value = []
            j = i + 1
            closed = False
            while j < n:
                c = text[j]
                if c == "\\" and j + 1 < n and text[j + 1] in ('"', "\\"):
                    value.append(text[j + 1])
                    j += 2
                elif c == '"':
                    closed = True
                    j += 1
                    break
                else:
                    value.append(c)
                    j += 1
            if not closed:
                diagnostics.append(Diagnostic(line_no, col, "unterminated string"))
                return statements
            statements[-1].append(_Token("STRING", "".join(value), line_no, col))
            i = j
        else:
            m = _NUMBER_RE.match(text, i)
            if m and not text[i].isalpha():
                statements[-1].append(_Token("NUMBER", m.group(0), line_no, col))
                i = m.end()
                continue
            m = _IDENT_RE.match(text, i)
            if m:
                statements[-1].append(_Token("IDENT", m.group(0), line_no, col))
                i = m.end()
                continue
            diagnostics.append(Diagnostic(line_no, col, f"unexpected character {ch!r}"))
            i += 1
    return statements


class _StatementParser:
    def __init__(self, tokens: list[_Token], line_no: int, source: str):
        self.tokens = tokens
        self.pos = 0
        self.line_no = line_no
        self.source = source

    def peek(self) -> Optional[_Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> Optional[_Token]:
        tok = self.peek()
        if tok is not None:
            self.pos += 1
        return tok

    def fail(self, message: str, expected: tuple[str, ...] = ()) -> ParseError:
        tok = self.peek()
        column = tok.column if tok else (self.tokens[-1].column + len(self.tokens[-1].value))
        return ParseError([Diagnostic(self.line_no, column, message, expected)])

    def parse(self) -> SpecStatement:
        first = self.peek()
        assert first is not None
        if first.keyword() == "use":
            self.take()
            return self._finish_use()
        return self._finish_constraint()

    def _finish_use(self) -> UseStatement:
        tok = self.take()
        if tok is None or tok.kind not in ("IDENT", "STRING") or (tok.kind == "IDENT" and tok.keyword()):
            raise self.fail("expected a concept name after 'use'", ("IDENT", "STRING"))
        self._expect_end()
        return UseStatement(kind_name=tok.value, source_text=self.source)

    def _name(self) -> str:
        tok = self.take()
        if tok is None or tok.kind not in ("IDENT", "STRING") or (tok.kind == "IDENT" and tok.keyword()):
            raise self.fail("expected a name", ("IDENT", "STRING"))
        return tok.value

    def _comparator(self) -> Comparator:
        tok = self.peek()
        kw = tok.keyword() if tok else None
        if kw is None or kw == "use":
            raise self.fail("expected a comparator keyword", _COMPARATOR_KEYWORDS)
        self.take()
        if kw == "equal":
            return Comparator.EQUAL
        if kw == "includes":
            return Comparator.INCLUDES
        if kw == "excludes":
            return Comparator.EXCLUDES
        second = {"not": "equal", "greater": "than", "less": "than", "at": None}.get(kw)
        if kw in ("not", "greater", "less"):
            nxt = self.take()
            if nxt is None or nxt.keyword() != second:
                raise self.fail(f"expected '{second}' after '{kw}'", (second,))
            return {"not": Comparator.NOT_EQUAL, "greater": Comparator.GREATER_THAN, "less": Comparator.LESS_THAN}[kw]
        if kw == "at":
            nxt = self.take()
            if nxt is None or nxt.keyword() not in ("least", "most"):
                raise self.fail("expected 'least' or 'most' after 'at'", ("least", "most"))
            return Comparator.AT_LEAST if nxt.keyword() == "least" else Comparator.AT_MOST
        raise self.fail("expected a comparator keyword", _COMPARATOR_KEYWORDS)

    def _literal(self) -> str:
        tok = self.take()
        if tok is None or tok.kind not in ("IDENT", "STRING", "NUMBER") or (tok.kind == "IDENT" and tok.keyword()):
            raise self.fail("expected a literal", ("STRING", "IDENT", "NUMBER"))
        return tok.value

    def _finish_constraint(self) -> SpecStatement:
        name = self._name()
        comparator = self._comparator()
        values: list[str]
        tok = self.peek()
        if tok is not None and tok.kind == "LBRACE":
            if not comparator.is_set:
                raise self.fail(f"{comparator.value} takes a single value, not a set", ("STRING", "IDENT", "NUMBER"))
            self.take()
            values = [self._literal()]
            while True:
                tok = self.take()
                if tok is None:
                    raise self.fail("unclosed set literal", ("}",))
                if tok.kind == "RBRACE":
                    break
                if tok.kind != "COMMA":
                    raise ParseError([Diagnostic(self.line_no, tok.column, "expected ',' or '}' in set", (",", "}"))])
                values.append(self._literal())
        else:
            values = [self._literal()]
        self._expect_end()

        if comparator.is_ordering and len(values) == 1:
            level = OrdinalLevel.parse(values[0])
            if level is not None:
                return QualityRequirement(
                    attribute_name=name, comparator=comparator, level=level, source_text=self.source
                )
        return PropertyConstraint(
            property_name=name, comparator=comparator, values=tuple(values), source_text=self.source
        )

    def _expect_end(self) -> None:
        tok = self.peek()
        if tok is not None:
            raise ParseError(
                [Diagnostic(self.line_no, tok.column, f"unexpected trailing input {tok.value!r}", ("end of statement",))]
            )


def parse_spec(text: str) -> ArchSpec:
    """Parse specification source into an ArchSpec.

    Recovers at statement boundaries so one pass reports every syntax error.
    """
    diagnostics: list[Diagnostic] = []
    statements: list[SpecStatement] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        for tokens in _tokenize_line(line, line_no, diagnostics):
            if not tokens:
                continue
            source = line.strip()
            parser = _StatementParser(tokens, line_no, source)
            try:
                statements.append(parser.parse())
            except ParseError as err:
                diagnostics.extend(err.diagnostics)
            except ValueError as err:
                diagnostics.append(Diagnostic(line_no, tokens[0].column, str(err)))
    if diagnostics:
        raise ParseError(diagnostics)
    return ArchSpec(statements=tuple(statements))


def serialize_spec(spec: ArchSpec) -> str:
    """Canonical surface syntax; parse_spec(serialize_spec(s)) == s."""
    return "\n".join(stmt.render() for stmt in spec.statements)


def statement_key(stmt: SpecStatement) -> str:
    """Stable identity for a statement, independent of origin/source text."""
    return stmt.render()


# --- binding -----------------------------------------------------------------

@dataclass(frozen=True)
class BoundSpec:
    """A spec whose names resolved against a knowledge base.

    Statements are re-classified where needed (a quality requirement whose
    name is not a quality attribute becomes a property constraint).
    """

    spec: ArchSpec
    use_kind_ids: dict  # statement index -> kind id
    qr_attribute_ids: dict  # statement index -> attribute id
    warnings: tuple[str, ...] = ()

    @property
    def statements(self) -> tuple[SpecStatement, ...]:
        return self.spec.statements

    def property_constraints(self) -> list[tuple[int, PropertyConstraint]]:
        return [(i, s) for i, s in enumerate(self.spec.statements) if isinstance(s, PropertyConstraint)]

    def quality_requirements(self) -> list[tuple[int, QualityRequirement, str]]:
        return [
            (i, s, self.qr_attribute_ids[i])
            for i, s in enumerate(self.spec.statements)
            if isinstance(s, QualityRequirement)
        ]

    def use_statements(self) -> list[tuple[int, UseStatement, str]]:
        return [
            (i, s, self.use_kind_ids[i])
            for i, s in enumerate(self.spec.statements)
            if isinstance(s, UseStatement)
        ]


def bind_spec(spec: ArchSpec, kb) -> BoundSpec:
    """Resolve statement names against `kb`.

    Raises BindError for unresolved use-statement concepts and
    ContradictionError when the quality requirements on one attribute admit
    no level. Unknown property names are warnings, not errors.
    """
    unresolved: list[tuple[int, str]] = []
    warnings: list[str] = []
    use_kind_ids: dict[int, str] = {}
    qr_attribute_ids: dict[int, str] = {}
    rewritten: list[SpecStatement] = []

    for idx, stmt in enumerate(spec.statements):
        if isinstance(stmt, UseStatement):
            kind = kb.find_kind(stmt.kind_name)
            if kind is None:
                unresolved.append((idx, stmt.kind_name))
            else:
                use_kind_ids[idx] = kind.id
            rewritten.append(stmt)
        elif isinstance(stmt, QualityRequirement):
            attr = kb.find_attribute(stmt.attribute_name)
            if attr is not None:
                qr_attribute_ids[idx] = attr.id
                rewritten.append(stmt)
            else:
                # not a quality attribute: treat as a property constraint
                downgraded = PropertyConstraint(
                    property_name=stmt.attribute_name,
                    comparator=stmt.comparator,
                    values=(stmt.level.text,),
                    origin=stmt.origin,
                    source_text=stmt.source_text,
                )
                _warn_unknown_property(kb, downgraded.property_name, idx, warnings)
                rewritten.append(downgraded)
        else:
            _warn_unknown_property(kb, stmt.property_name, idx, warnings)
            rewritten.append(stmt)

    if unresolved:
        raise BindError(unresolved)

    bound = BoundSpec(
        spec=ArchSpec(statements=tuple(rewritten)),
        use_kind_ids=use_kind_ids,
        qr_attribute_ids=qr_attribute_ids,
        warnings=tuple(warnings),
    )
    _check_contradictions(bound)
    return bound


def _warn_unknown_property(kb, name: str, idx: int, warnings: list[str]) -> None:
    if normalize_name(name) not in kb.known_property_names:
        warnings.append(f"statement {idx}: property {name!r} never appears in the knowledge base")


def _check_contradictions(bound: BoundSpec) -> None:
    by_attr: dict[str, list[QualityRequirement]] = {}
    for _, stmt, attr_id in bound.quality_requirements():
        by_attr.setdefault(attr_id, []).append(stmt)
    for attr_id, stmts in by_attr.items():
        lo, hi = int(OrdinalLevel.VERY_LOW), int(OrdinalLevel.VERY_HIGH)
        for stmt in stmts:
            slo, shi = stmt.admissible()
            lo, hi = max(lo, slo), min(hi, shi)
        if lo > hi:
            raise ContradictionError(attr_id, [s.render() for s in stmts])


# --- evaluation ----------------------------------------------------------------

def eval_property_constraint(constraint: PropertyConstraint, element) -> Verdict:
    """Pure verdict of a constraint against one element.

    `element` provides: properties (dict), kind_id, kind_display, id,
    display_name. A property absent from the element (and not naming its
    kind) or carrying the UNKNOWN marker yields UNKNOWN.
    """
    verdict, _ = explain_property_constraint(constraint, element)
    return verdict


def explain_property_constraint(constraint: PropertyConstraint, element) -> tuple[Verdict, str]:
    """Verdict plus a short human-readable finding."""
    prop = constraint.property_name
    norm_prop = normalize_name(prop)
    value = None
    for key, val in element.properties.items():
        if normalize_name(key) == norm_prop:
            value = val
            break
    is_pseudo = False
    if value is None and norm_prop in (normalize_name(element.kind_id), normalize_name(element.kind_display)):
        value = element.id
        is_pseudo = True

    if value is None or value == UNKNOWN_VALUE:
        return Verdict.UNKNOWN, f"no information available about {prop}"

    comparator = constraint.comparator
    if comparator in (Comparator.EQUAL, Comparator.NOT_EQUAL, Comparator.INCLUDES, Comparator.EXCLUDES):
        if is_pseudo:
            member = any(_element_named(element, v) for v in constraint.values)
        else:
            member = any(value.casefold() == v.casefold() for v in constraint.values)
        positive = comparator in (Comparator.EQUAL, Comparator.INCLUDES)
        satisfied = member if positive else not member
        shown = element.display_name if is_pseudo else value
        detail = f"{prop} is {shown!r}"
        return (Verdict.SATISFIED if satisfied else Verdict.VIOLATED), detail

    # ordering comparators
    rhs = constraint.value
    left_level = OrdinalLevel.parse(value)
    right_level = OrdinalLevel.parse(rhs)
    if left_level is not None and right_level is not None:
        ok = comparator.holds(int(left_level), int(right_level))
        return (Verdict.SATISFIED if ok else Verdict.VIOLATED), f"{prop} is {value!r}"
    try:
        left_num, right_num = float(value), float(rhs)
    except ValueError:
        return Verdict.VIOLATED, (
            f"{prop} is {value!r}, not comparable with {rhs!r} as a level or a number"
        )
    ok = comparator.holds(left_num, right_num)
    return (Verdict.SATISFIED if ok else Verdict.VIOLATED), f"{prop} is {value!r}"


def _element_named(element, literal: str) -> bool:
    norm = normalize_name(literal)
    return norm in (normalize_name(element.id), normalize_name(element.display_name))
