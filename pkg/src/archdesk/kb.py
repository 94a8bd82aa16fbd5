"""Architectural knowledge base: data model, JSON loading, validation.

A loaded KnowledgeBase is immutable by convention and safe to share across
threads. Compatibility (elements) and incompatibility (decisions) may be
authored one-sided in the document; both are closed symmetrically at load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional, Union

from . import speclang
from .errors import (
    AmbiguousNameError,
    DanglingReferenceError,
    DuplicateIdError,
    SchemaError,
)
from .speclang import PropertyConstraint, normalize_name

CATEGORIES = ("technology", "pattern", "style", "component")
CERTAINTIES = ("certain", "possible", "conditional")


@dataclass(frozen=True)
class QualityAttribute:
    id: str
    display_name: str
    description: str = ""


@dataclass(frozen=True)
class ElementKind:
    id: str
    display_name: str
    category: str


@dataclass(frozen=True)
class Element:
    id: str
    kind_id: str
    display_name: str
    properties: dict[str, str] = field(default_factory=dict)
    compatible_with: frozenset[str] = frozenset()
    kind_display: str = ""  # denormalized from the kind at load time

    def get_property(self, name: str) -> Optional[str]:
        norm = normalize_name(name)
        for key, value in self.properties.items():
            if normalize_name(key) == norm:
                return value
        return None


@dataclass(frozen=True)
class Impact:
    attribute_id: str
    valence: int
    certainty: str
    note: str = ""


@dataclass(frozen=True)
class Dependency:
    kind_id: str
    predicate: Optional[PropertyConstraint]
    label: str


@dataclass(frozen=True)
class Decision:
    id: str
    display_name: str
    offered_when: Optional[dict] = None  # {"attribute": id} or {"constraint": text}
    selects: Optional[str] = None
    impacts: tuple[Impact, ...] = ()
    dependencies: tuple[Dependency, ...] = ()
    incompatible_with: frozenset[str] = frozenset()


@dataclass(frozen=True)
class KnowledgeBase:
    version: str
    attributes: dict[str, QualityAttribute]
    kinds: dict[str, ElementKind]
    elements: dict[str, Element]
    decisions: dict[str, Decision]
    known_property_names: frozenset[str] = frozenset()
    # normalized property name -> kind ids whose elements carry it
    property_carriers: dict[str, frozenset[str]] = field(default_factory=dict)

    def find_attribute(self, name: str) -> Optional[QualityAttribute]:
        return _find_named(self.attributes.values(), name)

    def find_kind(self, name: str) -> Optional[ElementKind]:
        return _find_named(self.kinds.values(), name)

    def find_element(self, name: str) -> Optional[Element]:
        return _find_named(self.elements.values(), name)

    def find_decision(self, name: str) -> Optional[Decision]:
        return _find_named(self.decisions.values(), name)

    def carriers(self, property_name: str) -> frozenset[str]:
        return self.property_carriers.get(normalize_name(property_name), frozenset())


def _find_named(entities, name: str):
    norm = normalize_name(name)
    hits = [e for e in entities if normalize_name(e.id) == norm or normalize_name(e.display_name) == norm]
    if len(hits) > 1:
        raise AmbiguousNameError(name, [e.id for e in hits])
    return hits[0] if hits else None


def lookup_concept(kb: KnowledgeBase, name: str):
    """Resolve a name to the unique attribute/kind/element/decision, or None.

    Matching is case- and separator-insensitive on id and display name.
    """
    hits: list[Any] = []
    norm = normalize_name(name)
    for pool in (kb.attributes, kb.kinds, kb.elements, kb.decisions):
        for entity in pool.values():
            if normalize_name(entity.id) == norm or normalize_name(entity.display_name) == norm:
                hits.append(entity)
    if not hits:
        return None
    if len(hits) > 1:
        raise AmbiguousNameError(name, [e.id for e in hits])
    return hits[0]


def elements_of_kind(kb: KnowledgeBase, kind: Union[ElementKind, str]) -> list[Element]:
    """Elements of the kind, in stable knowledge-base document order."""
    kind_id = kind.id if isinstance(kind, ElementKind) else kind
    return [e for e in kb.elements.values() if e.kind_id == kind_id]


# --- loading -------------------------------------------------------------------


def _require(doc: dict, key: str, kind: type, path: str, default=None):
    if key not in doc:
        if default is not None:
            return default
        raise SchemaError(f"missing required field {key!r}", path)
    value = doc[key]
    if not isinstance(value, kind):
        raise SchemaError(f"field {key!r} must be {kind.__name__}", path)
    return value


def _no_dup_pairs(pairs):
    seen = {}
    for key, value in pairs:
        if key in seen:
            raise SchemaError(f"duplicate key {key!r} in object")
        seen[key] = value
    return seen


def parse_kb_json(text: str) -> dict:
    """json.loads that rejects duplicate object keys."""
    try:
        doc = json.loads(text, object_pairs_hook=_no_dup_pairs)
    except json.JSONDecodeError as err:
        raise SchemaError(f"invalid JSON: {err}") from err
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object")
    return doc


def load_kb(document: dict) -> KnowledgeBase:
    """Validate a KB document and return an immutable KnowledgeBase.

    Raises SchemaError / DuplicateIdError / DanglingReferenceError; a KB is
    returned only when every invariant holds.
    """
    if not isinstance(document, dict):
        raise SchemaError("top level must be an object")
    version = _require(document, "version", str, "$")

    attributes: dict[str, QualityAttribute] = {}
    for i, raw in enumerate(_require(document, "attributes", list, "$", default=[])):
        path = f"$.attributes[{i}]"
        if not isinstance(raw, dict):
            raise SchemaError("attribute must be an object", path)
        attr = QualityAttribute(
            id=_require(raw, "id", str, path),
            display_name=_require(raw, "display_name", str, path, default=raw.get("id", "")),
            description=raw.get("description", ""),
        )
        if not attr.id:
            raise SchemaError("id must be non-empty", path)
        if attr.id in attributes:
            raise DuplicateIdError(attr.id, "attributes")
        attributes[attr.id] = attr

    kinds: dict[str, ElementKind] = {}
    for i, raw in enumerate(_require(document, "kinds", list, "$", default=[])):
        path = f"$.kinds[{i}]"
        if not isinstance(raw, dict):
            raise SchemaError("kind must be an object", path)
        kind = ElementKind(
            id=_require(raw, "id", str, path),
            display_name=_require(raw, "display_name", str, path, default=raw.get("id", "")),
            category=_require(raw, "category", str, path),
        )
        if kind.category not in CATEGORIES:
            raise SchemaError(f"category must be one of {CATEGORIES}", path)
        if kind.id in kinds:
            raise DuplicateIdError(kind.id, "kinds")
        kinds[kind.id] = kind

    elements: dict[str, Element] = {}
    raw_elements = _require(document, "elements", list, "$", default=[])
    for i, raw in enumerate(raw_elements):
        path = f"$.elements[{i}]"
        if not isinstance(raw, dict):
            raise SchemaError("element must be an object", path)
        el_id = _require(raw, "id", str, path)
        kind_id = _require(raw, "kind", str, path)
        if kind_id not in kinds:
            raise DanglingReferenceError(kind_id, f"{path}.kind")
        properties = _require(raw, "properties", dict, path, default={})
        for key, value in properties.items():
            if not isinstance(value, str):
                raise SchemaError(f"property {key!r} must be a string", path)
            if not key:
                raise SchemaError("property names must be non-empty", path)
        if el_id in elements:
            raise DuplicateIdError(el_id, "elements")
        elements[el_id] = Element(
            id=el_id,
            kind_id=kind_id,
            display_name=raw.get("display_name", el_id),
            properties=dict(properties),
            compatible_with=frozenset(_require(raw, "compatible_with", list, path, default=[])),
            kind_display=kinds[kind_id].display_name,
        )
    for el in elements.values():
        for other in el.compatible_with:
            if other not in elements:
                raise DanglingReferenceError(other, f"element {el.id!r} compatible_with")

    # symmetric closure of compatibility
    closure: dict[str, set[str]] = {eid: set(el.compatible_with) for eid, el in elements.items()}
    for eid, partners in list(closure.items()):
        for other in partners:
            closure[other].add(eid)
    elements = {
        eid: Element(
            id=el.id,
            kind_id=el.kind_id,
            display_name=el.display_name,
            properties=el.properties,
            compatible_with=frozenset(closure[eid]),
            kind_display=el.kind_display,
        )
        for eid, el in elements.items()
    }

    decisions: dict[str, Decision] = {}
    for i, raw in enumerate(_require(document, "decisions", list, "$", default=[])):
        path = f"$.decisions[{i}]"
        if not isinstance(raw, dict):
            raise SchemaError("decision must be an object", path)
        dec_id = _require(raw, "id", str, path)
        if dec_id in decisions:
            raise DuplicateIdError(dec_id, "decisions")

        offered_when = raw.get("offered_when")
        if offered_when is not None:
            if not isinstance(offered_when, dict) or not ({"attribute", "constraint"} & offered_when.keys()):
                raise SchemaError("offered_when needs 'attribute' or 'constraint'", path)
            if "attribute" in offered_when and offered_when["attribute"] not in attributes:
                raise DanglingReferenceError(offered_when["attribute"], f"{path}.offered_when")
            if "constraint" in offered_when:
                _parse_predicate(offered_when["constraint"], f"{path}.offered_when.constraint")

        selects = raw.get("selects")
        if selects is not None and selects not in elements:
            raise DanglingReferenceError(selects, f"{path}.selects")

        impacts = []
        for j, imp in enumerate(_require(raw, "impacts", list, path, default=[])):
            ipath = f"{path}.impacts[{j}]"
            attr_id = _require(imp, "attribute", str, ipath)
            if attr_id not in attributes:
                raise DanglingReferenceError(attr_id, ipath)
            valence = _require(imp, "valence", int, ipath)
            if not -2 <= valence <= 2:
                raise SchemaError("valence must be in [-2, 2]", ipath)
            certainty = _require(imp, "certainty", str, ipath)
            if certainty not in CERTAINTIES:
                raise SchemaError(f"certainty must be one of {CERTAINTIES}", ipath)
            note = imp.get("note", "")
            if valence == 0 and certainty != "conditional" and not note:
                raise SchemaError("a neutral impact needs certainty 'conditional' or a note", ipath)
            impacts.append(Impact(attribute_id=attr_id, valence=valence, certainty=certainty, note=note))

        dependencies = []
        for j, dep in enumerate(_require(raw, "dependencies", list, path, default=[])):
            dpath = f"{path}.dependencies[{j}]"
            kind_id = _require(dep, "kind", str, dpath)
            if kind_id not in kinds:
                raise DanglingReferenceError(kind_id, dpath)
            predicate = None
            if dep.get("predicate"):
                predicate = _parse_predicate(dep["predicate"], f"{dpath}.predicate")
            dependencies.append(
                Dependency(kind_id=kind_id, predicate=predicate, label=dep.get("label", ""))
            )

        decisions[dec_id] = Decision(
            id=dec_id,
            display_name=raw.get("display_name", dec_id),
            offered_when=dict(offered_when) if offered_when else None,
            selects=selects,
            impacts=tuple(impacts),
            dependencies=tuple(dependencies),
            incompatible_with=frozenset(_require(raw, "incompatible_with", list, path, default=[])),
        )
    for dec in decisions.values():
        for other in dec.incompatible_with:
            if other not in decisions:
                raise DanglingReferenceError(other, f"decision {dec.id!r} incompatible_with")

    # symmetric closure of decision incompatibility
    inc_closure: dict[str, set[str]] = {d: set(dec.incompatible_with) for d, dec in decisions.items()}
    for did, partners in list(inc_closure.items()):
        for other in partners:
            inc_closure[other].add(did)
    decisions = {
        did: Decision(
            id=dec.id,
            display_name=dec.display_name,
            offered_when=dec.offered_when,
            selects=dec.selects,
            impacts=dec.impacts,
            dependencies=dec.dependencies,
            incompatible_with=frozenset(inc_closure[did]),
        )
        for did, dec in decisions.items()
    }

    known_props: set[str] = set()
    carriers: dict[str, set[str]] = {}
    for el in elements.values():
        for key in el.properties:
            norm = normalize_name(key)
            known_props.add(norm)
            carriers.setdefault(norm, set()).add(el.kind_id)
    for kind in kinds.values():
        for alias in (kind.id, kind.display_name):
            norm = normalize_name(alias)
            known_props.add(norm)
            carriers.setdefault(norm, set()).add(kind.id)

    return KnowledgeBase(
        version=version,
        attributes=attributes,
        kinds=kinds,
        elements=elements,
        decisions=decisions,
        known_property_names=frozenset(known_props),
        property_carriers={k: frozenset(v) for k, v in carriers.items()},
    )


def _parse_predicate(text: str, path: str) -> PropertyConstraint:
    if not isinstance(text, str):
        raise SchemaError("predicate must be a string", path)
    try:
        spec = speclang.parse_spec(text)
    except speclang.ParseError as err:
        raise SchemaError(f"invalid predicate: {err}", path) from err
    if len(spec.statements) != 1 or not isinstance(spec.statements[0], PropertyConstraint):
        raise SchemaError("predicate must be a single property constraint", path)
    return spec.statements[0]


def load_kb_file(path: str) -> KnowledgeBase:
    with open(path, encoding="utf-8") as fh:
        return load_kb(parse_kb_json(fh.read()))


def serialize_kb(kb: KnowledgeBase) -> dict:
    """Document form of a KB; load_kb(serialize_kb(kb)) reproduces kb."""
    return {
        "version": kb.version,
        "attributes": [
            {"id": a.id, "display_name": a.display_name, "description": a.description}
            for a in kb.attributes.values()
        ],
        "kinds": [
            {"id": k.id, "display_name": k.display_name, "category": k.category}
            for k in kb.kinds.values()
        ],
        "elements": [
            {
                "id": e.id,
                "kind": e.kind_id,
                "display_name": e.display_name,
                "properties": dict(e.properties),
                "compatible_with": sorted(e.compatible_with),
            }
            for e in kb.elements.values()
        ],
        "decisions": [
            {
                "id": d.id,
                "display_name": d.display_name,
                **({"offered_when": dict(d.offered_when)} if d.offered_when else {}),
                **({"selects": d.selects} if d.selects else {}),
                "impacts": [
                    {"attribute": i.attribute_id, "valence": i.valence, "certainty": i.certainty, "note": i.note}
                    for i in d.impacts
                ],
                "dependencies": [
                    {
                        "kind": dep.kind_id,
                        **({"predicate": dep.predicate.render()} if dep.predicate else {}),
                        "label": dep.label,
                    }
                    for dep in d.dependencies
                ],
                "incompatible_with": sorted(d.incompatible_with),
            }
            for d in kb.decisions.values()
        ],
    }
