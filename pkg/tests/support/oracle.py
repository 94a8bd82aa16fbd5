"""Independent score/analysis oracle used to freeze expected test values.

Works directly on the raw KB JSON document and a hand-built spec structure,
on purpose sharing no code with the library under test. Spec statements are
plain tuples:

    ("use", kind_name)
    ("prop", property_name, comparator, [values...])
    ("qr", attribute_id, comparator, level_int)

with comparator one of: equal, not_equal, includes, excludes,
greater_than, less_than, at_least, at_most.
"""

from itertools import combinations

LEVELS = {"very low": 0, "low": 1, "average": 2, "high": 3, "very high": 4}

DEFAULT_WEIGHTS = {"satisfied": 10, "violated": -20, "qr": 4, "compat": 2, "issue": -15}


def norm(name):
    return "".join(ch for ch in name.lower() if ch not in " _-")


def element_by_id(kbdoc, eid):
    for el in kbdoc["elements"]:
        if el["id"] == eid:
            return el
    raise KeyError(eid)


def decision_by_id(kbdoc, did):
    for d in kbdoc["decisions"]:
        if d["id"] == did:
            return d
    raise KeyError(did)


def prop_value(kbdoc, el, prop):
    """Effective property value: declared value, or the element's own id when
    the 'property' names the element's kind (slot-style constraints)."""
    for k, v in el.get("properties", {}).items():
        if norm(k) == norm(prop):
            return v
    kind = next(k for k in kbdoc["kinds"] if k["id"] == el["kind"])
    if norm(prop) in (norm(kind["id"]), norm(kind["display_name"])):
        return el["id"]
    return None


def ident_matches(kbdoc, el, literal):
    return norm(literal) in (norm(el["id"]), norm(el.get("display_name", el["id"])))


def verdict(kbdoc, stmt, el):
    """SATISFIED / VIOLATED / UNKNOWN for a prop statement against an element."""
    _, prop, comp, values = stmt
    value = prop_value(kbdoc, el, prop)
    if value is None or value == "?":
        return "UNKNOWN"
    kind = next(k for k in kbdoc["kinds"] if k["id"] == el["kind"])
    is_pseudo = norm(prop) in (norm(kind["id"]), norm(kind["display_name"]))
    if comp in ("equal", "not_equal"):
        if is_pseudo:
            hit = any(ident_matches(kbdoc, el, v) for v in values)
        else:
            hit = any(value.lower() == v.lower() for v in values)
        sat = hit if comp == "equal" else not hit
        return "SATISFIED" if sat else "VIOLATED"
    if comp in ("includes", "excludes"):
        if is_pseudo:
            member = any(ident_matches(kbdoc, el, v) for v in values)
        else:
            member = any(value.lower() == v.lower() for v in values)
        sat = member if comp == "includes" else not member
        return "SATISFIED" if sat else "VIOLATED"
    # ordering comparators
    rhs = values[0]
    if value.lower() in LEVELS and str(rhs).lower() in LEVELS:
        a, b = LEVELS[value.lower()], LEVELS[str(rhs).lower()]
    else:
        try:
            a, b = float(value), float(rhs)
        except (TypeError, ValueError):
            return "VIOLATED"
    ok = {
        "greater_than": a > b,
        "less_than": a < b,
        "at_least": a >= b,
        "at_most": a <= b,
    }[comp]
    return "SATISFIED" if ok else "VIOLATED"


def qr_holds(comp, predicted, bound):
    return {
        "greater_than": predicted > bound,
        "less_than": predicted < bound,
        "at_least": predicted >= bound,
        "at_most": predicted <= bound,
    }[comp]


def property_carrier_kinds(kbdoc, prop):
    kinds = set()
    for el in kbdoc["elements"]:
        if any(norm(k) == norm(prop) for k in el.get("properties", {})):
            kinds.add(el["kind"])
    for k in kbdoc["kinds"]:
        if norm(prop) in (norm(k["id"]), norm(k["display_name"])):
            kinds.add(k["id"])
    return kinds


def predicted_levels(kbdoc, config_ids):
    """attribute -> predicted level from clamped sum of certain valences."""
    sums = {}
    for did in config_ids:
        for imp in decision_by_id(kbdoc, did).get("impacts", []):
            if imp["certainty"] == "certain":
                sums[imp["attribute"]] = sums.get(imp["attribute"], 0) + imp["valence"]
    out = {}
    for attr, s in sums.items():
        agg = max(-2, min(2, s))
        out[attr] = max(0, min(4, 2 + agg))
    return out


def count_incompatibilities(kbdoc, config_ids):
    config = sorted(config_ids)
    n = 0
    # explicit decision-level pairs
    for a, b in combinations(config, 2):
        da = decision_by_id(kbdoc, a)
        if b in da.get("incompatible_with", []) or a in decision_by_id(kbdoc, b).get("incompatible_with", []):
            n += 1
    # dependency predicate violated by a committed element of that kind
    for did in config:
        d = decision_by_id(kbdoc, did)
        for dep in d.get("dependencies", []):
            pred = dep.get("predicate")
            if not pred:
                continue
            stmt = parse_simple_predicate(pred)
            for other in config:
                sel = decision_by_id(kbdoc, other).get("selects")
                if sel is None:
                    continue
                el = element_by_id(kbdoc, sel)
                if el["kind"] == dep["kind"] and verdict(kbdoc, stmt, el) == "VIOLATED":
                    n += 1
    # committed pair selecting distinct elements of the same kind
    for a, b in combinations(config, 2):
        sa = decision_by_id(kbdoc, a).get("selects")
        sb = decision_by_id(kbdoc, b).get("selects")
        if sa and sb and sa != sb:
            if element_by_id(kbdoc, sa)["kind"] == element_by_id(kbdoc, sb)["kind"]:
                n += 1
    return n


def parse_simple_predicate(text):
    """Parse the restricted '"Prop" equal "value"' shape used in fixtures."""
    parts = [p for p in text.replace("{", " ").replace("}", " ").split('"') if p.strip('", ')]
    prop = parts[0]
    comp_text = parts[1].strip()
    values = [p for p in parts[2:]]
    comp = {
        "equal": "equal", "not equal": "not_equal", "includes": "includes",
        "excludes": "excludes", "greater than": "greater_than",
        "less than": "less_than", "at least": "at_least", "at most": "at_most",
    }[comp_text]
    return ("prop", prop, comp, values)


def score(kbdoc, spec, config_ids, weights=DEFAULT_WEIGHTS):
    """Recompute the full breakdown for a configuration."""
    props = [s for s in spec if s[0] == "prop"]
    qrs = [s for s in spec if s[0] == "qr"]
    selected = []
    for did in sorted(config_ids):
        sel = decision_by_id(kbdoc, did).get("selects")
        if sel:
            selected.append(element_by_id(kbdoc, sel))

    sat = vio = unk = 0
    for stmt in props:
        carriers = property_carrier_kinds(kbdoc, stmt[1])
        for el in selected:
            if el["kind"] not in carriers:
                continue
            v = verdict(kbdoc, stmt, el)
            sat += v == "SATISFIED"
            vio += v == "VIOLATED"
            unk += v == "UNKNOWN"

    levels = predicted_levels(kbdoc, config_ids)
    qr_met = 0
    for _, attr, comp, bound in qrs:
        predicted = levels.get(attr, 2)
        qr_met += qr_holds(comp, predicted, bound)

    compat_ids = set()
    for el in selected:
        for cid in el.get("compatible_with", []):
            compat_ids.add(cid)
        # symmetric closure: elements listing this one as compatible
        for other in kbdoc["elements"]:
            if el["id"] in other.get("compatible_with", []):
                compat_ids.add(other["id"])
    compat = 0
    for cid in sorted(compat_ids):
        el = element_by_id(kbdoc, cid)
        if all(verdict(kbdoc, stmt, el) != "VIOLATED" for stmt in props):
            compat += 1

    issues = count_incompatibilities(kbdoc, config_ids)
    total = (
        weights["satisfied"] * sat
        + weights["violated"] * vio
        + weights["qr"] * qr_met
        + weights["compat"] * compat
        + weights["issue"] * issues
    )
    return {
        "satisfied": sat, "violated": vio, "unknown": unk,
        "qr_met": qr_met, "compat": compat, "issues": issues, "total": total,
    }


def applicable_universe(kbdoc, spec):
    """Decisions reachable from the spec: trigger matches, fills a use
    statement, or (transitively) can fill a dependency of a reachable one."""
    used_kinds = {norm(s[1]) for s in spec if s[0] == "use"}
    prop_names = {norm(s[1]) for s in spec if s[0] == "prop"}
    lower_qr_attrs = {s[1] for s in spec if s[0] == "qr" and s[2] in ("greater_than", "at_least")}

    universe = set()
    for d in kbdoc["decisions"]:
        trig = d.get("offered_when")
        if trig:
            if "attribute" in trig and trig["attribute"] in lower_qr_attrs:
                universe.add(d["id"])
            if "constraint" in trig:
                stmt = parse_simple_predicate(trig["constraint"])
                if norm(stmt[1]) in prop_names:
                    universe.add(d["id"])
        sel = d.get("selects")
        if sel:
            el = element_by_id(kbdoc, sel)
            kind = next(k for k in kbdoc["kinds"] if k["id"] == el["kind"])
            if norm(kind["id"]) in used_kinds or norm(kind["display_name"]) in used_kinds:
                universe.add(d["id"])

    changed = True
    while changed:
        changed = False
        dep_kinds = []
        for did in list(universe):
            for dep in decision_by_id(kbdoc, did).get("dependencies", []):
                dep_kinds.append(dep)
        for d in kbdoc["decisions"]:
            if d["id"] in universe or not d.get("selects"):
                continue
            el = element_by_id(kbdoc, d["selects"])
            for dep in dep_kinds:
                if el["kind"] != dep["kind"]:
                    continue
                pred = dep.get("predicate")
                if pred and verdict(kbdoc, parse_simple_predicate(pred), el) == "VIOLATED":
                    continue
                universe.add(d["id"])
                changed = True
                break
    return sorted(universe)


def best_configuration(kbdoc, spec, weights=DEFAULT_WEIGHTS):
    """Exhaustive optimum over all subsets of the applicable universe."""
    universe = applicable_universe(kbdoc, spec)
    best_total = None
    best_cfg = None
    for mask in range(1 << len(universe)):
        cfg = frozenset(universe[i] for i in range(len(universe)) if mask >> i & 1)
        total = score(kbdoc, spec, cfg, weights)["total"]
        if best_total is None or total > best_total:
            best_total, best_cfg = total, cfg
    return best_cfg, best_total


SPEC_31 = [
    ("use", "DBMS"),
    ("prop", "License", "includes", ["GPL", "LGPL", "BSD"]),
    ("prop", "Backup facility", "equal", ["yes"]),
    ("qr", "reliability", "greater_than", LEVELS["average"]),
]
