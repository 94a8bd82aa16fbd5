"""Scoring, ranking, rationale, and annealing.

Expected numbers are frozen from the independent oracle in
tests/support/oracle.py, which recomputes everything from the raw fixture
JSON without touching the library.
"""

import random

import pytest

from archdesk import inference, kb as kbmod, speclang
from archdesk.errors import ParamError
from archdesk.inference import (
    AnnealParams,
    ScoreWeights,
    anneal,
    applicable_universe,
    build_rationale,
    generate_candidates,
    score_configuration,
)
from archdesk.speclang import bind_spec, parse_spec

from support import genkb, oracle


def _bind(kb, text):
    return bind_spec(parse_spec(text), kb)


class TestWeights:
    def test_defaults(self):
        w = ScoreWeights()
        assert (w.w_satisfied, w.w_violated, w.w_qr, w.w_compat, w.w_issue) == (10, -20, 4, 2, -15)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"w_satisfied": 0},
            {"w_violated": 1},
            {"w_qr": -1},
            {"w_compat": -2},
            {"w_issue": 5},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            ScoreWeights(**kwargs)


class TestScoreConfiguration:
    def test_mysql(self, exkb, spec31):
        # oracle-frozen: satisfied=1 (License), unknown=1 (Backup), qr_met=0, compat=6
        s = score_configuration({"decide_mysql"}, spec31, exkb)
        assert (s.satisfied_count, s.violated_count, s.unknown_count) == (1, 0, 1)
        assert s.qr_met_count == 0
        assert s.compat_count == 6
        assert s.introduced_issues == 0
        assert s.total == 22

    def test_sqlserver(self, exkb, spec31):
        # oracle-frozen: satisfied=1 (Backup), violated=1 (License), qr_met=1, compat=2
        s = score_configuration({"decide_sqlserver"}, spec31, exkb)
        assert (s.satisfied_count, s.violated_count, s.unknown_count) == (1, 1, 0)
        assert s.qr_met_count == 1
        assert s.compat_count == 2
        assert s.total == -2

    def test_postgresql(self, exkb, spec31):
        s = score_configuration({"decide_postgresql"}, spec31, exkb)
        assert s.total == 16
        assert s.compat_count == 1  # the windows partner violates the License constraint

    def test_empty_configuration(self, exkb, spec31):
        s = score_configuration(set(), spec31, exkb)
        assert s == inference.ScoreBreakdown(total=0)

    def test_matches_oracle_on_example(self, exkb, spec31, kb_doc):
        for config in [
            {"decide_mysql"},
            {"decide_mysql", "decide_postgresql"},
            {"decide_sqlserver", "decide_windows"},
            {"data_replication", "decide_mysql"},
            {"data_replication", "decide_postgresql", "decide_soa"},
        ]:
            expected = oracle.score(kb_doc, oracle.SPEC_31, config)
            got = score_configuration(config, spec31, exkb)
            assert got.total == expected["total"], config
            assert got.satisfied_count == expected["satisfied"], config
            assert got.violated_count == expected["violated"], config
            assert got.unknown_count == expected["unknown"], config
            assert got.qr_met_count == expected["qr_met"], config
            assert got.compat_count == expected["compat"], config
            assert got.introduced_issues == expected["issues"], config

    def test_deterministic(self, exkb, spec31):
        a = score_configuration({"decide_mysql", "data_replication"}, spec31, exkb)
        b = score_configuration({"data_replication", "decide_mysql"}, spec31, exkb)
        assert a == b


class TestGenerateCandidates:
    def test_golden_ranking(self, exkb, spec31):
        candidates = generate_candidates(set(), spec31, exkb)
        assert [(c.rank, c.decision_id, c.score.total) for c in candidates] == [
            (1, "decide_mysql", 22),
            (2, "decide_postgresql", 16),
            (3, "decide_sqlserver", -2),
        ]

    def test_no_reproposal_after_commit(self, exkb, spec31):
        candidates = generate_candidates({"decide_mysql"}, spec31, exkb)
        assert all(c.decision_id != "decide_mysql" for c in candidates)

    def test_service_implementation_marginals(self, exkb, kb_doc):
        bound = _bind(exkb, "use ServiceImplementation")
        candidates = generate_candidates(set(), bound, exkb)
        assert {c.decision_id for c in candidates} == {"decide_soap", "decide_rest"}
        spec_tuples = [("use", "ServiceImplementation")]
        expected = {
            d: oracle.score(kb_doc, spec_tuples, {d})["total"]
            for d in ("decide_soap", "decide_rest")
        }
        for c in candidates:
            assert c.score.total == expected[c.decision_id]
        assert candidates[0].decision_id == "decide_rest"  # compat edge wins

    def test_trigger_offers_tactic(self, exkb):
        bound = _bind(exkb, '"Performance" greater than "average"')
        ids = {c.decision_id for c in generate_candidates(set(), bound, exkb)}
        assert "data_replication" in ids
        assert "decide_mysql" not in ids  # nothing asks for a DBMS

    def test_upper_bound_qr_does_not_trigger(self, exkb):
        bound = _bind(exkb, '"Performance" at most "average"')
        ids = {c.decision_id for c in generate_candidates(set(), bound, exkb)}
        assert "data_replication" not in ids

    def test_dependency_filler_offered(self, exkb, spec31):
        ids = {c.decision_id for c in generate_candidates({"decide_sqlserver"}, spec31, exkb)}
        assert "decide_windows" in ids  # fills the os dependency
        assert "decide_linux" not in ids  # violates the Family predicate

    def test_ranks_are_gapless(self, exkb, spec31):
        candidates = generate_candidates(set(), spec31, exkb)
        assert [c.rank for c in candidates] == list(range(1, len(candidates) + 1))

    def test_marginal_consistency(self, exkb, spec31):
        base = score_configuration(set(), spec31, exkb).total
        candidates = generate_candidates(set(), spec31, exkb)
        best_marginal = max(c.score.total for c in candidates)
        assert candidates[0].score.total == best_marginal
        for c in candidates:
            absolute = score_configuration({c.decision_id}, spec31, exkb).total
            assert c.score.total == absolute - base

    def test_spec_statement_order_irrelevant(self, exkb):
        lines = open("fixtures/example_spec.qk").read().strip().splitlines()
        shuffled = [lines[2], lines[0], lines[3], lines[1]]
        a = generate_candidates(set(), _bind(exkb, "\n".join(lines)), exkb)
        b = generate_candidates(set(), _bind(exkb, "\n".join(shuffled)), exkb)
        assert [(c.decision_id, c.score) for c in a] == [(c.decision_id, c.score) for c in b]


class TestRationale:
    def test_mysql_clauses(self, exkb, spec31):
        r = build_rationale(exkb.decisions["decide_mysql"], set(), spec31, exkb)
        offered = " | ".join(c.text for c in r.offered_because)
        assert "License" in offered
        findings = " | ".join(c.text for c in r.constraint_findings)
        assert "no information available about Backup facility" in findings
        impacts = [c.text for c in r.impact_summary]
        assert any("neutral" in t and "Reliability" in t and "conditional" in t for t in impacts)

    def test_data_replication_clauses(self, exkb):
        bound = _bind(exkb, '"Performance" greater than "average"')
        r = build_rationale(exkb.decisions["data_replication"], set(), bound, exkb)
        offered = " | ".join(c.text for c in r.offered_because)
        assert "Performance" in offered
        impacts = " | ".join(c.text for c in r.impact_summary)
        assert "improves Performance" in impacts
        assert "damages Maintainability" in impacts
        assert "may damage Accuracy" in impacts
        obligations = " | ".join(c.text for c in r.obligations)
        assert "DBMS" in obligations and "DataReplication" in obligations

    def test_bare_decision(self, exkb, empty_spec):
        r = build_rationale(exkb.decisions["decide_soap"], set(), empty_spec, exkb)
        assert r.impact_summary == ()
        assert r.obligations == ()
        assert r.constraint_findings == ()

    def test_every_clause_has_refs(self, exkb, spec31):
        for decision in exkb.decisions.values():
            r = build_rationale(decision, set(), spec31, exkb)
            for group in (r.offered_because, r.impact_summary, r.obligations, r.constraint_findings):
                for clause in group:
                    assert clause.refs, clause


class TestAnneal:
    def test_example_kb_optimum(self, exkb, spec31):
        best, score = anneal(spec31, exkb, seed=42)
        assert best == frozenset({"decide_mysql"})
        assert score.total == 22

    def test_never_below_empty_baseline(self, exkb):
        doc = {
            "version": "tiny",
            "attributes": [{"id": "a", "display_name": "A"}],
            "kinds": [{"id": "k", "display_name": "K", "category": "technology"}],
            "elements": [
                {"id": "e1", "kind": "k", "properties": {"License": "Proprietary"}},
            ],
            "decisions": [{"id": "pick_e1", "selects": "e1"}],
        }
        kb = kbmod.load_kb(doc)
        bound = bind_spec(parse_spec('use K\n"License" includes {"GPL"}'), kb)
        for seed in range(5):
            best, score = anneal(bound, kb, seed=seed)
            assert best == frozenset()
            assert score.total == 0

    def test_param_validation(self, exkb, spec31):
        with pytest.raises(ParamError):
            anneal(spec31, exkb, params=AnnealParams(initial_temperature=0))
        with pytest.raises(ParamError):
            anneal(spec31, exkb, params=AnnealParams(cooling=1.0))
        with pytest.raises(ParamError):
            anneal(spec31, exkb, params=AnnealParams(steps_per_decision=0))

    def test_seed_determinism(self, exkb, spec31):
        runs = {anneal(spec31, exkb, seed=7) for _ in range(3)}
        assert len(runs) == 1

    def test_universe_closure(self, exkb, spec31, kb_doc):
        assert applicable_universe(spec31, exkb) == oracle.applicable_universe(kb_doc, oracle.SPEC_31)

    def test_oracle_equivalence_smoke(self):
        rng = random.Random(1234)
        hits = 0
        for i in range(10):
            doc, spec = genkb.random_kb(rng, max_decisions=8)
            kb = kbmod.load_kb(doc)
            bound = bind_spec(parse_spec(genkb.render_spec(spec)), kb)
            _, best_oracle = oracle.best_configuration(doc, spec)
            _, got = anneal(bound, kb, seed=i)
            hits += got.total == best_oracle
        assert hits >= 9


class TestScoreProperties:
    def test_oracle_agreement_random(self):
        rng = random.Random(99)
        for i in range(25):
            doc, spec = genkb.random_kb(rng)
            kb = kbmod.load_kb(doc)
            bound = bind_spec(parse_spec(genkb.render_spec(spec)), kb)
            config = genkb.random_config(rng, doc)
            expected = oracle.score(doc, spec, config)
            got = score_configuration(config, bound, kb)
            assert got.total == expected["total"], (i, config)
            assert got.compat_count == expected["compat"], (i, config)
            assert got.qr_met_count == expected["qr_met"], (i, config)

    def test_monotonic_benign_addition(self, exkb):
        # lower-bound QRs only: a decision whose verdicts are all
        # SATISFIED/UNKNOWN, with no negative impacts and no new issues,
        # never lowers the total
        rng = random.Random(4242)
        checked = 0
        for i in range(40):
            doc, spec = genkb.random_kb(rng, lower_bound_qrs_only=True)
            kb = kbmod.load_kb(doc)
            bound = bind_spec(parse_spec(genkb.render_spec(spec)), kb)
            config = genkb.random_config(rng, doc, max_size=3)
            base = score_configuration(config, bound, kb)
            constraints = [s for _, s in bound.property_constraints()]
            for decision in kb.decisions.values():
                if decision.id in config:
                    continue
                if any(impact.valence < 0 for impact in decision.impacts):
                    continue
                if decision.selects:
                    element = kb.elements[decision.selects]
                    verdicts = [
                        inference.eval_property_constraint(c, element) for c in constraints
                    ]
                    if any(v is speclang.Verdict.VIOLATED for v in verdicts):
                        continue
                with_d = score_configuration(set(config) | {decision.id}, bound, kb)
                if with_d.introduced_issues > base.introduced_issues:
                    continue
                assert with_d.total >= base.total, (i, decision.id)
                checked += 1
        assert checked > 50  # the property was actually exercised

    def test_unknown_neutrality(self, exkb, kb_doc, spec31):
        # resolving mysql's unknown Backup facility to a satisfying value
        # never lowers the configuration total
        import copy

        doc = copy.deepcopy(kb_doc)
        for el in doc["elements"]:
            if el["id"] == "mysql5":
                el["properties"]["BackupFacility"] = "yes"
        kb2 = kbmod.load_kb(doc)
        bound2 = bind_spec(parse_spec(open("fixtures/example_spec.qk").read()), kb2)
        for config in [{"decide_mysql"}, {"decide_mysql", "data_replication"}]:
            before = score_configuration(config, spec31, exkb).total
            after = score_configuration(config, bound2, kb2).total
            assert after >= before
