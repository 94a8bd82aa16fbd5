"""Batch entry point: validate KBs, parse specs, rank, analyze, run scripts.

Exit codes: 0 success, 1 usage error, 2 spec parse/bind error,
3 KB validation error, 4 scripted-session assertion failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from . import analysis, inference, kb as kbmod, session as sess, speclang
from .errors import (
    ArchdeskError,
    BindError,
    ContradictionError,
    DanglingReferenceError,
    DuplicateIdError,
    ParamError,
    ParseError,
    SchemaError,
)
from .inference import AnnealParams, ScoreWeights

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SPEC = 2
EXIT_KB = 3
EXIT_ASSERTION = 4

KB_ERRORS = (SchemaError, DanglingReferenceError, DuplicateIdError)
SPEC_ERRORS = (ParseError, BindError, ContradictionError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; usage errors are 1
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _emit(payload: dict, text: str, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False))
    else:
        print(text)


def _load_weights(path: Optional[str]) -> ScoreWeights:
    if not path:
        return ScoreWeights()
    with open(path, encoding="utf-8") as fh:
        return ScoreWeights.from_json_dict(json.load(fh))


def _load_kb_or_exit(path: str) -> kbmod.KnowledgeBase:
    try:
        return kbmod.load_kb_file(path)
    except KB_ERRORS as err:
        sys.stderr.write(f"knowledge base error: {err}\n")
        raise SystemExit(EXIT_KB)


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def cmd_validate_kb(args) -> int:
    try:
        kb = kbmod.load_kb_file(args.kb)
    except KB_ERRORS as err:
        if args.format == "json":
            print(json.dumps({"valid": False, "error": str(err)}, sort_keys=True))
        else:
            sys.stderr.write(f"invalid: {err}\n")
        return EXIT_KB
    summary = {
        "valid": True,
        "version": kb.version,
        "attributes": len(kb.attributes),
        "kinds": len(kb.kinds),
        "elements": len(kb.elements),
        "decisions": len(kb.decisions),
    }
    _emit(
        summary,
        f"valid knowledge base {kb.version!r}: {summary['attributes']} attributes, "
        f"{summary['kinds']} kinds, {summary['elements']} elements, {summary['decisions']} decisions",
        args.format,
    )
    return EXIT_OK


def cmd_parse_spec(args) -> int:
    text = _read(args.spec)
    try:
        spec = speclang.parse_spec(text)
    except ParseError as err:
        for diag in err.diagnostics:
            sys.stderr.write(f"{args.spec}:{diag.render()}\n")
        return EXIT_SPEC
    warnings: tuple[str, ...] = ()
    if args.kb:
        kb = _load_kb_or_exit(args.kb)
        try:
            bound = speclang.bind_spec(spec, kb)
        except SPEC_ERRORS as err:
            sys.stderr.write(f"bind error: {err}\n")
            return EXIT_SPEC
        warnings = bound.warnings
    payload = {
        "statements": [
            {"index": i, "kind": type(s).__name__, "text": s.render(), "origin": s.origin}
            for i, s in enumerate(spec.statements)
        ],
        "warnings": list(warnings),
    }
    lines = [f"{i}: {s.render()}" for i, s in enumerate(spec.statements)]
    lines += [f"warning: {w}" for w in warnings]
    _emit(payload, "\n".join(lines) if lines else "(empty specification)", args.format)
    return EXIT_OK


def _bind_or_exit(spec_path: str, kb: kbmod.KnowledgeBase) -> speclang.BoundSpec:
    try:
        spec = speclang.parse_spec(_read(spec_path))
        return speclang.bind_spec(spec, kb)
    except SPEC_ERRORS as err:
        sys.stderr.write(f"specification error: {err}\n")
        raise SystemExit(EXIT_SPEC)


def cmd_infer(args) -> int:
    kb = _load_kb_or_exit(args.kb)
    bound = _bind_or_exit(args.spec, kb)
    weights = _load_weights(args.weights)
    candidates = inference.generate_candidates(set(args.decide or []), bound, kb, weights)
    payload: dict = {"candidates": [c.to_json_dict() for c in candidates]}
    lines = [f"{'rank':>4}  {'total':>6}  decision"]
    for c in candidates:
        lines.append(f"{c.rank:>4}  {c.score.total:>6}  {c.display_name} ({c.decision_id})")
    if args.anneal:
        params = AnnealParams(
            initial_temperature=args.anneal_temp,
            cooling=args.anneal_cooling,
            steps_per_decision=args.anneal_steps,
        )
        try:
            best, score = inference.anneal(bound, kb, weights, seed=args.seed, params=params)
        except ParamError as err:
            sys.stderr.write(f"invalid annealing parameters: {err}\n")
            return EXIT_USAGE
        payload["annealed"] = {"configuration": sorted(best), "score": score.to_json_dict()}
        lines.append("")
        lines.append(f"annealed configuration (seed {args.seed}): {', '.join(sorted(best)) or '(empty)'}")
        lines.append(f"total: {score.total}")
    _emit(payload, "\n".join(lines), args.format)
    return EXIT_OK


def _render_report_text(report: analysis.AnalysisReport) -> str:
    lines = []
    for issue in report.issues:
        lines.append(f"[{issue.severity}] {issue.kind}: {issue.message}")
    for suggestion in report.suggestions:
        lines.append(
            f"[suggestion] consider adding: {suggestion.proposed_statement.render()} "
            f"(supported by {', '.join(suggestion.supporting_decisions)})"
        )
    for ev in report.evaluations:
        lines.append(f"[evaluation] {ev.attribute_id}: predicted {ev.predicted.text}")
    return "\n".join(lines) if lines else "(nothing to report)"


def cmd_analyze(args) -> int:
    kb = _load_kb_or_exit(args.kb)
    bound = _bind_or_exit(args.spec, kb)
    config = set(args.decide or [])
    unknown = [d for d in config if d not in kb.decisions]
    if unknown:
        sys.stderr.write(f"unknown decisions: {', '.join(sorted(unknown))}\n")
        return EXIT_USAGE
    report = analysis.analyze(config, bound, kb, args.threshold)
    _emit(report.to_json_dict(), _render_report_text(report), args.format)
    return EXIT_OK


def cmd_report(args) -> int:
    with open(args.session, encoding="utf-8") as fh:
        doc = json.load(fh)
    kb_path = args.kb or doc.get("kb_path")
    if not kb_path:
        sys.stderr.write("no --kb given and the session document records no kb_path\n")
        return EXIT_USAGE
    kb = _load_kb_or_exit(kb_path)
    try:
        session = sess.load_session(doc, kb)
    except ArchdeskError as err:
        sys.stderr.write(f"session error: {err}\n")
        return EXIT_SPEC
    report = sess.final_report(session)
    _emit(report.to_json_dict(), report.to_markdown(), args.format)
    return EXIT_OK


# --- scripted sessions -------------------------------------------------------


class ScriptFailure(Exception):
    pass


class _ScriptRunner:
    """Line-oriented scripted session mirroring the session operations."""

    def __init__(self, fmt: str, seed: int):
        self.fmt = fmt
        self.seed = seed
        self.kb: Optional[kbmod.KnowledgeBase] = None
        self.kb_path: Optional[str] = None
        self.spec_lines: list[str] = []
        self.session: Optional[sess.Session] = None
        self.weights = ScoreWeights()
        self.threshold = 0.5

    def need_session(self) -> sess.Session:
        if self.session is None:
            raise ScriptFailure("no session started (use 'new-session' first)")
        return self.session

    def run_line(self, line: str) -> None:
        line = line.strip()
        if not line or line.startswith("#"):
            return
        op, _, rest = line.partition(" ")
        rest = rest.strip()
        handler = getattr(self, "op_" + op.replace("-", "_"), None)
        if handler is None:
            raise ScriptFailure(f"unknown script command {op!r}")
        handler(rest)

    def op_kb(self, rest: str) -> None:
        self.kb = kbmod.load_kb_file(rest)
        self.kb_path = rest

    def op_weights(self, rest: str) -> None:
        self.weights = _load_weights(rest)

    def op_threshold(self, rest: str) -> None:
        self.threshold = float(rest)

    def op_spec(self, rest: str) -> None:
        self.spec_lines.append(rest)

    def op_spec_file(self, rest: str) -> None:
        self.spec_lines.extend(_read(rest).splitlines())

    def op_new_session(self, rest: str) -> None:
        if self.kb is None:
            raise ScriptFailure("load a knowledge base before 'new-session'")
        self.session = sess.new_session(
            self.kb,
            "\n".join(self.spec_lines),
            weights=self.weights,
            threshold=self.threshold,
            session_id=rest or None,
        )

    def op_advance(self, rest: str) -> None:
        sess.advance(self.need_session())

    def op_commit(self, rest: str) -> None:
        decision_id, _, note = rest.partition(" ")
        session = self.need_session()
        introduced = sess.introduced_issues(session, decision_id)
        sess.commit_decision(session, decision_id, note.strip() or None)
        for issue in introduced:  # reported immediately, never blocking
            print(f"conflict: {issue.message}")

    def op_retract(self, rest: str) -> None:
        sess.retract_decision(self.need_session(), rest)

    def op_accept(self, rest: str) -> None:
        outcome_id, _, edited = rest.partition(" ")
        sess.resolve_outcome(
            self.need_session(), outcome_id, "accepted", edited.strip() or None
        )

    def op_reject(self, rest: str) -> None:
        sess.resolve_outcome(self.need_session(), rest, "rejected")

    def op_end(self, rest: str) -> None:
        sess.end_session(self.need_session())

    def op_save(self, rest: str) -> None:
        doc = sess.save_session(self.need_session())
        doc["kb_path"] = self.kb_path
        with open(rest, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True, ensure_ascii=False)

    # assertions ---------------------------------------------------------

    def op_expect_phase(self, rest: str) -> None:
        phase = self.need_session().phase
        if phase != rest:
            raise ScriptFailure(f"expected phase {rest!r}, session is in {phase!r}")

    def op_expect_rank(self, rest: str) -> None:
        decision_id, rank_text = rest.split()
        expected = int(rank_text)
        for candidate in self.need_session().candidates:
            if candidate.decision_id == decision_id:
                if candidate.rank != expected:
                    raise ScriptFailure(
                        f"expected {decision_id!r} at rank {expected}, found rank {candidate.rank}"
                    )
                return
        raise ScriptFailure(f"decision {decision_id!r} is not a candidate")

    def op_expect_issue(self, rest: str) -> None:
        kind, count_text = rest.split()
        expected = int(count_text)
        session = self.need_session()
        report = analysis.analyze(session.config, session.bound, session.kb, session.threshold)
        if kind == "any":
            actual = len(report.issues)
        else:
            actual = sum(1 for issue in report.issues if issue.kind == kind)
        if actual != expected:
            raise ScriptFailure(f"expected {expected} {kind} issue(s), found {actual}")

    def op_expect_level(self, rest: str) -> None:
        parts = rest.split()
        attribute = parts[0]
        level_text = " ".join(parts[1:]).strip('"')
        expected = speclang.OrdinalLevel.parse(level_text)
        if expected is None:
            raise ScriptFailure(f"unknown level {level_text!r}")
        session = self.need_session()
        evaluations, _ = analysis.evaluate_quality(session.config, session.bound, session.kb)
        for ev in evaluations:
            if ev.attribute_id == attribute:
                if ev.predicted is not expected:
                    raise ScriptFailure(
                        f"expected {attribute} at {expected.text!r}, predicted {ev.predicted.text!r}"
                    )
                return
        raise ScriptFailure(f"attribute {attribute!r} has no evaluation")

    def op_expect_spec_contains(self, rest: str) -> None:
        spec_text = self.need_session().spec_text()
        if rest not in spec_text:
            raise ScriptFailure(f"specification does not contain {rest!r}:\n{spec_text}")

    def op_report(self, rest: str) -> None:
        report = sess.final_report(self.need_session())
        rendered = (
            json.dumps(report.to_json_dict(), indent=2, sort_keys=True, ensure_ascii=False)
            if self.fmt == "json"
            else report.to_markdown()
        )
        if rest:
            with open(rest, "w", encoding="utf-8") as fh:
                fh.write(rendered + "\n")
        else:
            print(rendered)


def cmd_run(args) -> int:
    runner = _ScriptRunner(args.format, args.seed)
    try:
        for line_no, line in enumerate(_read(args.script).splitlines(), start=1):
            try:
                runner.run_line(line)
            except ScriptFailure as err:
                sys.stderr.write(f"{args.script}:{line_no}: assertion failed: {err}\n")
                return EXIT_ASSERTION
    except KB_ERRORS as err:
        sys.stderr.write(f"knowledge base error: {err}\n")
        return EXIT_KB
    except SPEC_ERRORS as err:
        sys.stderr.write(f"specification error: {err}\n")
        return EXIT_SPEC
    except ArchdeskError as err:
        sys.stderr.write(f"{args.script}: {err}\n")
        return EXIT_ASSERTION
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="archdesk", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--seed", type=int, default=0)
        return p

    p = common(sub.add_parser("validate-kb", help="validate a knowledge base document"))
    p.add_argument("kb")
    p.set_defaults(func=cmd_validate_kb)

    p = common(sub.add_parser("parse-spec", help="parse (and optionally bind) a specification"))
    p.add_argument("spec")
    p.add_argument("kb", nargs="?")
    p.set_defaults(func=cmd_parse_spec)

    p = common(sub.add_parser("infer", help="rank candidate decisions"))
    p.add_argument("kb")
    p.add_argument("spec")
    p.add_argument("--weights")
    p.add_argument("--decide", action="append", metavar="ID", help="already-committed decision")
    p.add_argument("--anneal", action="store_true", help="also search for a best whole configuration")
    p.add_argument("--anneal-temp", type=float, default=10.0)
    p.add_argument("--anneal-cooling", type=float, default=0.95)
    p.add_argument("--anneal-steps", type=int, default=200, help="steps per applicable decision")
    p.set_defaults(func=cmd_infer)

    p = common(sub.add_parser("analyze", help="detect issues and evaluate quality"))
    p.add_argument("kb")
    p.add_argument("spec")
    p.add_argument("--decide", action="append", metavar="ID")
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_analyze)

    p = common(sub.add_parser("run", help="execute a scripted session"))
    p.add_argument("script")
    p.set_defaults(func=cmd_run)

    p = common(sub.add_parser("report", help="render the report of a saved session"))
    p.add_argument("session")
    p.add_argument("--kb")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return err.code if isinstance(err.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except SystemExit as err:
        return err.code if isinstance(err.code, int) else EXIT_USAGE
    except FileNotFoundError as err:
        sys.stderr.write(f"file not found: {err.filename}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
