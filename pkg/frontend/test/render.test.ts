import { describe, expect, it } from "vitest";

import {
  escapeHtml,
  renderApp,
  renderCandidateBoard,
  renderCandidateCard,
  renderOutcomeInbox,
  renderSpecEditor,
  renderTimeline,
} from "../src/render.js";
import { initialState } from "../src/state.js";
import { candidate, pendingOutcome, sessionState } from "./fixtures.js";

function stateWith(overrides: Partial<ReturnType<typeof initialState>> = {}) {
  return { ...initialState(), ...overrides };
}

describe("escapeHtml", () => {
  it("neutralizes markup in clause text", () => {
    expect(escapeHtml('<b>"x" & y</b>')).toBe("&lt;b&gt;&quot;x&quot; &amp; y&lt;/b&gt;");
  });
});

describe("candidate board", () => {
  const mysqlFirst = sessionState({
    phase: "inference",
    candidates: [
      candidate({
        decision: "decide_mysql",
        rank: 1,
        display_name: "Use MySQL 5",
        score: { satisfied: 1, violated: 0, unknown: 1, qr_met: 0, compat: 6, introduced_issues: 0, total: 22 },
        rationale: {
          offered_because: [{ text: "offered because License is 'GPL'", refs: [] }],
          impact_summary: [{ text: "has a neutral impact on Reliability (conditional)", refs: [] }],
          obligations: [],
          constraint_findings: [{ text: "no information available about Backup facility", refs: [] }],
        },
      }),
      candidate({ decision: "decide_postgresql", rank: 2, display_name: "Use PostgreSQL 8.3" }),
    ],
  });

  it("renders ranked cards with the rationale clauses", () => {
    const html = renderCandidateBoard(stateWith({ session: mysqlFirst }));
    const mysqlPos = html.indexOf("Use MySQL 5");
    const postgresPos = html.indexOf("Use PostgreSQL 8.3");
    expect(mysqlPos).toBeGreaterThan(-1);
    expect(mysqlPos).toBeLessThan(postgresPos);
    expect(html).toContain("#1");
    expect(html).toContain("no information available about Backup facility");
    expect(html).toContain("neutral impact on Reliability");
  });

  it("asks for a note only when the override flow is pending", () => {
    const plain = renderCandidateCard(mysqlFirst.candidates[1], stateWith({ session: mysqlFirst }));
    expect(plain).not.toContain("override note is required");
    const asking = renderCandidateCard(
      mysqlFirst.candidates[1],
      stateWith({ session: mysqlFirst, pendingNoteFor: "decide_postgresql" }),
    );
    expect(asking).toContain("override note is required");
    expect(asking).toContain('id="note-decide_postgresql"');
  });

  it("shows the what-if preview on the selected card", () => {
    const preview = {
      decision: "decide_postgresql",
      score: { satisfied: 1, violated: 0, unknown: 1, qr_met: 1, compat: 1, introduced_issues: 1, total: 1 },
      new_total: 23,
      findings: [],
      issues_introduced: [
        { kind: "incompatibility", severity: "error", refs: [], message: "both selected for the DBMS slot" },
      ],
    };
    const html = renderCandidateCard(
      mysqlFirst.candidates[1],
      stateWith({ session: mysqlFirst, selectedCandidate: "decide_postgresql", whatIf: preview }),
    );
    expect(html).toContain("What if?");
    expect(html).toContain("both selected for the DBMS slot");
  });
});

describe("spec editor", () => {
  it("shows parser diagnostics with line and column", () => {
    const html = renderSpecEditor(
      stateWith({
        session: sessionState(),
        specBuffer: '"Backup facility" include "yes"',
        diagnostics: [{ line: 1, column: 19, message: "expected a comparator keyword", expected: ["equal"] }],
      }),
    );
    expect(html).toContain("line 1, column 19");
    expect(html).toContain("expected a comparator keyword");
  });

  it("marks unresolved names from bind errors", () => {
    const html = renderSpecEditor(
      stateWith({
        session: sessionState(),
        unresolved: [{ statement: 0, name: "Blockchain" }],
      }),
    );
    expect(html).toContain("unresolved name");
    expect(html).toContain("Blockchain");
  });

  it("an empty buffer renders without diagnostics", () => {
    const html = renderSpecEditor(stateWith({ session: sessionState({ statements: [], spec_text: "" }) }));
    expect(html).not.toContain("diagnostic");
  });

  it("badges folded-back statements", () => {
    const session = sessionState({
      statements: [
        { index: 0, text: "use DBMS", origin: "architect", kind: "UseStatement" },
        { index: 1, text: '"Security" at least "high"', origin: "refinement", kind: "QualityRequirement" },
      ],
    });
    const html = renderSpecEditor(stateWith({ session }));
    expect(html).toContain("folded back");
  });
});

describe("outcome inbox", () => {
  it("renders accept / edit / reject for pending outcomes", () => {
    const html = renderOutcomeInbox(
      stateWith({ session: sessionState({ phase: "refinement", outcomes: [pendingOutcome()] }) }),
    );
    expect(html).toContain('data-action="accept"');
    expect(html).toContain('data-action="edit"');
    expect(html).toContain('data-action="reject"');
    expect(html).toContain("1 pending");
  });

  it("shows the edit field prefilled with the proposal", () => {
    const html = renderOutcomeInbox(
      stateWith({
        session: sessionState({ phase: "refinement", outcomes: [pendingOutcome()] }),
        editingOutcome: "o1",
      }),
    );
    expect(html).toContain('id="edit-o1"');
    expect(html).toContain("&quot;Reliability&quot; greater than &quot;average&quot;");
  });

  it("renders resolved outcomes inert", () => {
    const html = renderOutcomeInbox(
      stateWith({
        session: sessionState({ outcomes: [pendingOutcome({ status: "rejected" })] }),
      }),
    );
    expect(html).toContain("rejected");
    expect(html).not.toContain('data-action="accept"');
  });
});

describe("timeline and app shell", () => {
  it("shows one entry per iteration", () => {
    const html = renderTimeline(
      sessionState({
        history: [
          { iteration: 1, spec_text: "use DBMS" },
          { iteration: 2, spec_text: 'use DBMS\n"Security" at least "high"' },
        ],
      }),
    );
    expect(html).toContain("Iteration 1");
    expect(html).toContain("Iteration 2");
    expect(html).toContain("&quot;Security&quot; at least &quot;high&quot;");
  });

  it("renders the start panel without a session", () => {
    const html = renderApp(initialState());
    expect(html).toContain("Start a session");
    expect(html).toContain('data-action="create-session"');
  });

  it("renders all panels with a session", () => {
    const html = renderApp(stateWith({ session: sessionState() }));
    for (const id of ["spec-panel", "board-panel", "outcome-panel", "timeline-panel"]) {
      expect(html).toContain(id);
    }
  });
});
