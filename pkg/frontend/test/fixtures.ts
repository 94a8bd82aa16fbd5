// Hand-built payloads mirroring the service's session renderings.

import type { Candidate, Outcome, SessionState } from "../src/types.js";

export function candidate(partial: Partial<Candidate> & { decision: string; rank: number }): Candidate {
  return {
    display_name: partial.decision,
    score: {
      satisfied: 0, violated: 0, unknown: 0, qr_met: 0, compat: 0,
      introduced_issues: 0, total: 0,
    },
    rationale: { offered_because: [], impact_summary: [], obligations: [], constraint_findings: [] },
    ...partial,
  } as Candidate;
}

export function sessionState(partial: Partial<SessionState> = {}): SessionState {
  return {
    id: "s1",
    version: 1,
    kb_id: "example_kb",
    kb_version: "example-kb-1",
    phase: "specification",
    iteration: 1,
    ended: false,
    spec_text: "use DBMS",
    statements: [{ index: 0, text: "use DBMS", origin: "architect", kind: "UseStatement" }],
    warnings: [],
    config: [],
    candidates: [],
    outcomes: [],
    log: [],
    weights: {},
    threshold: 0.5,
    history: [{ iteration: 1, spec_text: "use DBMS" }],
    ...partial,
  };
}

export function pendingOutcome(partial: Partial<Outcome> = {}): Outcome {
  return {
    id: "o1",
    kind: "qr_violation",
    payload: { message: "Reliability is predicted 'average' but the specification requires greater than 'average'" },
    proposed_statements: ['"Reliability" greater than "average"'],
    status: "pending",
    origin_statement_index: 3,
    iteration: 1,
    ...partial,
  };
}
