// Payload shapes mirrored from the session service.

export interface ScoreBreakdown {
  satisfied: number;
  violated: number;
  unknown: number;
  qr_met: number;
  compat: number;
  introduced_issues: number;
  total: number;
}

export interface Clause {
  text: string;
  refs: string[];
}

export interface Rationale {
  offered_because: Clause[];
  impact_summary: Clause[];
  obligations: Clause[];
  constraint_findings: Clause[];
}

export interface Candidate {
  rank: number;
  decision: string;
  display_name: string;
  score: ScoreBreakdown;
  rationale: Rationale;
}

export interface IssueJson {
  kind: string;
  severity: string;
  refs: string[];
  message: string;
  data?: Record<string, unknown>;
}

export interface Outcome {
  id: string;
  kind: string;
  payload: Record<string, unknown>;
  proposed_statements: string[];
  status: "pending" | "accepted" | "rejected";
  origin_statement_index: number | null;
  iteration: number;
}

export interface StatementInfo {
  index: number;
  text: string;
  origin: "architect" | "refinement";
  kind: string;
}

export interface LogEntry {
  decision: string;
  action: "committed" | "overridden" | "retracted";
  iteration: number;
  override_note: string | null;
}

export interface HistoryEntry {
  iteration: number;
  spec_text: string;
}

export interface SessionState {
  id: string;
  version: number;
  kb_id: string;
  kb_version: string;
  phase: "specification" | "inference" | "decision_making" | "refinement";
  iteration: number;
  ended: boolean;
  spec_text: string;
  statements: StatementInfo[];
  warnings: string[];
  config: string[];
  candidates: Candidate[];
  outcomes: Outcome[];
  log: LogEntry[];
  weights: Record<string, number>;
  threshold: number;
  history: HistoryEntry[];
}

export interface Diagnostic {
  line: number;
  column: number;
  message: string;
  expected: string[];
}

export interface ApiErrorBody {
  status: number;
  kind: string;
  message: string;
  details: {
    diagnostics?: Diagnostic[];
    unresolved?: { statement: number; name: string }[];
  };
}

export interface WhatIfResult {
  decision: string;
  score: ScoreBreakdown;
  new_total: number;
  issues_introduced: IssueJson[];
  findings: Clause[];
}

export interface EvaluationJson {
  attribute: string;
  predicted: string;
  aggregate_valence: number;
  contributing: { decision: string; valence: number; certainty: string; note: string }[];
}

export interface ReportJson {
  session: string;
  kb_version: string;
  iteration: number;
  phase: string;
  spec_text: string;
  decisions: { decision: string; display_name: string; rationale: Rationale }[];
  log: LogEntry[];
  analysis: {
    issues: IssueJson[];
    suggestions: { attribute: string; supporting_decisions: string[]; proposed_statement: string }[];
    evaluations: EvaluationJson[];
  };
  history: HistoryEntry[];
}

export interface KbInfo {
  id: string;
  version: string;
  decisions: number;
}
