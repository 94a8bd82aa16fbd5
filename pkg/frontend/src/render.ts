// Pure HTML renderers over the view state. Everything returns strings so
// the views are testable without a browser; main.ts owns the DOM.

import type { ViewState } from "./state.js";
import type { Candidate, Outcome, ReportJson, SessionState } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const PHASE_LABELS: Record<string, string> = {
  specification: "1 · Specification",
  inference: "2 · Inference",
  decision_making: "3 · Decision making",
  refinement: "4 · Refinement",
};

export function renderPhaseStrip(session: SessionState): string {
  const steps = Object.entries(PHASE_LABELS)
    .map(([phase, label]) => {
      const active = phase === session.phase ? " active" : "";
      return `<span class="phase${active}">${label}</span>`;
    })
    .join("");
  return `<div class="phase-strip">${steps}<span class="iteration">iteration ${session.iteration}</span></div>`;
}

export function renderSpecEditor(state: ViewState): string {
  const session = state.session;
  const editable = session?.phase === "specification";
  const diagnostics = state.diagnostics
    .map(
      (d) =>
        `<li class="diagnostic" data-line="${d.line}">line ${d.line}, column ${d.column}: ` +
        `${escapeHtml(d.message)}${d.expected.length ? ` (expected ${escapeHtml(d.expected.join(" | "))})` : ""}</li>`,
    )
    .join("");
  const unresolved = state.unresolved
    .map(
      (u) =>
        `<li class="diagnostic unresolved" data-statement="${u.statement}">statement ${u.statement + 1}: ` +
        `unresolved name <code>${escapeHtml(u.name)}</code></li>`,
    )
    .join("");
  const warnings = (session?.warnings ?? [])
    .map((w) => `<li class="warning">${escapeHtml(w)}</li>`)
    .join("");
  const statements = (session?.statements ?? [])
    .map(
      (s) =>
        `<li class="statement origin-${s.origin}"><code>${escapeHtml(s.text)}</code>` +
        `<span class="badge">${s.origin === "refinement" ? "folded back" : "architect"}</span></li>`,
    )
    .join("");
  return `
  <section class="panel" id="spec-panel">
    <h2>Specification</h2>
    <textarea id="spec-input" rows="8" spellcheck="false" ${editable ? "" : "disabled"}
      placeholder="use DBMS&#10;&quot;License&quot; includes {&quot;GPL&quot;}">${escapeHtml(state.specBuffer)}</textarea>
    <div class="row">
      <button data-action="apply-spec" ${editable ? "" : "disabled"}>Apply specification</button>
      <button data-action="advance">Advance phase</button>
      <button data-action="show-report">Final report</button>
    </div>
    ${diagnostics || unresolved ? `<ul class="diagnostics">${diagnostics}${unresolved}</ul>` : ""}
    ${warnings ? `<ul class="warnings">${warnings}</ul>` : ""}
    <ul class="statements">${statements}</ul>
  </section>`;
}

function renderClauses(title: string, clauses: { text: string }[]): string {
  if (!clauses.length) return "";
  const items = clauses.map((c) => `<li>${escapeHtml(c.text)}</li>`).join("");
  return `<div class="clauses"><h4>${title}</h4><ul>${items}</ul></div>`;
}

export function renderCandidateCard(candidate: Candidate, state: ViewState): string {
  const s = candidate.score;
  const askingNote = state.pendingNoteFor === candidate.decision;
  const preview =
    state.whatIf && state.selectedCandidate === candidate.decision
      ? `<div class="whatif">
           <strong>What if?</strong> new total ${state.whatIf.new_total}
           ${state.whatIf.findings
             .map((f) => `<div class="finding">${escapeHtml(f.text)}</div>`)
             .join("")}
           ${state.whatIf.issues_introduced
             .map((i) => `<div class="issue ${i.severity}">${escapeHtml(i.message)}</div>`)
             .join("") || "<div class='issue none'>no new conflicts</div>"}
         </div>`
      : "";
  const noteForm = askingNote
    ? `<div class="override">
         <p>This is not the top-ranked candidate. An override note is required.</p>
         <input type="text" id="note-${candidate.decision}" placeholder="why override the ranking?">
         <button data-action="commit-noted" data-decision="${candidate.decision}">Commit with note</button>
         <button data-action="cancel-override">Cancel</button>
       </div>`
    : "";
  return `
  <article class="candidate" data-decision="${candidate.decision}">
    <header>
      <span class="rank">#${candidate.rank}</span>
      <h3>${escapeHtml(candidate.display_name)}</h3>
      <span class="total ${s.total < 0 ? "neg" : "pos"}">${s.total}</span>
    </header>
    <table class="breakdown">
      <tr><td>satisfied</td><td>${s.satisfied}</td><td>violated</td><td>${s.violated}</td></tr>
      <tr><td>unknown</td><td>${s.unknown}</td><td>QRs met</td><td>${s.qr_met}</td></tr>
      <tr><td>compatible</td><td>${s.compat}</td><td>conflicts</td><td>${s.introduced_issues}</td></tr>
    </table>
    ${renderClauses("Offered because", candidate.rationale.offered_because)}
    ${renderClauses("Impacts", candidate.rationale.impact_summary)}
    ${renderClauses("Obligations", candidate.rationale.obligations)}
    ${renderClauses("Findings", candidate.rationale.constraint_findings)}
    <div class="row">
      <button data-action="commit" data-decision="${candidate.decision}">Commit</button>
      <button data-action="preview" data-decision="${candidate.decision}">What if?</button>
    </div>
    ${preview}
    ${noteForm}
  </article>`;
}

export function renderCandidateBoard(state: ViewState): string {
  const session = state.session;
  if (!session) return "";
  const committed = session.config
    .map(
      (id) =>
        `<li><code>${escapeHtml(id)}</code>` +
        `<button data-action="retract" data-decision="${escapeHtml(id)}">retract</button></li>`,
    )
    .join("");
  const cards = session.candidates.map((c) => renderCandidateCard(c, state)).join("");
  return `
  <section class="panel" id="board-panel">
    <h2>Candidates</h2>
    ${session.config.length ? `<ul class="committed"><h4>Committed</h4>${committed}</ul>` : ""}
    <div class="board">${cards || "<p class='empty'>No candidates in this phase.</p>"}</div>
  </section>`;
}

export function renderOutcomeItem(outcome: Outcome, state: ViewState): string {
  const proposal = outcome.proposed_statements
    .map((s) => `<code>${escapeHtml(s)}</code>`)
    .join(" + ");
  const message = escapeHtml(String(outcome.payload["message"] ?? ""));
  if (outcome.status !== "pending") {
    return `<li class="outcome resolved ${outcome.status}" data-outcome="${outcome.id}">
      <span class="kind">${outcome.kind}</span> ${message} — <em>${outcome.status}</em>
    </li>`;
  }
  const editing = state.editingOutcome === outcome.id;
  const editForm = editing
    ? `<div class="edit">
         <input type="text" id="edit-${outcome.id}" value="${escapeHtml(outcome.proposed_statements[0] ?? "")}">
         <button data-action="accept-edited" data-outcome="${outcome.id}">Accept edited</button>
       </div>`
    : "";
  return `<li class="outcome pending" data-outcome="${outcome.id}">
    <span class="kind">${outcome.kind}</span> ${message}
    ${proposal ? `<div class="proposal">proposes: ${proposal}</div>` : ""}
    <div class="row">
      <button data-action="accept" data-outcome="${outcome.id}">Accept</button>
      <button data-action="edit" data-outcome="${outcome.id}">Edit &amp; accept</button>
      <button data-action="reject" data-outcome="${outcome.id}">Reject</button>
    </div>
    ${editForm}
  </li>`;
}

export function renderOutcomeInbox(state: ViewState): string {
  const session = state.session;
  if (!session) return "";
  const items = session.outcomes.map((o) => renderOutcomeItem(o, state)).join("");
  const pending = session.outcomes.filter((o) => o.status === "pending").length;
  return `
  <section class="panel" id="outcome-panel">
    <h2>Refinement outcomes ${pending ? `<span class="badge">${pending} pending</span>` : ""}</h2>
    <ul class="outcomes">${items || "<p class='empty'>Nothing to triage.</p>"}</ul>
    <button data-action="advance">Advance iteration</button>
  </section>`;
}

export function renderTimeline(session: SessionState): string {
  const entries = session.history
    .map(
      (h) =>
        `<div class="timeline-entry"><h4>Iteration ${h.iteration}</h4>` +
        `<pre>${escapeHtml(h.spec_text || "(empty)")}</pre></div>`,
    )
    .join("");
  return `<section class="panel" id="timeline-panel"><h2>Iteration timeline</h2>
    <div class="timeline">${entries}</div></section>`;
}

export function renderReport(report: ReportJson): string {
  const decisions = report.decisions
    .map(
      (d) => `<article class="report-decision"><h3>${escapeHtml(d.display_name)}</h3>
        ${renderClauses("Offered because", d.rationale.offered_because)}
        ${renderClauses("Impacts", d.rationale.impact_summary)}
        ${renderClauses("Obligations", d.rationale.obligations)}
        ${renderClauses("Findings", d.rationale.constraint_findings)}
      </article>`,
    )
    .join("");
  const log = report.log
    .map(
      (entry) =>
        `<li>iteration ${entry.iteration}: ${entry.action} <code>${escapeHtml(entry.decision)}</code>` +
        `${entry.override_note ? ` — <em>${escapeHtml(entry.override_note)}</em>` : ""}</li>`,
    )
    .join("");
  const evaluations = report.analysis.evaluations
    .map((e) => `<li>${escapeHtml(e.attribute)}: <strong>${escapeHtml(e.predicted)}</strong></li>`)
    .join("");
  const issues = report.analysis.issues
    .map((i) => `<li class="issue ${i.severity}">${escapeHtml(i.message)}</li>`)
    .join("");
  const history = report.history
    .map((h) => `<div><h4>Iteration ${h.iteration}</h4><pre>${escapeHtml(h.spec_text)}</pre></div>`)
    .join("");
  return `
  <section class="panel report" id="report-panel">
    <h2>Final report <button data-action="close-report">close</button></h2>
    <p>session <code>${escapeHtml(report.session)}</code>, iteration ${report.iteration}</p>
    <h3>Specification</h3><pre>${escapeHtml(report.spec_text)}</pre>
    <h3>Decisions</h3>${decisions || "<p class='empty'>none</p>"}
    <h3>Decision log</h3><ul>${log || "<li>(empty)</li>"}</ul>
    <h3>Quality evaluation</h3><ul>${evaluations || "<li>(none)</li>"}</ul>
    ${issues ? `<h3>Open issues</h3><ul>${issues}</ul>` : ""}
    <h3>Spec history</h3>${history}
  </section>`;
}

export function renderApp(state: ViewState): string {
  if (!state.session) {
    return `
  <section class="panel" id="start-panel">
    <h2>Start a session</h2>
    <label>Knowledge base id <input type="text" id="kb-id" value="example_kb"></label>
    <textarea id="new-spec" rows="6" placeholder="use DBMS"></textarea>
    <button data-action="create-session">Create session</button>
    ${state.banner ? `<p class="banner">${escapeHtml(state.banner)}</p>` : ""}
    ${state.diagnostics.length ? renderSpecEditor(state) : ""}
  </section>`;
  }
  const session = state.session;
  return `
  ${renderPhaseStrip(session)}
  ${state.banner ? `<p class="banner">${escapeHtml(state.banner)}${state.staleConflict ? " <button data-action='dismiss-banner'>ok</button>" : ""}</p>` : ""}
  <main class="columns">
    ${renderSpecEditor(state)}
    ${renderCandidateBoard(state)}
    ${renderOutcomeInbox(state)}
    ${renderTimeline(session)}
  </main>
  ${state.report ? renderReport(state.report) : ""}`;
}
