// View state and the controller that mediates every mutation.
//
// Two rules hold throughout: the whole view is reconstructible from GET
// endpoints alone (refresh() rebuilds it), and nothing is ever committed,
// accepted, or rejected except through an explicit controller call made
// from a user action.

import { ApiClient, ApiError } from "./api.js";
import type { Diagnostic, IssueJson, ReportJson, SessionState, WhatIfResult } from "./types.js";

export interface ViewState {
  session: SessionState | null;
  specBuffer: string;
  diagnostics: Diagnostic[];
  unresolved: { statement: number; name: string }[];
  selectedCandidate: string | null;
  whatIf: WhatIfResult | null;
  pendingNoteFor: string | null; // decision awaiting an override note
  editingOutcome: string | null; // outcome whose proposal is being edited
  report: ReportJson | null;
  banner: string | null;
  staleConflict: boolean; // a 409 happened; view was refreshed
}

export function initialState(): ViewState {
  return {
    session: null,
    specBuffer: "",
    diagnostics: [],
    unresolved: [],
    selectedCandidate: null,
    whatIf: null,
    pendingNoteFor: null,
    editingOutcome: null,
    report: null,
    banner: null,
    staleConflict: false,
  };
}

export class SessionController {
  state: ViewState = initialState();

  constructor(
    private readonly api: ApiClient,
    private readonly onChange: (state: ViewState) => void = () => {},
  ) {}

  private emit(): void {
    this.onChange(this.state);
  }

  private adopt(session: SessionState): void {
    this.state.session = session;
    this.state.specBuffer = session.spec_text;
    this.state.diagnostics = [];
    this.state.unresolved = [];
    this.state.whatIf = null;
    this.state.pendingNoteFor = null;
    this.state.banner = null;
    this.emit();
  }

  /** Rebuild the entire view from the service; the page-reload path. */
  async refresh(): Promise<void> {
    if (!this.state.session) return;
    this.adopt(await this.api.getSession(this.state.session.id));
  }

  private async mutate(operation: () => Promise<SessionState>): Promise<boolean> {
    this.state.staleConflict = false;
    try {
      this.adopt(await operation());
      return true;
    } catch (error) {
      if (error instanceof ApiError && error.kind === "version_conflict") {
        // stale tab: re-pull the authoritative state and ask to retry
        this.state.staleConflict = true;
        await this.refresh();
        this.state.banner = "The session changed elsewhere; the view was refreshed. Please retry.";
        this.state.staleConflict = true;
        this.emit();
        return false;
      }
      throw error;
    }
  }

  async createSession(kbId: string, specText: string, sessionId?: string): Promise<void> {
    try {
      this.adopt(await this.api.createSession(kbId, specText, sessionId));
      this.state.specBuffer = specText;
      this.emit();
    } catch (error) {
      if (error instanceof ApiError) {
        this.captureSpecError(error, specText);
        return;
      }
      throw error;
    }
  }

  setSpecBuffer(text: string): void {
    this.state.specBuffer = text;
  }

  /** PUT the editor buffer; 422 payloads become inline diagnostics. */
  async applySpec(): Promise<boolean> {
    const session = this.requireSession();
    try {
      return await this.mutate(() =>
        this.api.updateSpec(session.id, this.state.specBuffer, session.version),
      );
    } catch (error) {
      if (error instanceof ApiError) {
        this.captureSpecError(error, this.state.specBuffer);
        return false;
      }
      throw error;
    }
  }

  private captureSpecError(error: ApiError, buffer: string): void {
    this.state.specBuffer = buffer;
    this.state.diagnostics = error.body.details.diagnostics ?? [];
    this.state.unresolved = error.body.details.unresolved ?? [];
    this.state.banner = error.message;
    this.emit();
  }

  async advance(): Promise<boolean> {
    const session = this.requireSession();
    return this.mutate(() => this.api.advance(session.id, session.version));
  }

  /**
   * Commit a decision. Without a note, committing anything but the top
   * candidate is refused by the service; the refusal becomes the
   * note-demanding override flow rather than an error banner. Conflicts
   * the commit introduces are reported immediately but never block.
   */
  async commit(decisionId: string, note?: string): Promise<boolean> {
    const session = this.requireSession();
    let issues: IssueJson[] = [];
    try {
      const ok = await this.mutate(async () => {
        const response = (await this.api.commit(
          session.id,
          decisionId,
          session.version,
          note,
        )) as SessionState & { issues?: IssueJson[] };
        issues = response.issues ?? [];
        delete response.issues;
        return response;
      });
      if (ok && issues.length) {
        this.state.banner =
          `Committed with ${issues.length} open conflict(s): ` +
          issues.map((i) => i.message).join("; ");
        this.emit();
      }
      return ok;
    } catch (error) {
      if (error instanceof ApiError && error.kind === "override_note_required") {
        this.state.pendingNoteFor = decisionId;
        this.state.banner = null;
        this.emit();
        return false;
      }
      throw error;
    }
  }

  cancelOverride(): void {
    this.state.pendingNoteFor = null;
    this.emit();
  }

  async retract(decisionId: string): Promise<boolean> {
    const session = this.requireSession();
    return this.mutate(() => this.api.retract(session.id, decisionId, session.version));
  }

  /** Read-only preview; never changes session state. */
  async preview(decisionId: string): Promise<void> {
    const session = this.requireSession();
    this.state.selectedCandidate = decisionId;
    this.state.whatIf = await this.api.whatIf(session.id, decisionId);
    this.emit();
  }

  clearPreview(): void {
    this.state.selectedCandidate = null;
    this.state.whatIf = null;
    this.emit();
  }

  startOutcomeEdit(outcomeId: string): void {
    this.state.editingOutcome = outcomeId;
    this.emit();
  }

  async resolveOutcome(
    outcomeId: string,
    verdict: "accepted" | "rejected",
    editedStatement?: string,
  ): Promise<boolean> {
    const session = this.requireSession();
    this.state.editingOutcome = null;
    return this.mutate(() =>
      this.api.resolveOutcome(session.id, outcomeId, verdict, session.version, editedStatement),
    );
  }

  async loadReport(): Promise<void> {
    const session = this.requireSession();
    this.state.report = await this.api.report(session.id);
    this.emit();
  }

  closeReport(): void {
    this.state.report = null;
    this.emit();
  }

  private requireSession(): SessionState {
    if (!this.state.session) {
      throw new Error("no active session");
    }
    return this.state.session;
  }
}
