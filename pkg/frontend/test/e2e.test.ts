// End-to-end workflow against the real Python service, driven entirely
// through the UI's own api/state layers (no hand-rolled requests).
//
// Flow: enter the worked-example spec, see MySQL ranked first, override-
// commit PostgreSQL with a note (plus the data-replication tactic, which
// makes the conflict and its refinement outcomes appear), accept one
// outcome, advance; the final report must show the override note and the
// iteration-2 spec must contain the folded-back constraint.

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { SessionController } from "../src/state.js";

const REPO_ROOT = resolve(__dirname, "..", "..");
const PORT = 18000 + Math.floor(Math.random() * 2000);
const BASE = `http://127.0.0.1:${PORT}`;

const SPEC31 = [
  "use DBMS",
  '"License" includes {"GPL", "LGPL", "BSD"}',
  '"Backup facility" equal "yes"',
  '"Reliability" greater than "average"',
].join("\n");

let server: ChildProcess;

async function waitForService(): Promise<void> {
  for (let attempt = 0; attempt < 100; attempt++) {
    try {
      const response = await fetch(`${BASE}/kb`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 150));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  server = spawn(
    "python3",
    ["-m", "uvicorn", "--factory", "archdesk.service:create_app", "--port", String(PORT)],
    {
      cwd: REPO_ROOT,
      env: {
        ...process.env,
        QUARK_KB_DIR: join(REPO_ROOT, "fixtures"),
        QUARK_DATA_DIR: mkdtempSync(join(tmpdir(), "archdesk-e2e-")),
      },
      stdio: "ignore",
    },
  );
  await waitForService();
}, 30000);

afterAll(() => {
  server?.kill();
});

describe("architect workflow end to end", () => {
  const api = new ApiClient(BASE);
  const controller = new SessionController(api);

  it("runs the override-and-refine session against the live service", async () => {
    await controller.createSession("example_kb", SPEC31, "ui-e2e");
    expect(controller.state.session?.phase).toBe("specification");
    expect(controller.state.diagnostics).toHaveLength(0);

    // inference: MySQL is ranked first
    await controller.advance();
    const candidates = controller.state.session!.candidates;
    expect(candidates[0].decision).toBe("decide_mysql");
    expect(candidates[0].rank).toBe(1);
    expect(candidates[0].score.total).toBe(22);

    // what-if preview before committing anything
    await controller.preview("decide_sqlserver");
    expect(controller.state.whatIf?.score.total).toBe(-2);
    controller.clearPreview();

    // decision making: the architect prefers PostgreSQL; the first attempt
    // is refused without a note, then goes through with one
    await controller.advance();
    expect(await controller.commit("decide_postgresql")).toBe(false);
    expect(controller.state.pendingNoteFor).toBe("decide_postgresql");
    expect(await controller.commit("decide_postgresql", "more familiar to the team")).toBe(true);
    expect(controller.state.session!.config).toContain("decide_postgresql");

    // with the DBMS slot filled the board is empty, so the data-replication
    // tactic commits plainly; the conflict it introduces is reported
    // immediately but does not block
    expect(await controller.commit("data_replication")).toBe(true);
    expect(controller.state.banner).toMatch(/open conflict/);
    expect(controller.state.banner).toMatch(/violated by PostgreSQL/);

    // refinement materializes outcomes; accept the conflict's constraint
    await controller.advance();
    expect(controller.state.session!.phase).toBe("refinement");
    const outcomes = controller.state.session!.outcomes;
    expect(outcomes.length).toBeGreaterThan(0);
    const conflict = outcomes.find((o) => o.kind === "incompatibility");
    expect(conflict).toBeDefined();
    expect(conflict!.proposed_statements).toEqual(['"DataReplication" equal "yes"']);
    expect(await controller.resolveOutcome(conflict!.id, "accepted")).toBe(true);

    // next iteration: the accepted constraint is folded into the spec
    await controller.advance();
    const session = controller.state.session!;
    expect(session.iteration).toBe(2);
    expect(session.phase).toBe("specification");
    expect(session.spec_text).toContain('"DataReplication" equal "yes"');
    const folded = session.statements.find((s) => s.text === '"DataReplication" equal "yes"');
    expect(folded?.origin).toBe("refinement");

    // the report carries the override note and the iteration-2 spec
    await controller.loadReport();
    const report = controller.state.report!;
    const overrideEntry = report.log.find((e) => e.action === "overridden");
    expect(overrideEntry?.override_note).toBe("more familiar to the team");
    expect(report.iteration).toBe(2);
    expect(report.spec_text).toContain('"DataReplication" equal "yes"');
    expect(report.history.map((h) => h.iteration)).toEqual([1, 2]);
  }, 30000);

  it("reloading the page reproduces the view from GET endpoints alone", async () => {
    const before = controller.state.session!;
    const reloaded = new SessionController(api);
    reloaded.state.session = { ...before, version: -1 } as typeof before;
    await reloaded.refresh();
    expect(reloaded.state.session).toEqual(before);
    expect(reloaded.state.specBuffer).toBe(before.spec_text);
  });

  it("a stale tab gets a refresh-and-retry prompt, not a broken write", async () => {
    const fresh = new SessionController(api);
    fresh.state.session = { ...controller.state.session!, version: 0 };
    const ok = await fresh.advance();
    expect(ok).toBe(false);
    expect(fresh.state.staleConflict).toBe(true);
    expect(fresh.state.session!.version).toBe(controller.state.session!.version);
  });
});
