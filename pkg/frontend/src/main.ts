// Browser bootstrap: wire the controller to the DOM with delegated events.
// Rendering is a full re-draw of #app from the view state; the spec editor
// buffer lives in the state so typing survives re-renders.

import { ApiClient } from "./api.js";
import { renderApp } from "./render.js";
import { SessionController } from "./state.js";
import type { ViewState } from "./state.js";

const app = document.getElementById("app") as HTMLElement;
const api = new ApiClient("");
const controller = new SessionController(api, draw);

function draw(state: ViewState): void {
  const focused = document.activeElement as HTMLElement | null;
  const focusId = focused?.id;
  app.innerHTML = renderApp(state);
  if (focusId) {
    document.getElementById(focusId)?.focus();
  }
}

function inputValue(id: string): string {
  return (document.getElementById(id) as HTMLInputElement | HTMLTextAreaElement | null)?.value ?? "";
}

app.addEventListener("input", (event) => {
  const target = event.target as HTMLElement;
  if (target.id === "spec-input") {
    controller.setSpecBuffer((target as HTMLTextAreaElement).value);
  }
});

app.addEventListener("click", (event) => {
  const button = (event.target as HTMLElement).closest("[data-action]") as HTMLElement | null;
  if (!button) return;
  const action = button.dataset.action;
  const decision = button.dataset.decision ?? "";
  const outcome = button.dataset.outcome ?? "";
  void dispatch(action ?? "", decision, outcome).catch((error) => {
    controller.state.banner = String(error);
    draw(controller.state);
  });
});

async function dispatch(action: string, decision: string, outcome: string): Promise<void> {
  switch (action) {
    case "create-session":
      await controller.createSession(inputValue("kb-id") || "example_kb", inputValue("new-spec"));
      break;
    case "apply-spec":
      await controller.applySpec();
      break;
    case "advance":
      await controller.advance();
      break;
    case "commit":
      await controller.commit(decision);
      break;
    case "commit-noted":
      await controller.commit(decision, inputValue(`note-${decision}`));
      break;
    case "cancel-override":
      controller.cancelOverride();
      break;
    case "retract":
      await controller.retract(decision);
      break;
    case "preview":
      await controller.preview(decision);
      break;
    case "accept":
      await controller.resolveOutcome(outcome, "accepted");
      break;
    case "edit":
      controller.startOutcomeEdit(outcome);
      break;
    case "accept-edited":
      await controller.resolveOutcome(outcome, "accepted", inputValue(`edit-${outcome}`));
      break;
    case "reject":
      await controller.resolveOutcome(outcome, "rejected");
      break;
    case "show-report":
      await controller.loadReport();
      break;
    case "close-report":
      controller.closeReport();
      break;
    case "dismiss-banner":
      controller.state.banner = null;
      controller.state.staleConflict = false;
      draw(controller.state);
      break;
    default:
      break;
  }
}

draw(controller.state);
