import { ApiClient } from "./api";
import { AnnotationController } from "./controller";
import { DraftStore } from "./drafts";
import { renderTable } from "./table";
import type { TableState } from "./state";

function dialog(container: HTMLElement, className: string, text: string, action: {
  label: string;
  run: () => void;
}): void {
  container.querySelectorAll(`.${className}`).forEach((el) => el.remove());
  const box = document.createElement("div");
  box.className = className;
  const message = document.createElement("p");
  message.textContent = text;
  box.appendChild(message);
  const button = document.createElement("button");
  button.textContent = action.label;
  button.addEventListener("click", () => {
    box.remove();
    action.run();
  });
  box.appendChild(button);
  container.prepend(box);
}

export function boot(root: HTMLElement, baseUrl: string, token: string): AnnotationController {
  const api = new ApiClient(baseUrl, token);
  const drafts = new DraftStore();
  const tableHost = document.createElement("div");
  tableHost.className = "table-host";
  root.appendChild(tableHost);

  const controller: AnnotationController = new AnnotationController(api, drafts, {
    onState(state: TableState) {
      renderTable(tableHost, state, controller, api);
    },
    onConflict() {
      dialog(root, "conflict-dialog",
        "This task changed on the server. Reload to continue.", {
          label: "reload",
          run: () => void controller.reload(),
        });
    },
    onNetworkError(message: string) {
      dialog(root, "retry-banner",
        `Request failed (your draft is saved locally): ${message}`, {
          label: "retry",
          run: () => void controller.refreshCheck(),
        });
    },
    onRejected(violations) {
      const text = violations.map((v) => `${v.sense ?? "word"}: ${v.message}`).join("; ");
      dialog(root, "rejection-banner", `Submission rejected: ${text}`, {
        label: "dismiss",
        run: () => undefined,
      });
    },
    onDone() {
      tableHost.innerHTML = "<p class='all-done'>No words left in the queue.</p>";
    },
    onSubmitted(word: string) {
      dialog(root, "submitted-banner", `Submitted ${word}.`, {
        label: "dismiss",
        run: () => undefined,
      });
    },
  });

  void controller.start();
  return controller;
}

declare global {
  interface Window {
    sensechainBoot: typeof boot;
  }
}

if (typeof window !== "undefined") {
  window.sensechainBoot = boot;
}
