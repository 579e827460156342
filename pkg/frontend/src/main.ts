/** Browser bootstrap: binds the console controller to the page.
 *
 * One delegated click handler reads data-command attributes from whatever the
 * renderers drew; input values are read back from the live form elements.
 * The service URL comes from the page's query string (?api=...) and falls
 * back to same-origin.
 */

import { ApiClient } from "./api.js";
import { Console } from "./console.js";

function inputValue(root: Element, name: string): string {
  const el = root.querySelector<HTMLInputElement | HTMLSelectElement>(`[name="${name}"]`);
  return el ? el.value : "";
}

function startConsole(): void {
  const mount = document.getElementById("console");
  if (!mount) throw new Error("missing #console mount point");

  const apiBase =
    new URLSearchParams(window.location.search).get("api") ?? window.location.origin;
  const api = new ApiClient(apiBase);
  const ui = new Console(api, {
    present: (html) => {
      mount.innerHTML = html;
    },
    saveFile: (name, text) => {
      const blob = new Blob([text], { type: "text/plain" });
      const link = document.createElement("a");
      link.href = URL.createObjectURL(blob);
      link.download = name;
      link.click();
      URL.revokeObjectURL(link.href);
    },
  });

  mount.addEventListener("click", (event) => {
    const target = event.target as Element | null;
    const button = target?.closest<HTMLElement>("[data-command], [data-job]");
    if (!button) return;
    event.preventDefault();

    const command = button.dataset.command;
    const job = button.dataset.job;
    if (!command && job) {
      void ui.openJob(job);
      return;
    }
    switch (command) {
      case "login":
        void ui.login(inputValue(mount, "username"), inputValue(mount, "password"));
        break;
      case "register":
        void ui.register(
          inputValue(mount, "username"),
          inputValue(mount, "password"),
          inputValue(mount, "display_name") || undefined,
        );
        break;
      case "submit-request": {
        const start = inputValue(mount, "start");
        const end = inputValue(mount, "end");
        void ui.submitBlockRequest({
          nodes: Number(inputValue(mount, "nodes")),
          ...(start && end ? { start: Number(start), end: Number(end) } : {}),
          description: inputValue(mount, "description"),
        });
        break;
      }
      case "approve-request":
        void ui.reviewRequest(button.dataset.request ?? "", "approve");
        break;
      case "reject-request":
        void ui.reviewRequest(button.dataset.request ?? "", "reject");
        break;
      case "activate":
        void ui.activateBlock(button.dataset.block ?? "");
        break;
      case "deactivate":
        void ui.deactivateBlock(button.dataset.block ?? "");
        break;
      case "submit-job": {
        const view = ui.view;
        if (view.kind !== "block") break;
        void (async () => {
          const snapshot = await api.getBlock(view.blockId);
          await ui.submitJob(view.blockId, snapshot.queue_name, {
            environment: inputValue(mount, "environment"),
            nodes: Number(inputValue(mount, "nodes")),
            cpuSeconds: Number(inputValue(mount, "cpu")),
            payloadName: inputValue(mount, "payload") || undefined,
          });
        })();
        break;
      }
      case "job-action":
        void ui.jobAction(button.dataset.job ?? "", button.dataset.action ?? "");
        break;
      case "download-logs":
        void ui.downloadLogs(button.dataset.job ?? "");
        break;
    }
  });

  ui.logout();
  ui.startPolling();
}

startConsole();
