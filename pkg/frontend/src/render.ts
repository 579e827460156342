/** HTML renderers: view model in, markup string out.
 *
 * Pure functions with no DOM access, so each view can be asserted on as text.
 * All dynamic values pass through escapeHtml; action buttons carry their
 * command in data attributes for the controller to pick up.
 */

import { STRINGS } from "./strings.js";
import type { RequestDoc } from "./api.js";
import type {
  BlockDashboard,
  JobForm,
  JobPanel,
  LogPane,
  ValidationResult,
} from "./viewmodels.js";

export function escapeHtml(value: string): string {
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function fieldError(result: ValidationResult, field: string): string {
  const message = result.errors[field];
  if (!message) return "";
  return `<p class="field-error" data-field="${escapeHtml(field)}">${escapeHtml(message)}</p>`;
}

export function renderToast(message: string): string {
  return `<div class="toast">${escapeHtml(message)}</div>`;
}

export function renderLogin(notice?: string): string {
  const banner = notice ? `<p class="notice">${escapeHtml(notice)}</p>` : "";
  return [
    `<section class="login">`,
    `<h1>${escapeHtml(STRINGS.loginHeading)}</h1>`,
    banner,
    `<label>${escapeHtml(STRINGS.usernameLabel)} <input name="username"></label>`,
    `<label>${escapeHtml(STRINGS.passwordLabel)} <input name="password" type="password"></label>`,
    `<button data-command="login">${escapeHtml(STRINGS.loginButton)}</button>`,
    `<h2>${escapeHtml(STRINGS.registerHeading)}</h2>`,
    `<label>${escapeHtml(STRINGS.displayNameLabel)} <input name="display_name"></label>`,
    `<button data-command="register">${escapeHtml(STRINGS.registerButton)}</button>`,
    `</section>`,
  ].join("\n");
}

export function renderBlockDashboard(vm: BlockDashboard): string {
  const badges = vm.nodeBadges
    .map(
      (b) =>
        `<span class="badge badge-${escapeHtml(b.state.toLowerCase())}">` +
        `${escapeHtml(b.node)} ${escapeHtml(b.state)}</span>`,
    )
    .join("\n");
  const queue = vm.queueScript
    ? `<pre class="queue-script">${escapeHtml(vm.queueScript)}</pre>`
    : `<p>${escapeHtml(STRINGS.blockQueueMissing)}</p>`;
  const jobs = vm.activeJobs.length
    ? `<ul>` +
      vm.activeJobs
        .map((j) => `<li><a data-job="${escapeHtml(j)}">${escapeHtml(j)}</a></li>`)
        .join("") +
      `</ul>`
    : `<p>${escapeHtml(STRINGS.blockNoJobs)}</p>`;
  const controls: string[] = [];
  if (vm.showActivate) {
    controls.push(
      `<button data-command="activate" data-block="${escapeHtml(vm.blockId)}">` +
        `${escapeHtml(STRINGS.activateButton)}</button>`,
    );
  }
  if (vm.showDeactivate) {
    controls.push(
      `<button data-command="deactivate" data-block="${escapeHtml(vm.blockId)}">` +
        `${escapeHtml(STRINGS.deactivateButton)}</button>`,
    );
  }
  return [
    `<section class="block-dashboard" data-block="${escapeHtml(vm.blockId)}">`,
    `<h1>${escapeHtml(STRINGS.blockHeading)} ${escapeHtml(vm.blockId)}</h1>`,
    `<dl>`,
    `<dt>${escapeHtml(STRINGS.blockOwnerLabel)}</dt><dd>${escapeHtml(vm.owner)}</dd>`,
    `<dt>${escapeHtml(STRINGS.blockStateLabel)}</dt><dd class="state">${escapeHtml(vm.state)}</dd>`,
    `<dt>${escapeHtml(STRINGS.blockEnvironmentLabel)}</dt><dd>${escapeHtml(vm.environment)}</dd>`,
    `<dt>${escapeHtml(STRINGS.blockPeriodLabel)}</dt>` +
      `<dd>${vm.periodStart.toFixed(0)} .. ${vm.periodEnd.toFixed(0)}</dd>`,
    `</dl>`,
    controls.join("\n"),
    `<h2>${escapeHtml(STRINGS.blockNodesHeading)}</h2>`,
    badges,
    `<h2>${escapeHtml(STRINGS.blockQueueHeading)}</h2>`,
    queue,
    `<h2>${escapeHtml(STRINGS.blockJobsHeading)}</h2>`,
    jobs,
    `</section>`,
  ].join("\n");
}

export function renderJobForm(
  form: JobForm,
  validation?: ValidationResult,
): string {
  const result = validation ?? { ok: true, errors: {} };
  const options = form.environmentOptions
    .map((p) => `<option value="${escapeHtml(p)}">${escapeHtml(p)}</option>`)
    .join("");
  return [
    `<form class="job-form">`,
    `<h2>${escapeHtml(STRINGS.jobFormHeading)}</h2>`,
    `<label>${escapeHtml(STRINGS.jobEnvironmentLabel)} <select name="environment">${options}</select></label>`,
    `<label>${escapeHtml(STRINGS.jobNodesLabel)} ` +
      `<input name="nodes" type="number" min="${form.nodesMin}" max="${form.nodesMax}" value="1"></label>`,
    fieldError(result, "nodes"),
    `<label>${escapeHtml(STRINGS.jobCpuLabel)} <input name="cpu" type="number" value="1"></label>`,
    fieldError(result, "cpu"),
    `<label>${escapeHtml(STRINGS.jobPayloadLabel)} <input name="payload"></label>`,
    `<button data-command="submit-job">${escapeHtml(STRINGS.jobSubmitButton)}</button>`,
    `</form>`,
  ].join("\n");
}

export function renderRequestForm(validation?: ValidationResult): string {
  const result = validation ?? { ok: true, errors: {} };
  return [
    `<form class="request-form">`,
    `<h2>${escapeHtml(STRINGS.requestHeading)}</h2>`,
    `<label>${escapeHtml(STRINGS.requestNodesLabel)} <input name="nodes" type="number" value="1"></label>`,
    fieldError(result, "nodes"),
    `<label>${escapeHtml(STRINGS.requestStartLabel)} <input name="start"></label>`,
    `<label>${escapeHtml(STRINGS.requestEndLabel)} <input name="end"></label>`,
    fieldError(result, "period"),
    `<label>${escapeHtml(STRINGS.requestDescriptionLabel)} <input name="description"></label>`,
    `<button data-command="submit-request">${escapeHtml(STRINGS.requestSubmitButton)}</button>`,
    `</form>`,
  ].join("\n");
}

export function renderRequestList(requests: RequestDoc[]): string {
  const rows = requests
    .map((r) => {
      const review =
        r.state === "PENDING"
          ? `<button data-command="approve-request" data-request="${escapeHtml(r.id)}">` +
            `${escapeHtml(STRINGS.reviewApproveButton)}</button>` +
            `<button data-command="reject-request" data-request="${escapeHtml(r.id)}">` +
            `${escapeHtml(STRINGS.reviewRejectButton)}</button>`
          : escapeHtml(r.state);
      return (
        `<tr data-request="${escapeHtml(r.id)}">` +
        `<td>${escapeHtml(r.id)}</td><td>${escapeHtml(r.user)}</td>` +
        `<td>${r.requested_nodes}</td>` +
        `<td>${escapeHtml(r.project_description)}</td>` +
        `<td>${review}</td></tr>`
      );
    })
    .join("\n");
  return [
    `<section class="requests">`,
    `<h1>${escapeHtml(STRINGS.reviewHeading)}</h1>`,
    `<table>`,
    rows,
    `</table>`,
    `</section>`,
  ].join("\n");
}

export function renderJobPanel(vm: JobPanel): string {
  const buttons = vm.buttons
    .map((b) => {
      const disabled = b.enabled
        ? ""
        : ` disabled title="${escapeHtml(STRINGS.actionNotAllowed)}"`;
      return (
        `<button data-command="job-action" data-job="${escapeHtml(vm.jobId)}" ` +
        `data-action="${escapeHtml(b.action)}"${disabled}>${escapeHtml(b.label)}</button>`
      );
    })
    .join("\n");
  const failure = vm.failureReason
    ? `<p class="failure">${escapeHtml(vm.failureReason)}</p>`
    : "";
  return [
    `<section class="job-panel" data-job="${escapeHtml(vm.jobId)}">`,
    `<h1>${escapeHtml(STRINGS.jobHeading)} ${escapeHtml(vm.jobId)}</h1>`,
    `<dl>`,
    `<dt>${escapeHtml(STRINGS.jobStateLabel)}</dt><dd class="state">${escapeHtml(vm.state)}</dd>`,
    `<dt>${escapeHtml(STRINGS.jobQueueLabel)}</dt><dd>${escapeHtml(vm.queue)}</dd>`,
    `<dt>${escapeHtml(STRINGS.jobNodesAssignedLabel)}</dt>` +
      `<dd>${vm.assignedNodes.map(escapeHtml).join(", ") || "-"}</dd>`,
    `<dt>${escapeHtml(STRINGS.jobRunCountLabel)}</dt><dd>${vm.runCount}</dd>`,
    `</dl>`,
    failure,
    buttons,
    `</section>`,
  ].join("\n");
}

export function renderLogPane(pane: LogPane): string {
  const epilogs = pane.epilogLines.length
    ? `<pre class="epilogs">${escapeHtml(pane.epilogLines.join("\n"))}</pre>`
    : `<p>${escapeHtml(STRINGS.jobNoLogs)}</p>`;
  return [
    `<section class="log-pane" data-job="${escapeHtml(pane.jobId)}">`,
    `<h2>${escapeHtml(STRINGS.jobLogsHeading)}</h2>`,
    epilogs,
    `<h2>${escapeHtml(STRINGS.jobHistoryHeading)}</h2>`,
    `<pre class="history">${escapeHtml(pane.historyLines.join("\n"))}</pre>`,
    `<button data-command="download-logs" data-job="${escapeHtml(pane.jobId)}">` +
      `${escapeHtml(STRINGS.downloadLogsButton)}</button>`,
    `</section>`,
  ].join("\n");
}
