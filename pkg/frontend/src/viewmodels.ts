/** View models: plain data the renderers draw, built from server documents.
 *
 * Builders here are pure.  They reshape what the HTTP layer returned and
 * invent nothing: every field traces back to a server document, so a view is
 * exactly as fresh as its last fetch.  Client-side validation exists only to
 * catch input that is not worth a round trip; the server revalidates all of it.
 */

import type { BlockSnapshotDoc, JobDoc, JobLogsDoc } from "./api.js";
import { enabledActions, isJobState, type JobAction, JOB_ACTIONS } from "./transitions.js";
import { STRINGS } from "./strings.js";

export interface NodeBadge {
  node: string;
  state: string;
}

export interface BlockDashboard {
  blockId: string;
  owner: string;
  state: string;
  environment: string;
  periodStart: number;
  periodEnd: number;
  nodeBadges: NodeBadge[];
  queueScript: string | null;
  activeJobs: string[];
  showActivate: boolean;
  showDeactivate: boolean;
}

/** Shape GET /blocks/{id} plus GET /blocks/{id}/queue into one dashboard. */
export function buildBlockDashboard(
  snapshot: BlockSnapshotDoc,
  queueScript: string,
): BlockDashboard {
  const badges = Object.entries(snapshot.nodes)
    .map(([node, state]) => ({ node, state }))
    .sort((a, b) => (a.node < b.node ? -1 : a.node > b.node ? 1 : 0));
  return {
    blockId: snapshot.id,
    owner: snapshot.owner,
    state: snapshot.state,
    environment: snapshot.environment_profile,
    periodStart: snapshot.period.start,
    periodEnd: snapshot.period.end,
    nodeBadges: badges,
    queueScript: queueScript.trim() === "" ? null : queueScript,
    activeJobs: [...snapshot.active_jobs],
    showActivate: snapshot.state === "APPROVED",
    showDeactivate: snapshot.state === "ACTIVE",
  };
}

export interface JobForm {
  environmentOptions: string[];
  nodesMin: number;
  nodesMax: number;
}

/** The submit form offers the server's environment list verbatim and bounds
 * the node count by the block size.  Profile names are opaque here.
 */
export function buildJobForm(profiles: string[], blockSize: number): JobForm {
  return {
    environmentOptions: [...profiles],
    nodesMin: 1,
    nodesMax: blockSize,
  };
}

export interface JobFormInput {
  environment: string;
  nodes: number;
  cpuSeconds: number;
  payloadName?: string;
}

export interface ValidationResult {
  ok: boolean;
  errors: Record<string, string>;
}

export function validateJobForm(form: JobForm, input: JobFormInput): ValidationResult {
  const errors: Record<string, string> = {};
  if (
    !Number.isInteger(input.nodes) ||
    input.nodes < form.nodesMin ||
    input.nodes > form.nodesMax
  ) {
    errors.nodes = STRINGS.jobNodesOutOfRange;
  }
  if (!Number.isFinite(input.cpuSeconds) || input.cpuSeconds <= 0) {
    errors.cpu = STRINGS.jobCpuInvalid;
  }
  return { ok: Object.keys(errors).length === 0, errors };
}

export interface BlockRequestInput {
  nodes: number;
  start?: number;
  end?: number;
  description?: string;
}

/** Inline checks for the request form.  A zero or fractional node count never
 * leaves the browser; everything that passes still gets the server's 422s.
 */
export function validateBlockRequest(input: BlockRequestInput): ValidationResult {
  const errors: Record<string, string> = {};
  if (!Number.isInteger(input.nodes) || input.nodes < 1) {
    errors.nodes = STRINGS.requestNodesInvalid;
  }
  if (input.start !== undefined && input.end !== undefined && input.end <= input.start) {
    errors.period = STRINGS.requestPeriodInvalid;
  }
  return { ok: Object.keys(errors).length === 0, errors };
}

export interface JobActionButton {
  action: JobAction;
  label: string;
  enabled: boolean;
}

export interface JobPanel {
  jobId: string;
  owner: string;
  queue: string;
  state: string;
  environment: string;
  nodesRequested: number;
  assignedNodes: string[];
  runCount: number;
  failureReason: string | null;
  buttons: JobActionButton[];
}

/** One button per action, enabled exactly when the transition table allows it
 * in the job's current state.  Unknown states enable nothing.
 */
export function buildJobPanel(job: JobDoc): JobPanel {
  const legal = new Set<JobAction>(isJobState(job.state) ? enabledActions(job.state) : []);
  const buttons = JOB_ACTIONS.map((action) => ({
    action,
    label: STRINGS.actionLabels[action] ?? action,
    enabled: legal.has(action),
  }));
  return {
    jobId: job.id,
    owner: job.owner,
    queue: job.queue,
    state: job.state,
    environment: job.spec.environment_profile,
    nodesRequested: job.spec.nodes_requested,
    assignedNodes: [...job.assigned_nodes],
    runCount: job.run_count,
    failureReason: job.failure_reason,
    buttons,
  };
}

export interface LogPane {
  jobId: string;
  epilogLines: string[];
  historyLines: string[];
  downloadName: string;
  downloadText: string;
}

/** Flatten GET /jobs/{id}/logs into displayable lines plus the exact text the
 * download button hands over.
 */
export function buildLogPane(jobId: string, logs: JobLogsDoc): LogPane {
  const epilogLines = logs.epilogs.map(
    (e) =>
      `${e.node_id} exit=${e.exit_status} cpu=${e.cpu_seconds.toFixed(2)}s ` +
      e.detail.join(" "),
  );
  const historyLines = logs.history.map((h) => `${h.at.toFixed(2)} ${h.state}`);
  const downloadText =
    [`job ${jobId}`, "", "epilogs:", ...epilogLines, "", "history:", ...historyLines].join(
      "\n",
    ) + "\n";
  return {
    jobId,
    epilogLines,
    historyLines,
    downloadName: `${jobId.replace(/[^A-Za-z0-9_.-]/g, "_")}-logs.txt`,
    downloadText,
  };
}
