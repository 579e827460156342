/** Console controller: one rendering thread over the typed API client.
 *
 * The controller owns the session token, the current view, and a poll timer.
 * It re-renders only from fetched server documents (a mutation's response or
 * a fresh GET), never from what it hoped a write would do.  Per entity, at
 * most one mutation is in flight; a second click on the same record while the
 * first is pending draws a busy notice instead of a second POST.
 */

import { ApiClient, ApiError, type RequestDoc, type SessionDoc } from "./api.js";
import {
  renderBlockDashboard,
  renderJobForm,
  renderJobPanel,
  renderLogin,
  renderLogPane,
  renderRequestForm,
  renderRequestList,
  renderToast,
} from "./render.js";
import { STRINGS, toastForStatus } from "./strings.js";
import {
  buildBlockDashboard,
  buildJobForm,
  buildJobPanel,
  buildLogPane,
  validateBlockRequest,
  validateJobForm,
  type BlockRequestInput,
  type JobFormInput,
} from "./viewmodels.js";

export type View =
  | { kind: "login"; notice?: string }
  | { kind: "requests" }
  | { kind: "block"; blockId: string }
  | { kind: "job"; jobId: string };

export interface ConsoleOptions {
  /** Receives the full HTML for the current view on every render. */
  present: (html: string) => void;
  /** Receives the file the download button produced. */
  saveFile?: (name: string, text: string) => void;
  /** Poll period for the current view; the default is two seconds. */
  pollIntervalMs?: number;
}

const DEFAULT_POLL_MS = 2000;

export class Console {
  readonly api: ApiClient;
  session: SessionDoc | null = null;
  view: View = { kind: "login" };
  lastHtml = "";

  private readonly present: (html: string) => void;
  private readonly saveFile: (name: string, text: string) => void;
  private readonly pollIntervalMs: number;
  private readonly inFlight = new Set<string>();
  private toast: string | null = null;
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  constructor(api: ApiClient, options: ConsoleOptions) {
    this.api = api;
    this.present = options.present;
    this.saveFile = options.saveFile ?? (() => {});
    this.pollIntervalMs = options.pollIntervalMs ?? DEFAULT_POLL_MS;
  }

  // -- rendering ------------------------------------------------------------

  private show(html: string): void {
    const full = this.toast ? html + "\n" + renderToast(this.toast) : html;
    this.toast = null;
    this.lastHtml = full;
    this.present(full);
  }

  private showToastOnly(message: string): void {
    this.toast = message;
    this.show(this.lastHtml.replace(/\n<div class="toast">[\s\S]*$/, ""));
  }

  /** Route an API failure: expired sessions bounce to login, everything else
   * becomes the standard toast for its status.
   */
  private fail(error: unknown): void {
    if (error instanceof ApiError) {
      if (error.status === 401) {
        this.session = null;
        this.api.token = null;
        this.view = { kind: "login", notice: STRINGS.sessionExpired };
        this.show(renderLogin(STRINGS.sessionExpired));
        return;
      }
      this.showToastOnly(toastForStatus(error.status));
      return;
    }
    this.showToastOnly(STRINGS.networkErrorToast);
  }

  // -- session ----------------------------------------------------------------

  async login(username: string, password: string): Promise<boolean> {
    try {
      this.session = await this.api.login(username, password);
      this.api.token = this.session.token;
    } catch (error) {
      if (error instanceof ApiError && error.status === 401) {
        this.view = { kind: "login", notice: STRINGS.loginFailed };
        this.show(renderLogin(STRINGS.loginFailed));
        return false;
      }
      this.fail(error);
      return false;
    }
    this.view = { kind: "requests" };
    await this.refresh();
    return true;
  }

  async register(username: string, password: string, displayName?: string): Promise<void> {
    try {
      await this.api.register(username, password, displayName);
      this.view = { kind: "login", notice: STRINGS.registerPending };
      this.show(renderLogin(STRINGS.registerPending));
    } catch (error) {
      this.fail(error);
    }
  }

  logout(): void {
    this.stopPolling();
    this.session = null;
    this.api.token = null;
    this.view = { kind: "login" };
    this.show(renderLogin());
  }

  // -- navigation & polling -----------------------------------------------------

  async openRequests(): Promise<void> {
    this.view = { kind: "requests" };
    await this.refresh();
  }

  async openBlock(blockId: string): Promise<void> {
    this.view = { kind: "block", blockId };
    await this.refresh();
  }

  async openJob(jobId: string): Promise<void> {
    this.view = { kind: "job", jobId };
    await this.refresh();
  }

  /** Redraw the current view from fresh server documents. */
  async refresh(): Promise<void> {
    try {
      switch (this.view.kind) {
        case "login":
          this.show(renderLogin(this.view.notice));
          return;
        case "requests": {
          const requests = await this.api.listRequests();
          this.show(renderRequestForm() + "\n" + renderRequestList(requests));
          return;
        }
        case "block": {
          const blockId = this.view.blockId;
          const snapshot = await this.api.getBlock(blockId);
          const queueScript = await this.api.getBlockQueue(blockId);
          const dashboard = buildBlockDashboard(snapshot, queueScript);
          let html = renderBlockDashboard(dashboard);
          if (snapshot.state === "ACTIVE") {
            const { profiles } = await this.api.listEnvironments();
            const form = buildJobForm(profiles, Object.keys(snapshot.nodes).length);
            html += "\n" + renderJobForm(form);
          }
          this.show(html);
          return;
        }
        case "job": {
          const jobId = this.view.jobId;
          const job = await this.api.getJob(jobId);
          const logs = await this.api.getJobLogs(jobId);
          this.show(
            renderJobPanel(buildJobPanel(job)) +
              "\n" +
              renderLogPane(buildLogPane(jobId, logs)),
          );
          return;
        }
      }
    } catch (error) {
      this.fail(error);
    }
  }

  startPolling(): void {
    this.stopPolling();
    this.pollTimer = setInterval(() => {
      void this.refresh();
    }, this.pollIntervalMs);
  }

  stopPolling(): void {
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }

  // -- mutations -------------------------------------------------------------------

  /** Run one mutation under the per-entity in-flight guard, then re-render
   * from the server.  Returns the mutation's value, or undefined if it was
   * skipped or failed.
   */
  private async mutate<T>(entityKey: string, call: () => Promise<T>): Promise<T | undefined> {
    if (this.inFlight.has(entityKey)) {
      this.showToastOnly(STRINGS.busyNotice);
      return undefined;
    }
    this.inFlight.add(entityKey);
    try {
      return await call();
    } catch (error) {
      this.fail(error);
      return undefined;
    } finally {
      this.inFlight.delete(entityKey);
    }
  }

  /** Submit the block request form.  Invalid input is drawn inline and never
   * reaches the network.
   */
  async submitBlockRequest(input: BlockRequestInput): Promise<RequestDoc | undefined> {
    const validation = validateBlockRequest(input);
    if (!validation.ok) {
      const requests = this.session ? await this.api.listRequests() : [];
      this.show(renderRequestForm(validation) + "\n" + renderRequestList(requests));
      return undefined;
    }
    const created = await this.mutate("request:new", () =>
      this.api.requestBlock({
        nodes: input.nodes,
        ...(input.start !== undefined && input.end !== undefined
          ? { start: input.start, end: input.end }
          : {}),
        ...(input.description !== undefined ? { description: input.description } : {}),
      }),
    );
    if (created !== undefined) {
      this.toast = STRINGS.requestCreated;
      await this.refresh();
    }
    return created;
  }

  async approveUser(username: string): Promise<void> {
    const done = await this.mutate(`user:${username}`, () => this.api.approveUser(username));
    if (done !== undefined) {
      this.toast = STRINGS.userApprovedNotice;
      await this.refresh();
    }
  }

  async reviewRequest(
    requestId: string,
    decision: "approve" | "reject",
    extra?: { allocated?: number; reason?: string },
  ): Promise<void> {
    const outcome = await this.mutate(`request:${requestId}`, () =>
      this.api.reviewRequest(requestId, decision, extra),
    );
    if (outcome === undefined) return;
    if (decision === "reject") {
      this.toast = STRINGS.reviewRejectedNotice;
    } else if ("requested_nodes" in outcome) {
      this.toast = STRINGS.reviewApprovedNotice;
    } else {
      const requested = (await this.api.listRequests()).find((r) => r.block_id === outcome.id);
      this.toast =
        requested && outcome.nodes.length < requested.requested_nodes
          ? STRINGS.reviewShortfallNotice
          : STRINGS.reviewApprovedNotice;
    }
    await this.refresh();
  }

  async activateBlock(blockId: string): Promise<void> {
    const done = await this.mutate(`block:${blockId}`, () => this.api.activateBlock(blockId));
    if (done !== undefined) await this.refresh();
  }

  async deactivateBlock(blockId: string): Promise<void> {
    const done = await this.mutate(`block:${blockId}`, () =>
      this.api.deactivateBlock(blockId),
    );
    if (done !== undefined) await this.refresh();
  }

  async chooseEnvironment(blockId: string, profile: string): Promise<void> {
    const done = await this.mutate(`block:${blockId}`, () =>
      this.api.setEnvironment(blockId, profile),
    );
    if (done !== undefined) await this.refresh();
  }

  /** Submit the job form against a block's queue.  The node bound comes from
   * the dashboard's snapshot, the environment list from the server.
   */
  async submitJob(
    blockId: string,
    queueName: string,
    input: JobFormInput,
  ): Promise<string | undefined> {
    const snapshot = await this.api.getBlock(blockId);
    const { profiles } = await this.api.listEnvironments();
    const form = buildJobForm(profiles, Object.keys(snapshot.nodes).length);
    const validation = validateJobForm(form, input);
    if (!validation.ok) {
      this.show(
        renderBlockDashboard(buildBlockDashboard(snapshot, await this.api.getBlockQueue(blockId))) +
          "\n" +
          renderJobForm(form, validation),
      );
      return undefined;
    }
    const created = await this.mutate(`queue:${queueName}`, () =>
      this.api.submitJob(queueName, {
        environment_profile: input.environment,
        nodes_requested: input.nodes,
        cpu_seconds_estimate: input.cpuSeconds,
        ...(input.payloadName ? { payload_name: input.payloadName } : {}),
      }),
    );
    if (created === undefined) return undefined;
    this.toast = STRINGS.jobSubmitted;
    await this.openJob(created.job_id);
    return created.job_id;
  }

  async jobAction(jobId: string, action: string): Promise<void> {
    const done = await this.mutate(`job:${jobId}`, () => this.api.jobAction(jobId, action));
    if (done !== undefined) await this.refresh();
  }

  /** Hand the epilog log text to the host's file sink. */
  async downloadLogs(jobId: string): Promise<void> {
    try {
      const logs = await this.api.getJobLogs(jobId);
      const pane = buildLogPane(jobId, logs);
      this.saveFile(pane.downloadName, pane.downloadText);
    } catch (error) {
      this.fail(error);
    }
  }
}
