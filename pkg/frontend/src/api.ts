/** Typed HTTP client for the openpc service.
 *
 * This is the console's only connection to the cluster: every byte of state
 * it renders arrives through these calls, and every mutation leaves through
 * them.  The client never decides permissions; it forwards the session token
 * and reports whatever status the server returns.
 */

export interface Period {
  start: number;
  end: number;
}

export interface UserDoc {
  username: string;
  display_name: string;
  registered_at: number;
  approved: boolean;
  role: string;
}

export interface SessionDoc {
  token: string;
  username: string;
  role: string;
  approved: boolean;
  expiry: number;
}

export interface RequestDoc {
  id: string;
  user: string;
  requested_nodes: number;
  period: Period;
  project_description: string;
  state: string;
  reason: string | null;
  block_id: string | null;
  created_at: number;
}

export interface BlockDoc {
  id: string;
  owner: string;
  nodes: string[];
  queue_name: string;
  period: Period;
  environment_profile: string;
  state: string;
  activated_at: number | null;
  ended_at: number | null;
}

export interface QueueDoc {
  queue_type: string;
  acl_hosts: string[];
  acl_users: string[];
  resources_max_cput: number;
  enabled: boolean;
  started: boolean;
}

export interface BlockSnapshotDoc {
  id: string;
  state: string;
  owner: string;
  queue_name: string;
  environment_profile: string;
  period: Period;
  nodes: Record<string, string>;
  queue: QueueDoc | null;
  active_jobs: string[];
}

export interface ActivationDoc {
  block_id: string;
  queue_name: string;
  nodes: string[];
  boot_seconds: number;
  script: string;
}

export interface JobSpecDoc {
  environment_profile: string;
  nodes_requested: number;
  cpu_seconds_estimate: number;
  payload_name: string | null;
  payload_bytes: number;
}

export interface JobDoc {
  id: string;
  owner: string;
  queue: string;
  state: string;
  spec: JobSpecDoc;
  assigned_nodes: string[];
  submitted_at: number;
  started_at: number | null;
  ended_at: number | null;
  failure_reason: string | null;
  run_count: number;
}

export interface EpilogDoc {
  job_id: string;
  node_id: string;
  started_at: number;
  ended_at: number;
  cpu_seconds: number;
  exit_status: number;
  detail: string[];
}

export interface JobLogsDoc {
  epilogs: EpilogDoc[];
  history: { at: number; state: string }[];
}

export interface NodeDoc {
  id: string;
  state: string;
  cpu_seconds_used: number;
  running_job: string | null;
  last_heartbeat: number | null;
  reserved_by: string | null;
}

export interface GatewayOutcomeDoc {
  raw: string;
  kind: string;
  verdict: string;
  reason: string;
  forwarded_to: string;
  response: string | null;
  ok: boolean;
}

export interface StatusDoc {
  now: number;
  nodes_total: number;
  nodes_up: number;
  nodes_free: number;
  nodes_reserved: number;
  blocks_active: number;
  events: number;
}

export interface BenchRunDoc {
  run_id: string;
  rows: number;
}

/** Error carrying the HTTP status and the server's error document. */
export class ApiError extends Error {
  readonly status: number;
  readonly errorName: string;

  constructor(status: number, errorName: string, detail: string) {
    super(detail);
    this.name = "ApiError";
    this.status = status;
    this.errorName = errorName;
  }
}

export interface FetchLike {
  (url: string, init?: {
    method?: string;
    headers?: Record<string, string>;
    body?: string;
  }): Promise<{
    status: number;
    text(): Promise<string>;
  }>;
}

async function decodeError(status: number, text: string): Promise<never> {
  let name = "HTTPError";
  let detail = text;
  try {
    const doc = JSON.parse(text);
    if (typeof doc.error === "string") name = doc.error;
    if (typeof doc.detail === "string") detail = doc.detail;
  } catch {
    // non-JSON error body, keep the raw text
  }
  throw new ApiError(status, name, detail);
}

export class ApiClient {
  readonly baseUrl: string;
  token: string | null;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.token = null;
    this.fetchImpl = fetchImpl ?? (fetch as unknown as FetchLike);
  }

  private headers(hasBody: boolean): Record<string, string> {
    const out: Record<string, string> = {};
    if (hasBody) out["Content-Type"] = "application/json";
    if (this.token) out["Authorization"] = `Bearer ${this.token}`;
    return out;
  }

  private async request(method: string, path: string, body?: unknown): Promise<string> {
    const init: Parameters<FetchLike>[1] = {
      method,
      headers: this.headers(body !== undefined),
    };
    if (body !== undefined) init.body = JSON.stringify(body);
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const text = await response.text();
    if (response.status >= 400) await decodeError(response.status, text);
    return text;
  }

  private async json<T>(method: string, path: string, body?: unknown): Promise<T> {
    return JSON.parse(await this.request(method, path, body)) as T;
  }

  // -- users & sessions -----------------------------------------------------

  register(username: string, password: string, displayName?: string): Promise<UserDoc> {
    const body: Record<string, unknown> = { username, password };
    if (displayName !== undefined) body.display_name = displayName;
    return this.json("POST", "/users", body);
  }

  login(username: string, password: string): Promise<SessionDoc> {
    return this.json("POST", "/sessions", { username, password });
  }

  whoami(): Promise<UserDoc> {
    return this.json("GET", "/users/me");
  }

  listUsers(): Promise<UserDoc[]> {
    return this.json("GET", "/users");
  }

  approveUser(username: string): Promise<UserDoc> {
    return this.json("POST", `/users/${username}/approve`, {});
  }

  // -- block requests ---------------------------------------------------------

  requestBlock(body: {
    nodes: number;
    start?: number;
    end?: number;
    duration_s?: number;
    description?: string;
  }): Promise<RequestDoc> {
    return this.json("POST", "/blocks/requests", body);
  }

  listRequests(state?: string): Promise<RequestDoc[]> {
    const suffix = state ? `?state=${encodeURIComponent(state)}` : "";
    return this.json("GET", `/blocks/requests${suffix}`);
  }

  reviewRequest(
    requestId: string,
    decision: "approve" | "reject",
    extra?: { allocated?: number; reason?: string },
  ): Promise<RequestDoc | BlockDoc> {
    return this.json("POST", `/blocks/requests/${requestId}/review`, {
      decision,
      ...extra,
    });
  }

  // -- blocks -------------------------------------------------------------------

  listBlocks(): Promise<BlockDoc[]> {
    return this.json("GET", "/blocks");
  }

  getBlock(blockId: string): Promise<BlockSnapshotDoc> {
    return this.json("GET", `/blocks/${blockId}`);
  }

  getBlockQueue(blockId: string): Promise<string> {
    return this.request("GET", `/blocks/${blockId}/queue`);
  }

  activateBlock(blockId: string): Promise<ActivationDoc> {
    return this.json("POST", `/blocks/${blockId}/activate`, {});
  }

  deactivateBlock(blockId: string): Promise<BlockDoc> {
    return this.json("POST", `/blocks/${blockId}/deactivate`, {});
  }

  setEnvironment(blockId: string, profile: string): Promise<BlockDoc> {
    return this.json("POST", `/blocks/${blockId}/environment`, { profile });
  }

  listEnvironments(): Promise<{ profiles: string[] }> {
    return this.json("GET", "/environments");
  }

  // -- jobs -------------------------------------------------------------------------

  submitJob(
    queueName: string,
    body: {
      environment_profile?: string;
      nodes_requested?: number;
      cpu_seconds_estimate?: number;
      payload_name?: string;
      payload_bytes?: number;
    },
  ): Promise<{ job_id: string }> {
    return this.json("POST", `/queues/${queueName}/jobs`, body);
  }

  listJobs(queueName: string): Promise<JobDoc[]> {
    return this.json("GET", `/queues/${queueName}/jobs`);
  }

  getJob(jobId: string): Promise<JobDoc> {
    return this.json("GET", `/jobs/${jobId}`);
  }

  jobAction(jobId: string, action: string): Promise<JobDoc> {
    return this.json("POST", `/jobs/${jobId}/actions`, { action });
  }

  getJobLogs(jobId: string): Promise<JobLogsDoc> {
    return this.json("GET", `/jobs/${jobId}/logs`);
  }

  // -- nodes, gateway, bench, status ----------------------------------------------------

  listNodes(): Promise<NodeDoc[]> {
    return this.json("GET", "/nodes");
  }

  nodePower(nodeId: string, action: "on" | "off"): Promise<unknown> {
    return this.json("POST", `/nodes/${nodeId}/power`, { action });
  }

  gatewayCommand(blockId: string, command: string): Promise<GatewayOutcomeDoc> {
    return this.json("POST", "/gateway/commands", { block_id: blockId, command });
  }

  benchFlood(config?: Record<string, string | number>): Promise<BenchRunDoc> {
    return this.json("POST", "/bench/flood", config ? { config } : {});
  }

  benchCsv(runId: string): Promise<string> {
    return this.request("GET", `/bench/flood/${runId}/csv`);
  }

  status(): Promise<StatusDoc> {
    return this.json("GET", "/status");
  }
}
