import { describe, expect, it } from "vitest";

import type { RequestDoc } from "../src/api.js";
import {
  escapeHtml,
  renderBlockDashboard,
  renderJobForm,
  renderJobPanel,
  renderLogPane,
  renderRequestForm,
  renderRequestList,
} from "../src/render.js";
import { STRINGS } from "../src/strings.js";
import {
  buildBlockDashboard,
  buildJobForm,
  buildJobPanel,
  buildLogPane,
  validateBlockRequest,
} from "../src/viewmodels.js";
import type { BlockSnapshotDoc, JobDoc } from "../src/api.js";

const SNAPSHOT: BlockSnapshotDoc = {
  id: "block01",
  state: "ACTIVE",
  owner: "erin",
  queue_name: "block01",
  environment_profile: "lammpi",
  period: { start: 0, end: 3600 },
  nodes: { node01: "UP", node02: "OFF" },
  queue: null,
  active_jobs: [],
};

function jobDoc(state: string): JobDoc {
  return {
    id: "block01.1",
    owner: "erin",
    queue: "block01",
    state,
    spec: {
      environment_profile: "lammpi",
      nodes_requested: 1,
      cpu_seconds_estimate: 5,
      payload_name: null,
      payload_bytes: 0,
    },
    assigned_nodes: ["node01"],
    submitted_at: 0,
    started_at: null,
    ended_at: null,
    failure_reason: null,
    run_count: 0,
  };
}

describe("escapeHtml", () => {
  it("neutralizes markup metacharacters", () => {
    expect(escapeHtml(`<script>alert("x&y")</script>'`)).toBe(
      "&lt;script&gt;alert(&quot;x&amp;y&quot;)&lt;/script&gt;&#39;",
    );
  });
});

describe("block dashboard rendering", () => {
  it("shows the summary, badges, and missing-queue notice", () => {
    const html = renderBlockDashboard(buildBlockDashboard(SNAPSHOT, ""));
    expect(html).toContain("block01");
    expect(html).toContain("erin");
    expect(html).toContain("lammpi");
    expect(html).toContain("node01 UP");
    expect(html).toContain("node02 OFF");
    expect(html).toContain(STRINGS.blockQueueMissing);
    expect(html).toContain(STRINGS.blockNoJobs);
  });

  it("escapes the queue script inside its pre block", () => {
    const vm = buildBlockDashboard(SNAPSHOT, 'set queue "<block01>"');
    const html = renderBlockDashboard(vm);
    expect(html).toContain("&quot;&lt;block01&gt;&quot;");
    expect(html).not.toContain("<block01>");
  });

  it("draws a deactivate button for an active block and none once ended", () => {
    const active = renderBlockDashboard(buildBlockDashboard(SNAPSHOT, ""));
    expect(active).toContain('data-command="deactivate"');
    expect(active).not.toContain('data-command="activate"');
    const ended = renderBlockDashboard(
      buildBlockDashboard({ ...SNAPSHOT, state: "DEACTIVATED" }, ""),
    );
    expect(ended).not.toContain('data-command="deactivate"');
    expect(ended).not.toContain('data-command="activate"');
  });
});

describe("job form rendering", () => {
  it("lists every environment option and the node bounds", () => {
    const html = renderJobForm(buildJobForm(["openmpi", "lammpi"], 3));
    expect(html).toContain('<option value="openmpi">');
    expect(html).toContain('<option value="lammpi">');
    expect(html).toContain('max="3"');
  });

  it("draws inline field errors when validation failed", () => {
    const html = renderJobForm(buildJobForm(["openmpi"], 2), {
      ok: false,
      errors: { nodes: STRINGS.jobNodesOutOfRange },
    });
    expect(html).toContain('data-field="nodes"');
    expect(html).toContain(STRINGS.jobNodesOutOfRange);
  });
});

describe("request form rendering", () => {
  it("surfaces the inline node count error", () => {
    const html = renderRequestForm(validateBlockRequest({ nodes: 0 }));
    expect(html).toContain(STRINGS.requestNodesInvalid);
  });

  it("omits error paragraphs when the input was valid", () => {
    expect(renderRequestForm()).not.toContain("field-error");
  });
});

describe("request list rendering", () => {
  const base: RequestDoc = {
    id: "req-1",
    user: "erin",
    requested_nodes: 4,
    period: { start: 0, end: 100 },
    project_description: "lattice <runs>",
    state: "PENDING",
    reason: null,
    block_id: null,
    created_at: 0,
  };

  it("offers review buttons only while a request is pending", () => {
    const html = renderRequestList([base, { ...base, id: "req-2", state: "APPROVED" }]);
    const pendingRow = html.split("</tr>")[0]!;
    expect(pendingRow).toContain('data-command="approve-request"');
    expect(pendingRow).toContain('data-command="reject-request"');
    const reviewedRow = html.split("</tr>")[1]!;
    expect(reviewedRow).not.toContain("data-command");
    expect(reviewedRow).toContain("APPROVED");
  });

  it("escapes user-controlled description text", () => {
    const html = renderRequestList([base]);
    expect(html).toContain("lattice &lt;runs&gt;");
  });
});

describe("job panel rendering", () => {
  it("disables exactly the buttons the table forbids", () => {
    const html = renderJobPanel(buildJobPanel(jobDoc("RUNNING")));
    const buttons = html.match(/<button[^>]*data-action="[a-z]+"[^>]*>/g) ?? [];
    expect(buttons).toHaveLength(5);
    const byAction = new Map(
      buttons.map((b) => [/data-action="([a-z]+)"/.exec(b)![1], b.includes(" disabled")]),
    );
    expect(byAction.get("suspend")).toBe(false);
    expect(byAction.get("stop")).toBe(false);
    expect(byAction.get("resume")).toBe(true);
    expect(byAction.get("delete")).toBe(true);
    expect(byAction.get("reexecute")).toBe(true);
  });

  it("explains disablement through the title text", () => {
    const html = renderJobPanel(buildJobPanel(jobDoc("QUEUED")));
    expect(html).toContain(STRINGS.actionNotAllowed);
  });
});

describe("log pane rendering", () => {
  it("prints the no-logs notice for an empty pane", () => {
    const html = renderLogPane(buildLogPane("block01.9", { epilogs: [], history: [] }));
    expect(html).toContain(STRINGS.jobNoLogs);
    expect(html).toContain('data-command="download-logs"');
  });
});
