/** End-to-end: the console driving a real service over HTTP.
 *
 * A service process is started once for the file; every assertion below goes
 * through the console controller (or, for raw status checks, the API client),
 * so the wire format, the session handling, and the server's authorization
 * are all exercised for real.  The walk covers the whole tenant journey:
 * register, approval, block request, review, activation, environment choice,
 * job submit, suspend and resume, completion, and the epilog download.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { Console } from "../src/console.js";
import { STRINGS } from "../src/strings.js";

const PORT = 18100 + (process.pid % 1800);
const BASE_URL = `http://127.0.0.1:${PORT}`;

let workDir: string;
let server: ChildProcess;
let serverLog = "";

function makeUi() {
  const api = new ApiClient(BASE_URL);
  let html = "";
  const saved: { name: string; text: string }[] = [];
  const ui = new Console(api, {
    present: (h) => {
      html = h;
    },
    saveFile: (name, text) => {
      saved.push({ name, text });
    },
  });
  return { ui, api, lastHtml: () => html, saved };
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

async function waitForServer(): Promise<void> {
  const deadline = Date.now() + 20_000;
  while (Date.now() < deadline) {
    try {
      await fetch(`${BASE_URL}/status`);
      return;
    } catch {
      await sleep(150);
    }
  }
  throw new Error(`service did not come up on ${BASE_URL}\n${serverLog}`);
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "openpc-console-"));
  const configPath = join(workDir, "site.conf");
  writeFileSync(
    configPath,
    [
      `data_dir = ${join(workDir, "data")}`,
      `listen_addr = 127.0.0.1:${PORT}`,
      "pool_size = 8",
      "boot_delay = 0.1",
      "boot_timeout = 10.0",
      "",
    ].join("\n"),
  );
  server = spawn("openpc", ["serve", "--config", configPath], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  server.stdout!.on("data", (chunk) => {
    serverLog += chunk;
  });
  server.stderr!.on("data", (chunk) => {
    serverLog += chunk;
  });
  await waitForServer();
}, 30_000);

afterAll(async () => {
  server.kill("SIGTERM");
  await sleep(300);
  rmSync(workDir, { recursive: true, force: true });
});

describe("console against a live service", () => {
  const admin = makeUi();
  const gina = makeUi();
  let requestId: string;
  let blockId: string;
  let queueName: string;
  let jobId: string;

  it("registers a tenant and sees the pending notice", async () => {
    await gina.ui.register("gina", "gina-pw", "Gina");
    expect(gina.lastHtml()).toContain(STRINGS.registerPending);
  });

  it("blocks tenant actions until an administrator approves the account", async () => {
    expect(await gina.ui.login("gina", "gina-pw")).toBe(true);
    const outcome = await gina.ui.submitBlockRequest({ nodes: 2, start: 0, end: 1 });
    expect(outcome).toBeUndefined();
    expect(gina.lastHtml()).toContain(STRINGS.forbiddenToast);

    expect(await admin.ui.login("admin", "admin")).toBe(true);
    await admin.ui.approveUser("gina");
    expect(admin.lastHtml()).toContain(STRINGS.userApprovedNotice);
  });

  it("files a block request through the form", async () => {
    const now = (await gina.api.status()).now;
    const created = await gina.ui.submitBlockRequest({
      nodes: 2,
      start: now - 60,
      end: now + 3600,
      description: "console walkthrough",
    });
    expect(created).toBeDefined();
    requestId = created!.id;
    expect(created!.state).toBe("PENDING");
    expect(gina.lastHtml()).toContain(STRINGS.requestCreated);
    expect(gina.lastHtml()).toContain("console walkthrough");
  });

  it("never sends a zero-node request and surfaces a server 422 inline", async () => {
    const before = (await admin.api.listRequests()).length;
    expect(await gina.ui.submitBlockRequest({ nodes: 0 })).toBeUndefined();
    expect(gina.lastHtml()).toContain(STRINGS.requestNodesInvalid);
    // period fields left blank pass the client checks but not the server's
    expect(await gina.ui.submitBlockRequest({ nodes: 2 })).toBeUndefined();
    expect(gina.lastHtml()).toContain(STRINGS.validationToast);
    expect((await admin.api.listRequests()).length).toBe(before);
  });

  it("approves and activates the block from the admin console", async () => {
    await admin.ui.openRequests();
    expect(admin.lastHtml()).toContain('data-command="approve-request"');
    await admin.ui.reviewRequest(requestId, "approve");
    expect(admin.lastHtml()).toContain(STRINGS.reviewApprovedNotice);

    const reviewed = (await admin.api.listRequests()).find((r) => r.id === requestId)!;
    expect(reviewed.state).toBe("APPROVED");
    blockId = reviewed.block_id!;

    await admin.ui.openBlock(blockId);
    expect(admin.lastHtml()).toContain(STRINGS.activateButton);
    await admin.ui.activateBlock(blockId);
    const snapshot = await admin.api.getBlock(blockId);
    expect(snapshot.state).toBe("ACTIVE");
    expect(Object.values(snapshot.nodes)).toEqual(["UP", "UP"]);
    expect(snapshot.queue?.enabled).toBe(true);
    expect(snapshot.queue?.started).toBe(true);
    queueName = snapshot.queue_name;
  });

  it("rejects a double review with the conflict toast", async () => {
    await admin.ui.reviewRequest(requestId, "approve");
    expect(admin.lastHtml()).toContain(STRINGS.actionConflictToast);
  });

  it("shows the owner a dashboard built from the block and queue fetches", async () => {
    await gina.ui.openBlock(blockId);
    const html = gina.lastHtml();
    expect(html).toContain(`${STRINGS.blockHeading} ${blockId}`);
    expect(html).toContain("gina");
    expect(html).toContain(">ACTIVE<");
    expect(html).toContain("create queue");
    expect(html).toContain("acl_users = gina");
    expect(html).toContain(STRINGS.jobFormHeading);
  });

  it("applies the chosen environment profile", async () => {
    const { profiles } = await gina.api.listEnvironments();
    expect(profiles).toContain("lammpi");
    await gina.ui.chooseEnvironment(blockId, "lammpi");
    expect((await gina.api.getBlock(blockId)).environment_profile).toBe("lammpi");
    expect(gina.lastHtml()).toContain("lammpi");
  });

  it("submits a job and walks it through suspend, resume, and completion", async () => {
    const submitted = await gina.ui.submitJob(blockId, queueName, {
      environment: "lammpi",
      nodes: 2,
      cpuSeconds: 3,
    });
    expect(submitted).toBeDefined();
    jobId = submitted!;
    expect(gina.lastHtml()).toContain(`${STRINGS.jobHeading} ${jobId}`);

    await gina.ui.jobAction(jobId, "suspend");
    expect((await gina.api.getJob(jobId)).state).toBe("SUSPENDED");
    expect(gina.lastHtml()).toContain(">SUSPENDED<");

    await gina.ui.jobAction(jobId, "resume");
    expect((await gina.api.getJob(jobId)).state).toBe("RUNNING");

    const deadline = Date.now() + 30_000;
    let state = "RUNNING";
    while (Date.now() < deadline && state !== "FINISHED") {
      await sleep(300);
      await gina.ui.refresh();
      state = (await gina.api.getJob(jobId)).state;
    }
    expect(state).toBe("FINISHED");
    expect(gina.lastHtml()).toContain(">FINISHED<");
  }, 45_000);

  it("enables only re-execute on the finished job's panel", async () => {
    await gina.ui.openJob(jobId);
    const html = gina.lastHtml();
    const buttons = html.match(/<button[^>]*data-action="[a-z]+"[^>]*>/g) ?? [];
    expect(buttons).toHaveLength(5);
    for (const button of buttons) {
      const action = /data-action="([a-z]+)"/.exec(button)![1];
      expect(button.includes(" disabled"), String(action)).toBe(action !== "reexecute");
    }
  });

  it("downloads epilog logs for both assigned nodes", async () => {
    await gina.ui.downloadLogs(jobId);
    expect(gina.saved).toHaveLength(1);
    const { name, text } = gina.saved[0]!;
    expect(name).toBe(`${jobId}-logs.txt`);
    const epilogLines = text.match(/^node\d+ exit=0 /gm) ?? [];
    expect(epilogLines).toHaveLength(2);
    const nodes = new Set(epilogLines.map((line) => line.split(" ")[0]));
    expect(nodes.size).toBe(2);
    expect(text).toContain("FINISHED");
  });

  it("refuses every privileged action for a demoted token, server-side", async () => {
    // all of these go straight to the server; the console never filters them
    const mallory = makeUi();
    await mallory.ui.register("mallory", "mallory-pw");
    await admin.ui.approveUser("mallory");
    expect(await mallory.ui.login("mallory", "mallory-pw")).toBe(true);

    await mallory.ui.approveUser("gina");
    expect(mallory.lastHtml()).toContain(STRINGS.forbiddenToast);

    const pending = await mallory.ui.submitBlockRequest({ nodes: 1, start: 0, end: 9e9 });
    expect(pending).toBeDefined();
    await mallory.ui.reviewRequest(pending!.id, "approve");
    expect(mallory.lastHtml()).toContain(STRINGS.forbiddenToast);
    const still = (await admin.api.listRequests()).find((r) => r.id === pending!.id)!;
    expect(still.state).toBe("PENDING");

    await mallory.ui.activateBlock(blockId);
    expect(mallory.lastHtml()).toContain(STRINGS.forbiddenToast);
    await mallory.ui.deactivateBlock(blockId);
    expect(mallory.lastHtml()).toContain(STRINGS.forbiddenToast);
    expect((await admin.api.getBlock(blockId)).state).toBe("ACTIVE");

    // not even visible: someone else's block, queue, and job
    await mallory.ui.openBlock(blockId);
    expect(mallory.lastHtml()).toContain(STRINGS.forbiddenToast);
    await mallory.ui.chooseEnvironment(blockId, "openmpi");
    expect(mallory.lastHtml()).toContain(STRINGS.forbiddenToast);
    await mallory.ui.jobAction(jobId, "reexecute");
    expect(mallory.lastHtml()).toContain(STRINGS.forbiddenToast);
    expect((await gina.api.getJob(jobId)).state).toBe("FINISHED");

    for (const call of [
      () => mallory.api.listNodes(),
      () => mallory.api.nodePower("node01", "off"),
      () => mallory.api.benchFlood({ block_count: 1, sizes: "1000:2000:1000" }),
      () => mallory.api.listUsers(),
      () => mallory.api.submitJob(queueName, { nodes_requested: 1 }),
    ]) {
      const failure = await call().then(
        () => null,
        (error) => error,
      );
      expect(failure).toBeInstanceOf(ApiError);
      expect((failure as ApiError).status).toBe(403);
    }
  });

  it("rejects a request from the admin console, leaving no block behind", async () => {
    const now = (await gina.api.status()).now;
    const doomed = await gina.ui.submitBlockRequest({
      nodes: 1,
      start: now,
      end: now + 600,
    });
    expect(doomed).toBeDefined();
    await admin.ui.openRequests();
    await admin.ui.reviewRequest(doomed!.id, "reject", { reason: "walkthrough" });
    expect(admin.lastHtml()).toContain(STRINGS.reviewRejectedNotice);
    const after = (await admin.api.listRequests()).find((r) => r.id === doomed!.id)!;
    expect(after.state).toBe("REJECTED");
    expect(after.reason).toBe("walkthrough");
    expect(after.block_id).toBeNull();
  });

  it("re-executes the finished job and grows its run history", async () => {
    const before = await gina.api.getJob(jobId);
    expect(before.state).toBe("FINISHED");
    const historyBefore = (await gina.api.getJobLogs(jobId)).history.length;

    await gina.ui.openJob(jobId);
    await gina.ui.jobAction(jobId, "reexecute");
    const relaunched = await gina.api.getJob(jobId);
    expect(["QUEUED", "RUNNING"]).toContain(relaunched.state);
    expect(relaunched.run_count).toBeGreaterThanOrEqual(before.run_count);

    const deadline = Date.now() + 30_000;
    let state = relaunched.state;
    while (Date.now() < deadline && state !== "FINISHED") {
      await sleep(300);
      await gina.ui.refresh();
      state = (await gina.api.getJob(jobId)).state;
    }
    expect(state).toBe("FINISHED");
    const after = await gina.api.getJob(jobId);
    expect(after.run_count).toBe(before.run_count + 1);
    expect((await gina.api.getJobLogs(jobId)).history.length).toBeGreaterThan(historyBefore);
    expect(gina.lastHtml()).toContain(">FINISHED<");
  }, 45_000);

  it("keeps the session honest: a bad token lands back on login", async () => {
    const stale = makeUi();
    stale.api.token = "not-a-token";
    await stale.ui.openBlock(blockId);
    expect(stale.ui.view).toMatchObject({ kind: "login" });
    expect(stale.lastHtml()).toContain(STRINGS.sessionExpired);
  });
});
