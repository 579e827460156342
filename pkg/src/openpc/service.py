"""The application core behind the HTTP API: owns every module instance,
funnels all mutations through the event log, and rebuilds state by replay.

Command sourcing: the event payload is the user's intent (the command), not
the resulting state.  _apply() is the single dispatcher used by both the live
path and recovery; replay drives the virtual clock to each event's timestamp
first, so every timer (boot, completion, expiry, cput tick) refires exactly
as it did live.  Sessions are deliberately not event-sourced: tokens are
ephemeral secrets, users just log in again after a restart.
"""

from __future__ import annotations

import hashlib
import secrets
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from . import flood as floodmod
from . import qmgr
from .blocks import BlockManager, BlockState, Period, RequestState
from .clock import VirtualClock, WallAnchoredClock
from .config import ServiceConfig
from .errors import (
    AccessDeniedError,
    InvalidArgumentError,
    OpenPCError,
    UnknownBlockError,
    UnknownUserError,
    UserNotApprovedError,
)
from .events import Event, EventLog, state_hash, write_snapshot
from .fabric import NodeFabric, make_node_ids
from .router import AuditRecord, CommandRouter, CommandOutcome, MasterChannel, MasterExecutor
from .scheduler import JobSpec, PayloadRef, Scheduler
from .workspace import WorkspaceManager

ROLE_USER = "USER"
ROLE_ADMIN = "ADMIN"


@dataclass
class UserAccount:
    username: str
    display_name: str
    registered_at: float
    approved: bool
    role: str
    password_salt: str
    password_hash: str


@dataclass
class Session:
    token: str
    username: str
    expiry: float


def hash_password(password: str, salt: str) -> str:
    digest = hashlib.pbkdf2_hmac(
        "sha256", password.encode("utf-8"), bytes.fromhex(salt), 50_000
    )
    return digest.hex()


class ServiceCore:
    def __init__(
        self,
        config: ServiceConfig,
        clock: Optional[VirtualClock] = None,
        replay_until: Optional[float] = None,
    ):
        self.config = config
        self.clock = clock if clock is not None else WallAnchoredClock(scale=config.clock_scale)
        self.lock = threading.RLock()

        self.store_ref = qmgr.StoreRef(qmgr.QueueStore())
        node_ids = make_node_ids(config.pool_size)
        self.fabric = NodeFabric(node_ids, self.clock, boot_delay=config.boot_delay)
        self.scheduler = Scheduler(self.store_ref, self.fabric, self.clock)
        self.users: dict[str, UserAccount] = {}
        self.sessions: dict[str, Session] = {}
        self.blocks = BlockManager(
            node_ids,
            self.store_ref,
            self.fabric,
            self.scheduler,
            self.clock,
            is_registered=lambda u: u in self.users,
            cput_seconds=config.cput_seconds,
            boot_timeout=config.boot_timeout,
        )
        self.workspaces = WorkspaceManager()
        secret = config.channel_secret.encode("utf-8")
        self.channel = MasterChannel(
            secret, secret, MasterExecutor(self.scheduler, self.workspaces)
        )
        data_dir = Path(config.data_dir)
        self._audit_path = data_dir / "audit.ndjson"
        self.router = CommandRouter(
            self.blocks,
            self.fabric,
            self.channel,
            self.clock,
            audit_sink=self._write_audit,
        )
        self.bench_runs: dict[str, dict] = {}
        self._bench_seq = 1

        self._appliers: dict[str, Callable[[dict], object]] = {
            "user_registered": self._apply_user_registered,
            "user_approved": self._apply_user_approved,
            "node_power": self._apply_node_power,
            "block_requested": self._apply_block_requested,
            "request_reviewed": self._apply_request_reviewed,
            "block_activated": self._apply_block_activated,
            "block_deactivated": self._apply_block_deactivated,
            "block_environment": self._apply_block_environment,
            "job_submitted": self._apply_job_submitted,
            "job_action": self._apply_job_action,
            "gateway_command": self._apply_gateway_command,
            "bench_flood": self._apply_bench_flood,
        }

        self._replaying = False
        self.log = EventLog(data_dir / "events.ndjson")
        recorded = self.log.read_all()
        if recorded:
            self._replay(recorded, replay_until)
        elif config.admin_username:
            self._bootstrap_admin()

    # -- event plumbing ---------------------------------------------------------

    def execute(self, kind: str, payload: dict):
        """Persist first, then apply.  The one mutation entry point."""
        if kind not in self._appliers:
            raise InvalidArgumentError(f"unknown event kind {kind!r}")
        self._sync_clock()
        self.log.append(self.clock.now(), kind, payload)
        return self._appliers[kind](payload)

    def _replay(self, events: list[Event], replay_until: Optional[float]) -> None:
        self._replaying = True
        try:
            for event in events:
                self.clock.run_until(event.ts)
                applier = self._appliers.get(event.kind)
                if applier is None:
                    continue
                try:
                    applier(event.payload)
                except OpenPCError:
                    # The live command failed after being persisted; it fails
                    # identically here, mutating nothing.
                    pass
        finally:
            self._replaying = False
        if replay_until is not None:
            self.clock.run_until(replay_until)
        rebase = getattr(self.clock, "rebase", None)
        if rebase is not None:
            rebase()

    def _sync_clock(self) -> None:
        sync = getattr(self.clock, "sync", None)
        if sync is not None:
            sync()

    def _bootstrap_admin(self) -> None:
        salt = secrets.token_hex(8)
        self.execute(
            "user_registered",
            {
                "username": self.config.admin_username,
                "display_name": self.config.admin_display_name,
                "password_salt": salt,
                "password_hash": hash_password(self.config.admin_password, salt),
                "role": ROLE_ADMIN,
                "approved": True,
            },
        )

    def _write_audit(self, record: AuditRecord) -> None:
        if self._replaying:
            return
        self._audit_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self._audit_path, "a", encoding="utf-8") as handle:
            handle.write(record.to_json() + "\n")

    # -- appliers (the fold) -------------------------------------------------------

    def _apply_user_registered(self, p: dict) -> UserAccount:
        username = p["username"]
        if username in self.users:
            raise InvalidArgumentError(f"username {username!r} is taken")
        account = UserAccount(
            username=username,
            display_name=p["display_name"],
            registered_at=self.clock.now(),
            approved=bool(p["approved"]),
            role=p["role"],
            password_salt=p["password_salt"],
            password_hash=p["password_hash"],
        )
        self.users[username] = account
        return account

    def _apply_user_approved(self, p: dict) -> UserAccount:
        account = self._user(p["username"])
        account.approved = True
        return account

    def _apply_node_power(self, p: dict):
        if p["action"] == "on":
            reply = self.fabric.power_on(p["node_id"])
        else:
            reply = self.fabric.power_off(p["node_id"])
        return {"node_id": p["node_id"], "reply": reply}

    def _apply_block_requested(self, p: dict):
        account = self._user(p["username"])
        if not account.approved:
            raise UserNotApprovedError(f"{account.username} is not approved")
        return self.blocks.request_block(
            p["username"],
            int(p["nodes"]),
            Period(float(p["start"]), float(p["end"])),
            p.get("description", ""),
        )

    def _apply_request_reviewed(self, p: dict):
        return self.blocks.review(
            p["request_id"],
            p["decision"],
            allocated=p.get("allocated"),
            reason=p.get("reason"),
        )

    def _apply_block_activated(self, p: dict):
        return self.blocks.activate(p["block_id"])

    def _apply_block_deactivated(self, p: dict):
        return self.blocks.deactivate(p["block_id"], cause=p.get("cause", "admin"))

    def _apply_block_environment(self, p: dict):
        return self.blocks.set_environment(p["block_id"], p["profile"])

    def _apply_job_submitted(self, p: dict) -> str:
        payload = None
        if p.get("payload_name"):
            payload = PayloadRef(p["payload_name"], int(p.get("payload_bytes", 0)))
        spec = JobSpec(
            environment_profile=p.get("environment_profile", "openmpi"),
            nodes_requested=int(p.get("nodes_requested", 1)),
            cpu_seconds_estimate=float(p.get("cpu_seconds_estimate", 1.0)),
            payload=payload,
            fail=bool(p.get("fail", False)),
        )
        return self.scheduler.submit(p["username"], p["queue"], spec)

    def _apply_job_action(self, p: dict):
        return self.scheduler.control(p["job_id"], p["action"])

    def _apply_gateway_command(self, p: dict) -> CommandOutcome:
        return self.router.submit(p["username"], p["block_id"], p["raw"])

    def _apply_bench_flood(self, p: dict) -> dict:
        config = floodmod.FloodConfig.from_text(p.get("config_text", ""))
        run_id = f"flood{self._bench_seq:02d}"
        self._bench_seq += 1
        result, samples = floodmod.run(config, fabric=self.fabric if p.get("require_nodes") else None)
        run = {
            "run_id": run_id,
            "csv": floodmod.emit(result, "csv"),
            "samples_csv": floodmod.samples_csv(samples),
            "rows": [vars(r) for r in result.rows],
        }
        self.bench_runs[run_id] = run
        return run

    # -- sessions (not event-sourced) ----------------------------------------------

    def login(self, username: str, password: str) -> Session:
        self._sync_clock()
        account = self.users.get(username)
        if account is None or hash_password(password, account.password_salt) != account.password_hash:
            raise AccessDeniedError("bad username or password")
        session = Session(
            token=secrets.token_hex(16),
            username=username,
            expiry=self.clock.now() + self.config.session_ttl,
        )
        self.sessions[session.token] = session
        return session

    def authenticate(self, token: Optional[str]) -> UserAccount:
        self._sync_clock()
        session = self.sessions.get(token or "")
        if session is None or self.clock.now() >= session.expiry:
            raise AccessDeniedError("missing or expired token")
        return self._user(session.username)

    def _user(self, username: str) -> UserAccount:
        try:
            return self.users[username]
        except KeyError:
            raise UnknownUserError(f"no user named {username!r}") from None

    # -- snapshot / hashing -----------------------------------------------------------

    def snapshot(self) -> dict:
        """Canonical state document; everything event-sourced, nothing ephemeral."""
        jobs = {}
        for job in self.scheduler.jobs.values():
            jobs[job.id] = {
                "owner": job.owner,
                "queue": job.queue_name,
                "state": job.state.value,
                "assigned": list(job.assigned_nodes),
                "submitted_at": job.submitted_at,
                "started_at": job.started_at,
                "ended_at": job.ended_at,
                "failure_reason": job.failure_reason,
                "run_count": job.run_count,
                "history": [(ts, st.value) for ts, st in job.history],
                "epilogs": [
                    [e.job_id, e.node_id, e.started_at, e.ended_at, e.cpu_seconds,
                     e.exit_status, list(e.detail)]
                    for e in job.epilogs
                ],
            }
        blocks = {}
        for block in self.blocks.blocks.values():
            blocks[block.id] = {
                "owner": block.owner,
                "nodes": list(block.nodes),
                "queue_name": block.queue_name,
                "period": [block.period.start, block.period.end],
                "environment": block.environment_profile,
                "state": block.state.value,
                "activated_at": block.activated_at,
                "ended_at": block.ended_at,
            }
        requests = {}
        for request in self.blocks.requests.values():
            requests[request.id] = {
                "user": request.user,
                "nodes": request.requested_nodes,
                "period": [request.period.start, request.period.end],
                "description": request.project_description,
                "state": request.state.value,
                "reason": request.reason,
                "block_id": request.block_id,
            }
        users = {
            u.username: {
                "display_name": u.display_name,
                "registered_at": u.registered_at,
                "approved": u.approved,
                "role": u.role,
            }
            for u in self.users.values()
        }
        nodes = {}
        for node_id in self.fabric.node_ids:
            metrics = self.fabric.mom_report(node_id)
            nodes[node_id] = {
                "state": metrics.state.value,
                "cpu_seconds": metrics.cpu_seconds_used,
                "running_job": metrics.running_job,
            }
        spaces = {}
        for user, ws in self.workspaces._spaces.items():
            spaces[user] = {
                "dirs": sorted(ws.dirs),
                "files": {
                    name: hashlib.sha256(data).hexdigest()
                    for name, data in sorted(ws.files.items())
                },
            }
        return {
            "now": self.clock.now(),
            "users": users,
            "queues": qmgr.serialize(self.store_ref.store),
            "pool": {n: self.blocks.pool.reserved_by(n) for n in sorted(self.fabric.node_ids)},
            "requests": requests,
            "blocks": blocks,
            "jobs": jobs,
            "nodes": nodes,
            "workspaces": spaces,
            "audit": [r.to_json() for r in self.router.audit_log],
            "bench": {rid: run["csv"] for rid, run in self.bench_runs.items()},
        }

    def state_hash(self) -> str:
        return state_hash(self.snapshot())

    def dump_snapshot(self) -> None:
        write_snapshot(
            Path(self.config.data_dir) / "snapshot.json", self.snapshot(), self.log.last_seq
        )

    def close(self) -> None:
        self.log.close()
