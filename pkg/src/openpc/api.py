"""HTTP front end: token-authenticated JSON routes over the service core.

Handlers are synchronous and serialize through the core's lock, so the
single-writer rules of the underlying modules hold under concurrent requests.
Every mutation goes through core.execute(), which persists the event first.
"""

from __future__ import annotations

from typing import Optional

from fastapi import Body, Depends, FastAPI, Header, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse

from . import qmgr
from .blocks import ENVIRONMENT_PROFILES, Block, BlockRequest, BlockSnapshot, RequestState
from .config import ServiceConfig
from .errors import (
    AccessDeniedError,
    AlreadyReviewedError,
    ChannelAuthError,
    ChannelDownError,
    CorruptLogError,
    EmptyCommandError,
    HardwareFaultError,
    IllegalTransitionError,
    InsufficientNodesError,
    InvalidArgumentError,
    InvalidConfigError,
    InvalidPeriodError,
    NodeBootTimeoutError,
    NodeBusyError,
    NodeNotUpError,
    NodesUnavailableError,
    NoFreeNodesError,
    OpenPCError,
    PathEscapeError,
    QmgrSyntaxError,
    RaggedSamplesError,
    StorageFailureError,
    TooManyNodesError,
    TypeMismatchError,
    UnknownAttributeError,
    UnknownBlockError,
    UnknownJobError,
    UnknownNodeError,
    UnknownQueueError,
    UnknownRequestError,
    UnknownRunError,
    UnknownUserError,
    UserNotApprovedError,
    WorkspaceError,
    WrongStateError,
)
from .scheduler import Job
from .service import ROLE_ADMIN, ServiceCore, UserAccount, hash_password

import secrets as _secrets

STATUS_BY_ERROR: dict[type, int] = {
    UnknownUserError: 404,
    UnknownQueueError: 404,
    UnknownBlockError: 404,
    UnknownRequestError: 404,
    UnknownJobError: 404,
    UnknownNodeError: 404,
    UnknownRunError: 404,
    AccessDeniedError: 403,
    UserNotApprovedError: 403,
    AlreadyReviewedError: 409,
    WrongStateError: 409,
    IllegalTransitionError: 409,
    NodesUnavailableError: 409,
    NoFreeNodesError: 409,
    NodeBusyError: 409,
    NodeNotUpError: 409,
    NodeBootTimeoutError: 409,
    InsufficientNodesError: 409,
    InvalidPeriodError: 422,
    InvalidArgumentError: 422,
    InvalidConfigError: 422,
    EmptyCommandError: 422,
    QmgrSyntaxError: 422,
    TypeMismatchError: 422,
    UnknownAttributeError: 422,
    RaggedSamplesError: 422,
    PathEscapeError: 422,
    WorkspaceError: 422,
    TooManyNodesError: 422,
    StorageFailureError: 503,
    ChannelDownError: 503,
    ChannelAuthError: 503,
    HardwareFaultError: 503,
    CorruptLogError: 500,
}


def _status_for(exc: OpenPCError) -> int:
    for klass in type(exc).__mro__:
        if klass in STATUS_BY_ERROR:
            return STATUS_BY_ERROR[klass]
    return 500


def _need(body: dict, name: str, caster=str):
    if name not in body:
        raise InvalidArgumentError(f"missing field {name!r}")
    try:
        return caster(body[name])
    except (TypeError, ValueError):
        raise InvalidArgumentError(f"field {name!r}: cannot parse {body[name]!r}") from None


# -- document shapes -------------------------------------------------------------


def user_doc(u: UserAccount) -> dict:
    return {
        "username": u.username,
        "display_name": u.display_name,
        "registered_at": u.registered_at,
        "approved": u.approved,
        "role": u.role,
    }


def request_doc(r: BlockRequest) -> dict:
    return {
        "id": r.id,
        "user": r.user,
        "requested_nodes": r.requested_nodes,
        "period": {"start": r.period.start, "end": r.period.end},
        "project_description": r.project_description,
        "state": r.state.value,
        "reason": r.reason,
        "block_id": r.block_id,
        "created_at": r.created_at,
    }


def block_doc(b: Block) -> dict:
    return {
        "id": b.id,
        "owner": b.owner,
        "nodes": list(b.nodes),
        "queue_name": b.queue_name,
        "period": {"start": b.period.start, "end": b.period.end},
        "environment_profile": b.environment_profile,
        "state": b.state.value,
        "activated_at": b.activated_at,
        "ended_at": b.ended_at,
    }


def snapshot_doc(s: BlockSnapshot) -> dict:
    return {
        "id": s.block_id,
        "state": s.state.value,
        "owner": s.owner,
        "queue_name": s.queue_name,
        "environment_profile": s.environment_profile,
        "period": {"start": s.period.start, "end": s.period.end},
        "nodes": {n: st.value for n, st in s.node_states.items()},
        "queue": None
        if s.queue is None
        else {
            "queue_type": s.queue.queue_type,
            "acl_hosts": list(s.queue.acl_hosts),
            "acl_users": list(s.queue.acl_users),
            "resources_max_cput": s.queue.resources_max_cput,
            "enabled": s.queue.enabled,
            "started": s.queue.started,
        },
        "active_jobs": list(s.active_jobs),
    }


def job_doc(j: Job) -> dict:
    return {
        "id": j.id,
        "owner": j.owner,
        "queue": j.queue_name,
        "state": j.state.value,
        "spec": {
            "environment_profile": j.spec.environment_profile,
            "nodes_requested": j.spec.nodes_requested,
            "cpu_seconds_estimate": j.spec.cpu_seconds_estimate,
            "payload_name": j.spec.payload.name if j.spec.payload else None,
            "payload_bytes": j.spec.payload.size_bytes if j.spec.payload else 0,
        },
        "assigned_nodes": list(j.assigned_nodes),
        "submitted_at": j.submitted_at,
        "started_at": j.started_at,
        "ended_at": j.ended_at,
        "failure_reason": j.failure_reason,
        "run_count": j.run_count,
    }


# -- app factory --------------------------------------------------------------------


def create_app(core: ServiceCore) -> FastAPI:
    app = FastAPI(title="openpc", docs_url=None, redoc_url=None)
    app.state.core = core

    # Browser consoles are served from their own origin; auth is a bearer
    # token, never a cookie, so a wildcard origin leaks nothing.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(OpenPCError)
    def _openpc_error(request, exc: OpenPCError):
        return JSONResponse(
            status_code=_status_for(exc),
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    def auth(authorization: Optional[str] = Header(None)) -> UserAccount:
        token = None
        if authorization and authorization.startswith("Bearer "):
            token = authorization.split(" ", 1)[1]
        try:
            with core.lock:
                return core.authenticate(token)
        except AccessDeniedError as exc:
            raise HTTPException(status_code=401, detail=str(exc)) from None

    def admin(account: UserAccount = Depends(auth)) -> UserAccount:
        if account.role != ROLE_ADMIN:
            raise AccessDeniedError("administrator role required")
        return account

    def _can_see_block(account: UserAccount, block_id: str) -> None:
        block = core.blocks.get_block(block_id)
        if account.role != ROLE_ADMIN and block.owner != account.username:
            raise AccessDeniedError(f"{block_id} is not your block")

    def _can_see_job(account: UserAccount, job_id: str) -> Job:
        job = core.scheduler.get(job_id)
        if account.role != ROLE_ADMIN and job.owner != account.username:
            raise AccessDeniedError(f"{job_id} is not your job")
        return job

    # -- users & sessions ---------------------------------------------------

    @app.post("/users", status_code=201)
    def register(body: dict = Body(...)):
        username = _need(body, "username")
        display = body.get("display_name", username)
        password = _need(body, "password")
        if not username.isidentifier():
            raise InvalidArgumentError("username must be an identifier")
        with core.lock:
            salt = _secrets.token_hex(8)
            account = core.execute(
                "user_registered",
                {
                    "username": username,
                    "display_name": display,
                    "password_salt": salt,
                    "password_hash": hash_password(password, salt),
                    "role": "USER",
                    "approved": False,
                },
            )
            return user_doc(account)

    @app.post("/users/{username}/approve")
    def approve_user(username: str, account: UserAccount = Depends(admin)):
        with core.lock:
            return user_doc(core.execute("user_approved", {"username": username}))

    @app.get("/users")
    def list_users(account: UserAccount = Depends(admin)):
        with core.lock:
            return [user_doc(u) for u in core.users.values()]

    @app.get("/users/me")
    def whoami(account: UserAccount = Depends(auth)):
        return user_doc(account)

    @app.post("/sessions")
    def login(body: dict = Body(...)):
        username = _need(body, "username")
        password = _need(body, "password")
        with core.lock:
            try:
                session = core.login(username, password)
            except AccessDeniedError as exc:
                raise HTTPException(status_code=401, detail=str(exc)) from None
            account = core.users[username]
            return {
                "token": session.token,
                "username": username,
                "role": account.role,
                "approved": account.approved,
                "expiry": session.expiry,
            }

    # -- nodes ------------------------------------------------------------------

    def node_doc(node_id: str) -> dict:
        metrics = core.fabric.mom_report(node_id)
        return {
            "id": node_id,
            "state": metrics.state.value,
            "cpu_seconds_used": metrics.cpu_seconds_used,
            "running_job": metrics.running_job,
            "last_heartbeat": metrics.last_heartbeat,
            "reserved_by": core.blocks.pool.reserved_by(node_id),
        }

    @app.get("/nodes")
    def list_nodes(account: UserAccount = Depends(admin)):
        with core.lock:
            return [node_doc(n) for n in sorted(core.fabric.node_ids)]

    @app.post("/nodes/{node_id}/power")
    def node_power(node_id: str, body: dict = Body(...), account: UserAccount = Depends(admin)):
        action = _need(body, "action")
        if action not in ("on", "off"):
            raise InvalidArgumentError("action must be on or off")
        with core.lock:
            core.fabric.state_of(node_id)  # 404 before the event is written
            return core.execute("node_power", {"node_id": node_id, "action": action})

    @app.get("/nodes/{node_id}/status")
    def node_status(node_id: str, account: UserAccount = Depends(admin)):
        with core.lock:
            return node_doc(node_id)

    # -- block requests -------------------------------------------------------------

    @app.post("/blocks/requests", status_code=201)
    def request_block(body: dict = Body(...), account: UserAccount = Depends(auth)):
        nodes = _need(body, "nodes", int)
        with core.lock:
            if "duration_s" in body and "start" not in body:
                start = core.clock.now()
                end = start + _need(body, "duration_s", float)
            else:
                start = _need(body, "start", float)
                end = _need(body, "end", float)
            request = core.execute(
                "block_requested",
                {
                    "username": account.username,
                    "nodes": nodes,
                    "start": start,
                    "end": end,
                    "description": body.get("description", ""),
                },
            )
            return request_doc(request)

    @app.get("/blocks/requests")
    def list_requests(
        state: Optional[str] = Query(None), account: UserAccount = Depends(auth)
    ):
        wanted = None
        if state is not None:
            try:
                wanted = RequestState(state.upper())
            except ValueError:
                raise InvalidArgumentError(f"unknown request state {state!r}") from None
        with core.lock:
            found = core.blocks.list_requests(wanted)
            if account.role != ROLE_ADMIN:
                found = [r for r in found if r.user == account.username]
            return [request_doc(r) for r in found]

    @app.post("/blocks/requests/{request_id}/review")
    def review_request(
        request_id: str, body: dict = Body(...), account: UserAccount = Depends(admin)
    ):
        decision = _need(body, "decision")
        with core.lock:
            outcome = core.execute(
                "request_reviewed",
                {
                    "request_id": request_id,
                    "decision": decision,
                    "allocated": body.get("allocated"),
                    "reason": body.get("reason"),
                },
            )
            if isinstance(outcome, BlockRequest):
                return request_doc(outcome)
            return block_doc(outcome)

    # -- blocks ------------------------------------------------------------------------

    @app.get("/blocks")
    def list_blocks(account: UserAccount = Depends(auth)):
        with core.lock:
            found = list(core.blocks.blocks.values())
            if account.role != ROLE_ADMIN:
                found = [b for b in found if b.owner == account.username]
            return [block_doc(b) for b in found]

    @app.post("/blocks/{block_id}/activate")
    def activate_block(block_id: str, account: UserAccount = Depends(admin)):
        with core.lock:
            report = core.execute("block_activated", {"block_id": block_id})
            return {
                "block_id": report.block_id,
                "queue_name": report.queue_name,
                "nodes": list(report.nodes),
                "boot_seconds": report.boot_seconds,
                "script": report.script,
            }

    @app.post("/blocks/{block_id}/deactivate")
    def deactivate_block(block_id: str, account: UserAccount = Depends(admin)):
        with core.lock:
            block = core.execute(
                "block_deactivated", {"block_id": block_id, "cause": "admin"}
            )
            return block_doc(block)

    @app.get("/blocks/{block_id}")
    def get_block(block_id: str, account: UserAccount = Depends(auth)):
        with core.lock:
            _can_see_block(account, block_id)
            return snapshot_doc(core.blocks.block_status(block_id))

    @app.get("/blocks/{block_id}/queue", response_class=PlainTextResponse)
    def get_block_queue(block_id: str, account: UserAccount = Depends(auth)):
        with core.lock:
            _can_see_block(account, block_id)
            block = core.blocks.get_block(block_id)
            store = core.store_ref.store
            if block.queue_name not in store:
                return ""
            single = qmgr.QueueStore({block.queue_name: store.get(block.queue_name)})
            return qmgr.serialize(single)

    @app.post("/blocks/{block_id}/environment")
    def set_environment(
        block_id: str, body: dict = Body(...), account: UserAccount = Depends(auth)
    ):
        profile = _need(body, "profile")
        with core.lock:
            _can_see_block(account, block_id)
            block = core.execute(
                "block_environment", {"block_id": block_id, "profile": profile}
            )
            return block_doc(block)

    @app.get("/environments")
    def environments(account: UserAccount = Depends(auth)):
        return {"profiles": list(ENVIRONMENT_PROFILES)}

    # -- jobs ------------------------------------------------------------------------------

    @app.post("/queues/{queue_name}/jobs", status_code=201)
    def submit_job(
        queue_name: str, body: dict = Body(default={}), account: UserAccount = Depends(auth)
    ):
        with core.lock:
            job_id = core.execute(
                "job_submitted",
                {
                    "username": account.username,
                    "queue": queue_name,
                    "environment_profile": body.get("environment_profile", "openmpi"),
                    "nodes_requested": body.get("nodes_requested", 1),
                    "cpu_seconds_estimate": body.get("cpu_seconds_estimate", 1.0),
                    "payload_name": body.get("payload_name"),
                    "payload_bytes": body.get("payload_bytes", 0),
                    "fail": body.get("fail", False),
                },
            )
            return {"job_id": job_id}

    @app.get("/queues/{queue_name}/jobs")
    def list_jobs(queue_name: str, account: UserAccount = Depends(auth)):
        with core.lock:
            core.store_ref.store.get(queue_name)  # 404 on unknown queue
            jobs = core.scheduler.jobs_of_queue(queue_name)
            if account.role != ROLE_ADMIN:
                jobs = [j for j in jobs if j.owner == account.username]
            return [job_doc(j) for j in jobs]

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str, account: UserAccount = Depends(auth)):
        with core.lock:
            return job_doc(_can_see_job(account, job_id))

    @app.post("/jobs/{job_id}/actions")
    def job_action(job_id: str, body: dict = Body(...), account: UserAccount = Depends(auth)):
        action = _need(body, "action")
        with core.lock:
            _can_see_job(account, job_id)
            job = core.execute("job_action", {"job_id": job_id, "action": action})
            return job_doc(job)

    @app.get("/jobs/{job_id}/logs")
    def job_logs(job_id: str, account: UserAccount = Depends(auth)):
        with core.lock:
            _can_see_job(account, job_id)
            epilogs, history = core.scheduler.fetch_logs(job_id)
            return {
                "epilogs": [
                    {
                        "job_id": e.job_id,
                        "node_id": e.node_id,
                        "started_at": e.started_at,
                        "ended_at": e.ended_at,
                        "cpu_seconds": e.cpu_seconds,
                        "exit_status": e.exit_status,
                        "detail": list(e.detail),
                    }
                    for e in epilogs
                ],
                "history": [{"at": ts, "state": st.value} for ts, st in history],
            }

    # -- benchmark -------------------------------------------------------------------------

    @app.post("/bench/flood", status_code=201)
    def bench_flood(body: dict = Body(default={}), account: UserAccount = Depends(admin)):
        config_lines = []
        for key, value in body.get("config", {}).items():
            config_lines.append(f"{key} = {value}")
        with core.lock:
            run = core.execute(
                "bench_flood",
                {
                    "config_text": "\n".join(config_lines),
                    "require_nodes": bool(body.get("require_nodes", False)),
                },
            )
            return {"run_id": run["run_id"], "rows": run["rows"]}

    @app.get("/bench/flood/{run_id}/csv", response_class=PlainTextResponse)
    def bench_csv(run_id: str, account: UserAccount = Depends(auth)):
        with core.lock:
            run = core.bench_runs.get(run_id)
            if run is None:
                raise UnknownRunError(f"no benchmark run named {run_id!r}")
            return run["csv"]

    @app.get("/bench/flood/{run_id}/raw", response_class=PlainTextResponse)
    def bench_raw(run_id: str, account: UserAccount = Depends(auth)):
        with core.lock:
            run = core.bench_runs.get(run_id)
            if run is None:
                raise UnknownRunError(f"no benchmark run named {run_id!r}")
            return run["samples_csv"]

    # -- gateway ----------------------------------------------------------------------------

    @app.post("/gateway/commands")
    def gateway_command(body: dict = Body(...), account: UserAccount = Depends(auth)):
        block_id = _need(body, "block_id")
        raw = _need(body, "command")
        with core.lock:
            outcome = core.execute(
                "gateway_command",
                {"username": account.username, "block_id": block_id, "raw": raw},
            )
            return {
                "raw": outcome.raw,
                "kind": outcome.kind,
                "verdict": outcome.verdict,
                "reason": outcome.reason,
                "forwarded_to": outcome.forwarded_to,
                "response": outcome.response,
                "ok": outcome.ok,
            }

    # -- service status ------------------------------------------------------------------------

    @app.get("/status")
    def service_status(account: UserAccount = Depends(auth)):
        with core.lock:
            free, reserved = core.blocks.pool.counts()
            return {
                "now": core.clock.now(),
                "nodes_total": len(core.fabric.node_ids),
                "nodes_up": len(core.fabric.up_node_ids()),
                "nodes_free": free,
                "nodes_reserved": reserved,
                "blocks_active": sum(
                    1 for b in core.blocks.blocks.values() if b.state.value == "ACTIVE"
                ),
                "events": core.log.last_seq,
            }

    return app


def serve(config: Optional[ServiceConfig] = None) -> None:
    """Run the HTTP service (blocking)."""
    import uvicorn

    config = config or ServiceConfig.load()
    core = ServiceCore(config)
    app = create_app(core)
    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    finally:
        core.dump_snapshot()
        core.close()
