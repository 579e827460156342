"""Gateway command routing: classify, authorize against the session's block,
forward over the authenticated master channel (PBS/OS) or to the hardware
module (COMPORT), and audit everything.

Default deny throughout: a command must match a registry verb, the session
user must own an ACTIVE target block, and every node or queue named in the
arguments must belong to that block.  Anything else is discarded with the
first failing reason, and no discarded command reaches a backend.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import json
import re
import secrets
import shlex
from dataclasses import dataclass, field
from typing import Callable, Optional

from .blocks import Block, BlockManager, BlockState
from .clock import VirtualClock
from .errors import (
    ChannelAuthError,
    ChannelDownError,
    EmptyCommandError,
    OpenPCError,
)
from .fabric import NodeFabric, node_number
from .qmgr import parse_duration
from .scheduler import JobSpec, PayloadRef, Scheduler
from .workspace import WorkspaceManager

PBS_VERBS = frozenset({"qsub", "qstat", "qdel", "qsig", "qhold", "qrls"})
OS_VERBS = frozenset({"ls", "cat", "cp", "mv", "rm", "mkdir", "upload", "download"})
COMPORT_VERBS = frozenset({"power", "status"})

KIND_PBS = "PBS"
KIND_OS = "OS"
KIND_COMPORT = "COMPORT"
KIND_UNCLASSIFIED = "UNCLASSIFIED"

VERDICT_PENDING = "PENDING"
VERDICT_ALLOWED = "ALLOWED"
VERDICT_DISCARDED = "DISCARDED"

FORWARD_MASTER = "MASTER"
FORWARD_HARDWARE = "HARDWARE"
FORWARD_NONE = "NONE"

_NODE_ARG = re.compile(r"\bnode\d+\b")
_QUEUE_ARG = re.compile(r"\bblock\d+\b")


@dataclass
class Registry:
    pbs_verbs: frozenset = PBS_VERBS
    os_verbs: frozenset = OS_VERBS
    comport_verbs: frozenset = COMPORT_VERBS

    def __post_init__(self):
        assert not (self.pbs_verbs & self.os_verbs)
        assert not (self.pbs_verbs & self.comport_verbs)
        assert not (self.os_verbs & self.comport_verbs)


DEFAULT_REGISTRY = Registry()


@dataclass
class Command:
    raw: str
    session_user: str
    target_block: str
    kind: str = KIND_UNCLASSIFIED
    verdict: str = VERDICT_PENDING
    reason: Optional[str] = None


@dataclass(frozen=True)
class AuditRecord:
    timestamp: float
    raw: str
    kind: str
    session_user: str
    target_block: str
    verdict: str
    reason: Optional[str]
    forwarded_to: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "timestamp": self.timestamp,
                "raw": self.raw,
                "kind": self.kind,
                "session_user": self.session_user,
                "target_block": self.target_block,
                "verdict": self.verdict,
                "reason": self.reason,
                "forwarded_to": self.forwarded_to,
            },
            sort_keys=True,
        )


@dataclass(frozen=True)
class CommandOutcome:
    raw: str
    kind: str
    verdict: str
    reason: Optional[str]
    forwarded_to: str
    response: Optional[str]
    ok: bool


# -- classification -----------------------------------------------------------


def classify(raw: str, registry: Registry = DEFAULT_REGISTRY) -> str:
    """Kind is decided solely by the first whitespace token's registry set."""
    tokens = raw.split()
    if not tokens:
        raise EmptyCommandError("empty command")
    verb = tokens[0]
    if verb in registry.pbs_verbs:
        return KIND_PBS
    if verb in registry.os_verbs:
        return KIND_OS
    if verb in registry.comport_verbs:
        return KIND_COMPORT
    return KIND_UNCLASSIFIED


# -- authorization ---------------------------------------------------------------


def authorize(cmd: Command, block: Optional[Block]) -> Command:
    """Pure four-clause gate; sets verdict to ALLOWED or DISCARDED(reason).

    Clause order fixes the reported reason: kind, ownership/activity, node
    arguments, queue arguments.
    """
    if cmd.kind == KIND_UNCLASSIFIED:
        return _discard(cmd, "unclassified command")
    if block is None:
        return _discard(cmd, "unknown block")
    if block.owner != cmd.session_user:
        return _discard(cmd, "not owner")
    if block.state is not BlockState.ACTIVE:
        return _discard(cmd, "block not active")
    body = cmd.raw.split(None, 1)[1] if len(cmd.raw.split(None, 1)) > 1 else ""
    for node_arg in _NODE_ARG.findall(body):
        if node_arg not in block.nodes:
            return _discard(cmd, "node outside block")
    for queue_arg in _QUEUE_ARG.findall(body):
        if queue_arg != block.queue_name:
            return _discard(cmd, "queue outside block")
    cmd.verdict = VERDICT_ALLOWED
    return cmd


def _discard(cmd: Command, reason: str) -> Command:
    cmd.verdict = VERDICT_DISCARDED
    cmd.reason = reason
    return cmd


# -- master channel ----------------------------------------------------------------


def encode_frame(kind: str, user: str, block_id: str, raw: str) -> str:
    body = " ".join(
        (kind, user, block_id, base64.b64encode(raw.encode("utf-8")).decode("ascii"))
    )
    return f"{len(body)} {body}\n"


def decode_frame(frame: str) -> tuple[str, str, str, str]:
    if not frame.endswith("\n"):
        raise ValueError("frame missing terminator")
    length_text, _, body = frame[:-1].partition(" ")
    if int(length_text) != len(body):
        raise ValueError("frame length mismatch")
    kind, user, block_id, payload = body.split(" ")
    raw = base64.b64decode(payload).decode("utf-8")
    return kind, user, block_id, raw


def encode_response(ok: bool, payload: str) -> str:
    body = " ".join(
        ("OK" if ok else "ERR", base64.b64encode(payload.encode("utf-8")).decode("ascii"))
    )
    return f"{len(body)} {body}\n"


def decode_response(frame: str) -> tuple[bool, str]:
    if not frame.endswith("\n"):
        raise ValueError("frame missing terminator")
    length_text, _, body = frame[:-1].partition(" ")
    if int(length_text) != len(body):
        raise ValueError("frame length mismatch")
    status, payload = body.split(" ")
    return status == "OK", base64.b64decode(payload).decode("utf-8")


class MasterChannel:
    """Ordered, framed, at-most-once link from gateway to master.

    Authentication is a shared-secret HMAC handshake at setup: each side
    proves knowledge of the secret over fresh nonces, neither ever sends the
    secret itself.  The channel refuses traffic until the handshake passes.
    """

    def __init__(
        self,
        gateway_secret: bytes,
        master_secret: bytes,
        executor: Callable[[str], str],
    ):
        self._gateway_secret = gateway_secret
        self._master_secret = master_secret
        self._executor = executor
        self.authenticated = False
        self.up = True
        self.frames_delivered: list[str] = []
        self.handshake()

    def handshake(self) -> None:
        gateway_nonce = secrets.token_bytes(16)
        master_nonce = secrets.token_bytes(16)
        master_proof = hmac.new(
            self._master_secret, gateway_nonce + master_nonce, hashlib.sha256
        ).digest()
        expected = hmac.new(
            self._gateway_secret, gateway_nonce + master_nonce, hashlib.sha256
        ).digest()
        if not hmac.compare_digest(master_proof, expected):
            self.authenticated = False
            raise ChannelAuthError("master failed shared-secret proof")
        gateway_proof = hmac.new(
            self._gateway_secret, master_nonce + gateway_nonce, hashlib.sha256
        ).digest()
        master_check = hmac.new(
            self._master_secret, master_nonce + gateway_nonce, hashlib.sha256
        ).digest()
        if not hmac.compare_digest(gateway_proof, master_check):
            self.authenticated = False
            raise ChannelAuthError("gateway failed shared-secret proof")
        self.authenticated = True

    def set_down(self, down: bool = True) -> None:
        self.up = not down

    def send(self, frame: str) -> str:
        if not self.up:
            raise ChannelDownError("master channel is down")
        if not self.authenticated:
            raise ChannelAuthError("channel not authenticated")
        self.frames_delivered.append(frame)
        return self._executor(frame)


# -- master-side execution -------------------------------------------------------------


class MasterExecutor:
    """Runs decoded PBS and OS commands on the master node's services."""

    def __init__(self, scheduler: Scheduler, workspaces: WorkspaceManager):
        self.scheduler = scheduler
        self.workspaces = workspaces

    def __call__(self, frame: str) -> str:
        try:
            kind, user, block_id, raw = decode_frame(frame)
            payload = self.execute(kind, user, block_id, raw)
            return encode_response(True, payload)
        except OpenPCError as exc:
            return encode_response(False, f"{type(exc).__name__}: {exc}")
        except ValueError as exc:
            return encode_response(False, f"bad frame: {exc}")

    def execute(self, kind: str, user: str, block_id: str, raw: str) -> str:
        tokens = shlex.split(raw)
        verb, args = tokens[0], tokens[1:]
        if kind == KIND_OS:
            return self.workspaces.run(user, verb, args)
        if kind != KIND_PBS:
            raise ValueError(f"master cannot execute kind {kind}")
        if verb == "qsub":
            return self._qsub(user, block_id, args)
        if verb == "qstat":
            return self._qstat(block_id, args)
        if verb == "qdel":
            return self._action(args, "delete")
        if verb == "qhold":
            return self._action(args, "stop")
        if verb == "qrls":
            return self._action(args, "reexecute")
        if verb == "qsig":
            if len(args) == 3 and args[0] == "-s" and args[1] in ("suspend", "resume"):
                return self._action(args[2:], args[1])
            raise ValueError("usage: qsig -s suspend|resume <job>")
        raise ValueError(f"unknown PBS verb: {verb}")

    def _qsub(self, user: str, block_id: str, args: list[str]) -> str:
        queue = block_id
        nodes = 1
        cpu = 1.0
        script = None
        i = 0
        while i < len(args):
            arg = args[i]
            if arg == "-q":
                queue = args[i + 1]
                i += 2
            elif arg == "-l":
                for part in args[i + 1].split(","):
                    key, _, value = part.partition("=")
                    if key == "nodes":
                        nodes = int(value)
                    elif key == "cput":
                        cpu = float(parse_duration(value)) if ":" in value else float(value)
                    else:
                        raise ValueError(f"unknown resource: {key}")
                i += 2
            else:
                script = arg
                i += 1
        if script is None:
            raise ValueError("usage: qsub [-q queue] [-l nodes=N,cput=S] <script>")
        spec = JobSpec(
            nodes_requested=nodes,
            cpu_seconds_estimate=cpu,
            payload=PayloadRef(name=script),
        )
        return self.scheduler.submit(user, queue, spec)

    def _qstat(self, block_id: str, args: list[str]) -> str:
        if args:
            job = self.scheduler.get(args[0])
            nodes = ",".join(job.assigned_nodes) or "-"
            return f"{job.id} {job.state.value} {job.owner} {nodes}"
        lines = [
            f"{job.id} {job.state.value} {job.owner}"
            for job in self.scheduler.jobs_of_queue(block_id)
        ]
        return "\n".join(lines) if lines else "no jobs"

    def _action(self, args: list[str], action: str) -> str:
        if len(args) != 1:
            raise ValueError(f"usage: {action} takes exactly one job id")
        job = self.scheduler.control(args[0], action)
        return f"{job.id} {job.state.value}"


# -- the router itself ---------------------------------------------------------------------


class CommandRouter:
    def __init__(
        self,
        blocks: BlockManager,
        fabric: NodeFabric,
        channel: MasterChannel,
        clock: VirtualClock,
        registry: Registry = DEFAULT_REGISTRY,
        audit_sink: Optional[Callable[[AuditRecord], None]] = None,
    ):
        self.blocks = blocks
        self.fabric = fabric
        self.channel = channel
        self.clock = clock
        self.registry = registry
        self.audit_log: list[AuditRecord] = []
        self._audit_sink = audit_sink

    def submit(self, user: str, block_id: str, raw: str) -> CommandOutcome:
        """Full pipeline: classify, authorize, route or discard, audit."""
        cmd = Command(raw=raw, session_user=user, target_block=block_id)
        cmd.kind = classify(raw, self.registry)
        block = self.blocks.blocks.get(block_id)
        authorize(cmd, block)
        if cmd.verdict == VERDICT_DISCARDED:
            self._audit(cmd, FORWARD_NONE)
            return CommandOutcome(
                raw=raw,
                kind=cmd.kind,
                verdict=cmd.verdict,
                reason=cmd.reason,
                forwarded_to=FORWARD_NONE,
                response=None,
                ok=False,
            )
        return self.route(cmd)

    def route(self, cmd: Command) -> CommandOutcome:
        if cmd.verdict != VERDICT_ALLOWED:
            raise OpenPCError("route() requires an ALLOWED command")
        if cmd.kind == KIND_COMPORT:
            ok, response = self._route_hardware(cmd)
            self._audit(cmd, FORWARD_HARDWARE)
            return self._outcome(cmd, FORWARD_HARDWARE, response, ok)
        frame = encode_frame(cmd.kind, cmd.session_user, cmd.target_block, cmd.raw)
        try:
            reply = self.channel.send(frame)
        except (ChannelDownError, ChannelAuthError) as exc:
            self._audit(cmd, FORWARD_NONE)
            return self._outcome(cmd, FORWARD_NONE, f"{type(exc).__name__}: {exc}", False)
        ok, payload = decode_response(reply)
        self._audit(cmd, FORWARD_MASTER)
        return self._outcome(cmd, FORWARD_MASTER, payload, ok)

    def _route_hardware(self, cmd: Command) -> tuple[bool, str]:
        tokens = cmd.raw.split()
        verb, args = tokens[0], tokens[1:]
        if verb == "power":
            if len(args) != 2 or args[0] not in ("on", "off"):
                return False, "usage: power on|off <node>"
            line = f"PWR {args[0].upper()} {node_number(args[1])}"
        else:
            if len(args) != 1:
                return False, "usage: status <node>"
            line = f"STA {node_number(args[0])}"
        reply = self.fabric.power_exec(line)
        return not reply.startswith("ERR"), reply

    def _outcome(self, cmd: Command, forwarded: str, response: str, ok: bool) -> CommandOutcome:
        return CommandOutcome(
            raw=cmd.raw,
            kind=cmd.kind,
            verdict=cmd.verdict,
            reason=cmd.reason,
            forwarded_to=forwarded,
            response=response,
            ok=ok,
        )

    def _audit(self, cmd: Command, forwarded_to: str) -> None:
        record = AuditRecord(
            timestamp=self.clock.now(),
            raw=cmd.raw,
            kind=cmd.kind,
            session_user=cmd.session_user,
            target_block=cmd.target_block,
            verdict=cmd.verdict,
            reason=cmd.reason,
            forwarded_to=forwarded_to,
        )
        self.audit_log.append(record)
        if self._audit_sink is not None:
            self._audit_sink(record)
