"""openpc: a self-contained model of a block-partitioned public PC cluster.

Users request blocks of nodes, an administrator approves and activates them
(powering nodes on and generating the confining batch queue), jobs run under
a strict-FIFO per-queue scheduler, and a command gateway classifies,
authorizes, and audits every textual command.  A deterministic virtual clock
drives all timing, so the whole system, including the flood benchmark and the
event-sourced service state, is reproducible.
"""

from .blocks import (
    ActivationReport,
    Block,
    BlockManager,
    BlockRequest,
    BlockSnapshot,
    BlockState,
    ENVIRONMENT_PROFILES,
    NodePool,
    Period,
    RequestState,
)
from .clock import Timer, VirtualClock, WallAnchoredClock
from .config import ServiceConfig, parse_kv
from .errors import OpenPCError
from .events import Event, EventLog, state_hash
from .fabric import (
    CompletionEvent,
    EpilogRecord,
    EXIT_CPUT,
    EXIT_FAILURE,
    EXIT_OK,
    EXIT_POWER_LOST,
    EXIT_STOPPED,
    NodeFabric,
    NodeMetrics,
    NodeState,
    TaskDescriptor,
    make_node_ids,
    node_number,
)
from .flood import (
    FloodConfig,
    FloodResult,
    FloodRow,
    FloodSample,
    LinkModel,
    aggregate,
    emit,
    parse_result_csv,
    samples_csv,
)
from .flood import run as run_flood
from .qmgr import (
    AccessDecision,
    Directive,
    QueueConfig,
    QueueStore,
    StoreRef,
    admits_user,
    apply,
    apply_script,
    directives_for_block,
    dispatch_targets,
    format_duration,
    parse_duration,
    parse_script,
    serialize,
)
from .router import (
    AuditRecord,
    Command,
    CommandOutcome,
    CommandRouter,
    MasterChannel,
    MasterExecutor,
    Registry,
    authorize,
    classify,
)
from .scheduler import Job, JobSpec, JobState, PayloadRef, Scheduler
from .service import ServiceCore, Session, UserAccount
from .workspace import Workspace, WorkspaceManager

__version__ = "0.1.0"

__all__ = [
    "ActivationReport",
    "AccessDecision",
    "AuditRecord",
    "Block",
    "BlockManager",
    "BlockRequest",
    "BlockSnapshot",
    "BlockState",
    "Command",
    "CommandOutcome",
    "CommandRouter",
    "CompletionEvent",
    "Directive",
    "ENVIRONMENT_PROFILES",
    "EpilogRecord",
    "Event",
    "EventLog",
    "EXIT_CPUT",
    "EXIT_FAILURE",
    "EXIT_OK",
    "EXIT_POWER_LOST",
    "EXIT_STOPPED",
    "FloodConfig",
    "FloodResult",
    "FloodRow",
    "FloodSample",
    "Job",
    "JobSpec",
    "JobState",
    "LinkModel",
    "MasterChannel",
    "MasterExecutor",
    "NodeFabric",
    "NodeMetrics",
    "NodePool",
    "NodeState",
    "OpenPCError",
    "PayloadRef",
    "Period",
    "QueueConfig",
    "QueueStore",
    "Registry",
    "RequestState",
    "Scheduler",
    "ServiceConfig",
    "ServiceCore",
    "Session",
    "StoreRef",
    "TaskDescriptor",
    "Timer",
    "UserAccount",
    "VirtualClock",
    "WallAnchoredClock",
    "Workspace",
    "WorkspaceManager",
    "admits_user",
    "aggregate",
    "apply",
    "apply_script",
    "authorize",
    "classify",
    "directives_for_block",
    "dispatch_targets",
    "emit",
    "format_duration",
    "make_node_ids",
    "node_number",
    "parse_duration",
    "parse_kv",
    "parse_result_csv",
    "parse_script",
    "run_flood",
    "samples_csv",
    "serialize",
    "state_hash",
]
