"""Hardware-layer emulation: per-node power control and the node job agent.

Power control speaks a line protocol modeled on a microcontroller serial
link (ASCII, newline-terminated, space-separated):

    requests:  PWR ON nn | PWR OFF nn | STA nn
    replies:   ACK nn ON | ACK nn OFF | STA nn STATE | ERR nn REASON

where nn is the node's numeric suffix, zero-padded to at least two digits
(node03 <-> 03).  Each node also runs a MoM-style agent that accepts one
assigned job at a time, accounts cpu seconds on the simulation clock, and
emits exactly one epilog record per execution.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from .clock import Timer, VirtualClock
from .errors import NodeBusyError, NodeNotUpError, UnknownNodeError


class NodeState(Enum):
    OFF = "OFF"
    BOOTING = "BOOTING"
    UP = "UP"
    BUSY = "BUSY"
    FAULT = "FAULT"


#: Legal state-machine edges.  OFF boots through BOOTING to UP, UP and BUSY
#: alternate as jobs start and finish, anything can FAULT, and every non-OFF
#: state can be powered off.
EDGES = frozenset(
    [
        (NodeState.OFF, NodeState.BOOTING),
        (NodeState.BOOTING, NodeState.UP),
        (NodeState.UP, NodeState.BUSY),
        (NodeState.BUSY, NodeState.UP),
        (NodeState.UP, NodeState.OFF),
        (NodeState.BUSY, NodeState.OFF),
        (NodeState.BOOTING, NodeState.OFF),
        (NodeState.FAULT, NodeState.OFF),
    ]
    + [(s, NodeState.FAULT) for s in NodeState if s is not NodeState.FAULT]
)

# Exit statuses stamped on epilog records for abnormal endings.
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_POWER_LOST = 137
EXIT_STOPPED = 143
EXIT_CPUT = 271

_NODE_NUM_RE = re.compile(r"^\d{2,}$")


def node_number(node_id: str) -> str:
    """Protocol number for a node identifier: node03 -> '03'."""
    digits = node_id.lstrip("node")
    return digits.zfill(2)


def make_node_ids(count: int) -> list[str]:
    width = max(2, len(str(count)))
    return [f"node{i:0{width}d}" for i in range(1, count + 1)]


@dataclass(frozen=True)
class TaskDescriptor:
    """What a node is asked to run: simulated duration plus test hooks."""

    job_id: str
    cpu_seconds: float
    fail: bool = False
    payload_name: Optional[str] = None
    payload_bytes: int = 0


@dataclass(frozen=True)
class EpilogRecord:
    """Post-execution log, emitted exactly once per (job, node) run."""

    job_id: str
    node_id: str
    started_at: float
    ended_at: float
    cpu_seconds: float
    exit_status: int
    detail: tuple[str, ...]


@dataclass(frozen=True)
class CompletionEvent:
    """Delivered to subscribers when an assigned run ends on its own or is
    killed by a power cut (never for scheduler-initiated releases)."""

    job_id: str
    node_id: str
    failed: bool
    epilog: EpilogRecord


@dataclass
class NodeMetrics:
    node_id: str
    state: NodeState
    cpu_seconds_used: float
    running_job: Optional[str]
    last_heartbeat: Optional[float]


@dataclass
class _Agent:
    node_id: str
    number: str
    state: NodeState = NodeState.OFF
    boot_timer: Optional[Timer] = None
    boot_fault: bool = False
    task: Optional[TaskDescriptor] = None
    task_timer: Optional[Timer] = None
    task_started_at: float = 0.0
    seg_start: float = 0.0  # start of the current executing segment
    remaining: float = 0.0  # simulated seconds left on the task
    suspended: bool = False
    cpu_closed: float = 0.0  # cpu seconds from finished segments of this task
    cpu_total: float = 0.0  # lifetime cpu seconds across all tasks
    beat_anchor: Optional[float] = None  # when the node last reached UP
    last_beat: Optional[float] = None


class NodeFabric:
    """All node agents plus the power controller in front of them."""

    def __init__(
        self,
        node_ids: list[str],
        clock: VirtualClock,
        boot_delay: float = 2.0,
        heartbeat_interval: float = 1.0,
    ):
        self.clock = clock
        self.boot_delay = boot_delay
        self.heartbeat_interval = heartbeat_interval
        self._agents: dict[str, _Agent] = {
            nid: _Agent(nid, node_number(nid)) for nid in node_ids
        }
        self._by_number = {a.number: a for a in self._agents.values()}
        self._completion_subs: list[Callable[[CompletionEvent], None]] = []
        self.epilogs: list[EpilogRecord] = []
        #: (node_id, from, to, at) tuples, appended on every state change.
        self.transition_log: list[tuple[str, NodeState, NodeState, float]] = []

    # -- topology ------------------------------------------------------------

    @property
    def node_ids(self) -> list[str]:
        return list(self._agents)

    def up_node_ids(self) -> list[str]:
        return sorted(n for n, a in self._agents.items() if a.state is NodeState.UP)

    def state_of(self, node_id: str) -> NodeState:
        return self._agent(node_id).state

    def on_completion(self, callback: Callable[[CompletionEvent], None]) -> None:
        self._completion_subs.append(callback)

    def _agent(self, node_id: str) -> _Agent:
        try:
            return self._agents[node_id]
        except KeyError:
            raise UnknownNodeError(f"no node named {node_id!r}") from None

    def _transition(self, agent: _Agent, to: NodeState) -> None:
        if (agent.state, to) not in EDGES:
            raise AssertionError(f"illegal transition {agent.state} -> {to} on {agent.node_id}")
        self.transition_log.append((agent.node_id, agent.state, to, self.clock.now()))
        agent.state = to

    # -- power protocol --------------------------------------------------------

    def power_exec(self, line: str) -> str:
        """Execute one protocol line and return the reply, bit-exact."""
        tokens = line.split()
        if len(tokens) == 3 and tokens[0] == "PWR" and tokens[1] in ("ON", "OFF"):
            number = tokens[2]
            if not _NODE_NUM_RE.match(number):
                return "ERR 00 BADCMD"
            agent = self._by_number.get(number)
            if agent is None:
                return f"ERR {number} UNKNOWN"
            if tokens[1] == "ON":
                self._power_on(agent)
                return f"ACK {number} ON"
            self._power_off(agent)
            return f"ACK {number} OFF"
        if len(tokens) == 2 and tokens[0] == "STA":
            number = tokens[1]
            if not _NODE_NUM_RE.match(number):
                return "ERR 00 BADCMD"
            agent = self._by_number.get(number)
            if agent is None:
                return f"ERR {number} UNKNOWN"
            return f"STA {number} {agent.state.value}"
        return "ERR 00 BADCMD"

    def power_on(self, node_id: str) -> str:
        return self.power_exec(f"PWR ON {self._agent(node_id).number}")

    def power_off(self, node_id: str) -> str:
        return self.power_exec(f"PWR OFF {self._agent(node_id).number}")

    def _power_on(self, agent: _Agent) -> None:
        if agent.state is not NodeState.OFF:
            return  # idempotent: already on (or on its way)
        self._transition(agent, NodeState.BOOTING)
        if not agent.boot_fault:
            agent.boot_timer = self.clock.schedule(
                self.boot_delay, lambda a=agent: self._finish_boot(a)
            )

    def _finish_boot(self, agent: _Agent) -> None:
        agent.boot_timer = None
        self._transition(agent, NodeState.UP)
        agent.beat_anchor = self.clock.now()
        agent.last_beat = agent.beat_anchor

    def _power_off(self, agent: _Agent) -> None:
        if agent.state is NodeState.OFF:
            return
        if agent.boot_timer:
            agent.boot_timer.cancel()
            agent.boot_timer = None
        if agent.state is NodeState.BUSY:
            # The running job dies with the node: FAILED completion first,
            # then the node reports OFF.
            epilog = self._end_task(agent, EXIT_POWER_LOST, "killed: power off")
            self._transition(agent, NodeState.OFF)
            self._freeze_heartbeat(agent)
            self._notify(CompletionEvent(epilog.job_id, agent.node_id, True, epilog))
            return
        self._transition(agent, NodeState.OFF)
        self._freeze_heartbeat(agent)

    def set_boot_fault(self, node_id: str, stuck: bool = True) -> None:
        """Fault injection: a stuck node powers on but never reaches UP."""
        self._agent(node_id).boot_fault = stuck

    def fault(self, node_id: str) -> None:
        """Fault injection: hard-fault a node in place (any state)."""
        agent = self._agent(node_id)
        if agent.state is NodeState.FAULT:
            return
        if agent.boot_timer:
            agent.boot_timer.cancel()
            agent.boot_timer = None
        if agent.state is NodeState.BUSY:
            epilog = self._end_task(agent, EXIT_POWER_LOST, "killed: node fault")
            self._transition(agent, NodeState.FAULT)
            self._freeze_heartbeat(agent)
            self._notify(CompletionEvent(epilog.job_id, agent.node_id, True, epilog))
            return
        self._transition(agent, NodeState.FAULT)
        self._freeze_heartbeat(agent)

    # -- MoM agent -------------------------------------------------------------

    def mom_assign(self, node_id: str, task: TaskDescriptor) -> None:
        """Hand a job to an UP node; it runs for task.cpu_seconds of clock time."""
        agent = self._agent(node_id)
        if agent.state is NodeState.BUSY:
            raise NodeBusyError(f"{node_id} is already running {agent.task.job_id}")
        if agent.state is not NodeState.UP:
            raise NodeNotUpError(f"{node_id} is {agent.state.value}")
        self._transition(agent, NodeState.BUSY)
        agent.task = task
        agent.task_started_at = self.clock.now()
        agent.seg_start = agent.task_started_at
        agent.remaining = task.cpu_seconds
        agent.suspended = False
        agent.cpu_closed = 0.0
        agent.task_timer = self.clock.schedule(
            task.cpu_seconds, lambda a=agent: self._finish_task(a)
        )

    def mom_suspend(self, node_id: str) -> None:
        """Pause the running task; the node stays BUSY and keeps the job."""
        agent = self._agent(node_id)
        if agent.state is not NodeState.BUSY or agent.suspended:
            raise NodeNotUpError(f"{node_id} has no running task to suspend")
        now = self.clock.now()
        executed = now - agent.seg_start
        agent.cpu_closed += executed
        agent.remaining -= executed
        agent.task_timer.cancel()
        agent.task_timer = None
        agent.suspended = True

    def mom_resume(self, node_id: str) -> None:
        agent = self._agent(node_id)
        if agent.state is not NodeState.BUSY or not agent.suspended:
            raise NodeNotUpError(f"{node_id} has no suspended task")
        agent.suspended = False
        agent.seg_start = self.clock.now()
        agent.task_timer = self.clock.schedule(
            max(agent.remaining, 0.0), lambda a=agent: self._finish_task(a)
        )

    def mom_release(self, node_id: str, exit_status: int, reason: str) -> EpilogRecord:
        """Scheduler-initiated termination (stop/delete/cput kill).

        Emits the epilog and frees the node without a completion event; the
        caller already knows the outcome.
        """
        agent = self._agent(node_id)
        if agent.state is not NodeState.BUSY:
            raise NodeNotUpError(f"{node_id} has no task to release")
        epilog = self._end_task(agent, exit_status, reason)
        self._transition(agent, NodeState.UP)
        return epilog

    def _finish_task(self, agent: _Agent) -> None:
        task = agent.task
        failed = task.fail
        status = EXIT_FAILURE if failed else EXIT_OK
        reason = "task failure flag" if failed else None
        epilog = self._end_task(agent, status, reason)
        self._transition(agent, NodeState.UP)
        self._notify(CompletionEvent(task.job_id, agent.node_id, failed, epilog))

    def _end_task(self, agent: _Agent, exit_status: int, reason: Optional[str]) -> EpilogRecord:
        now = self.clock.now()
        if not agent.suspended:
            agent.cpu_closed += now - agent.seg_start
        if agent.task_timer:
            agent.task_timer.cancel()
            agent.task_timer = None
        task = agent.task
        cpu = agent.cpu_closed
        agent.cpu_total += cpu
        detail = [
            f"job={task.job_id}",
            f"node={agent.node_id}",
            f"cpu_seconds={cpu:.3f}",
            f"exit={exit_status}",
        ]
        if task.payload_name:
            detail.append(f"payload={task.payload_name}:{task.payload_bytes}")
        if reason:
            detail.append(reason)
        epilog = EpilogRecord(
            job_id=task.job_id,
            node_id=agent.node_id,
            started_at=agent.task_started_at,
            ended_at=now,
            cpu_seconds=cpu,
            exit_status=exit_status,
            detail=tuple(detail),
        )
        self.epilogs.append(epilog)
        agent.task = None
        agent.suspended = False
        agent.remaining = 0.0
        agent.cpu_closed = 0.0
        return epilog

    def _notify(self, event: CompletionEvent) -> None:
        for callback in self._completion_subs:
            callback(event)

    # -- monitoring ------------------------------------------------------------

    def mom_report(self, node_id: str) -> NodeMetrics:
        """Metrics snapshot; OFF nodes report stale heartbeat and no job."""
        agent = self._agent(node_id)
        cpu = agent.cpu_total
        if agent.state is NodeState.BUSY and not agent.suspended:
            cpu += agent.cpu_closed + (self.clock.now() - agent.seg_start)
        elif agent.state is NodeState.BUSY:
            cpu += agent.cpu_closed
        return NodeMetrics(
            node_id=node_id,
            state=agent.state,
            cpu_seconds_used=cpu,
            running_job=agent.task.job_id if agent.task else None,
            last_heartbeat=self._heartbeat(agent),
        )

    def _heartbeat(self, agent: _Agent) -> Optional[float]:
        # Heartbeats are derived, not event-driven: an UP/BUSY node has beaten
        # at every whole interval since it reached UP.
        if agent.beat_anchor is not None:
            elapsed = self.clock.now() - agent.beat_anchor
            beats = int(elapsed / self.heartbeat_interval)
            return agent.beat_anchor + beats * self.heartbeat_interval
        return agent.last_beat

    def _freeze_heartbeat(self, agent: _Agent) -> None:
        # Called on the way down (OFF/FAULT): pin the last beat that happened.
        agent.last_beat = self._heartbeat(agent)
        agent.beat_anchor = None
