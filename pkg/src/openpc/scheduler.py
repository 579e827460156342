"""Per-queue job scheduling: FIFO dispatch onto ACL hosts, job control verbs,
and cpu-time cap enforcement.

Policy is deliberately minimal and deterministic: strict FIFO with no
backfill, lowest-identifier idle nodes first.  A job's only execution targets
are its queue's host ACL, so a queue confines its owner's jobs to the block
realized by that queue.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from . import qmgr
from .clock import Timer, VirtualClock
from .errors import (
    AccessDeniedError,
    IllegalTransitionError,
    TooManyNodesError,
    UnknownJobError,
)
from .fabric import (
    EXIT_CPUT,
    EXIT_POWER_LOST,
    EXIT_STOPPED,
    CompletionEvent,
    EpilogRecord,
    NodeFabric,
    NodeState,
    TaskDescriptor,
)


class JobState(Enum):
    QUEUED = "QUEUED"
    RUNNING = "RUNNING"
    SUSPENDED = "SUSPENDED"
    STOPPED = "STOPPED"
    DELETED = "DELETED"
    FINISHED = "FINISHED"
    FAILED = "FAILED"


ACTIONS = ("suspend", "resume", "stop", "delete", "reexecute")

#: The full action table.  Anything not listed raises IllegalTransition;
#: RUNNING -> FINISHED/FAILED and QUEUED -> RUNNING happen through dispatch
#: and completion events, not user actions.
TRANSITIONS: dict[tuple[JobState, str], JobState] = {
    (JobState.RUNNING, "suspend"): JobState.SUSPENDED,
    (JobState.SUSPENDED, "resume"): JobState.RUNNING,
    (JobState.RUNNING, "stop"): JobState.STOPPED,
    (JobState.SUSPENDED, "stop"): JobState.STOPPED,
    (JobState.QUEUED, "delete"): JobState.DELETED,
    (JobState.SUSPENDED, "delete"): JobState.DELETED,
    (JobState.STOPPED, "reexecute"): JobState.QUEUED,
    (JobState.FINISHED, "reexecute"): JobState.QUEUED,
    (JobState.FAILED, "reexecute"): JobState.QUEUED,
}


@dataclass(frozen=True)
class PayloadRef:
    name: str
    size_bytes: int = 0


@dataclass
class JobSpec:
    environment_profile: str = "openmpi"
    nodes_requested: int = 1
    cpu_seconds_estimate: float = 1.0
    payload: Optional[PayloadRef] = None
    fail: bool = False  # test hook: the run ends FAILED

    def __post_init__(self):
        if self.nodes_requested < 1:
            raise ValueError("nodes_requested must be >= 1")


@dataclass
class Job:
    id: str
    owner: str
    queue_name: str
    spec: JobSpec
    state: JobState
    submitted_at: float
    assigned_nodes: list[str] = field(default_factory=list)
    started_at: Optional[float] = None
    ended_at: Optional[float] = None
    epilogs: list[EpilogRecord] = field(default_factory=list)
    history: list[tuple[float, JobState]] = field(default_factory=list)
    failure_reason: Optional[str] = None
    run_count: int = 0
    # live-run accounting
    _pending: set[str] = field(default_factory=set, repr=False)
    _seg_start: float = field(default=0.0, repr=False)
    _closed_per_node: float = field(default=0.0, repr=False)
    _cpu_run: float = field(default=0.0, repr=False)

    def cpu_accumulated(self, now: float) -> float:
        """CPU seconds of the current run, summed over assigned nodes."""
        per_node = self._closed_per_node
        if self.state is JobState.RUNNING:
            per_node += now - self._seg_start
        return per_node * len(self.assigned_nodes)


@dataclass
class QueueRuntime:
    queue_name: str
    fifo: deque[str] = field(default_factory=deque)
    next_seq: int = 1


class Scheduler:
    """Owns every job and the per-queue FIFO runtimes."""

    def __init__(
        self,
        store_ref: qmgr.StoreRef,
        fabric: NodeFabric,
        clock: VirtualClock,
        auto_dispatch: bool = True,
        tick_interval: float = 1.0,
    ):
        self.store_ref = store_ref
        self.fabric = fabric
        self.clock = clock
        self.auto_dispatch = auto_dispatch
        self.tick_interval = tick_interval
        self.jobs: dict[str, Job] = {}
        self.runtimes: dict[str, QueueRuntime] = {}
        self._tick_timer: Optional[Timer] = None
        fabric.on_completion(self._on_completion)

    # -- submission and dispatch ----------------------------------------------

    def submit(self, user: str, queue_name: str, spec: JobSpec) -> str:
        """Queue a job if the user passes the queue ACL and the queue is big
        enough; returns the new job id ("<queue>.<seq>")."""
        store = self.store_ref.store
        decision = qmgr.admits_user(store, queue_name, user)
        if not decision:
            raise AccessDeniedError(f"{user} -> {queue_name}: {decision.reason}")
        targets = qmgr.dispatch_targets(store, queue_name)
        if spec.nodes_requested > len(targets):
            raise TooManyNodesError(
                f"requested {spec.nodes_requested} nodes, queue has {len(targets)}"
            )
        runtime = self.runtimes.setdefault(queue_name, QueueRuntime(queue_name))
        job_id = f"{queue_name}.{runtime.next_seq}"
        runtime.next_seq += 1
        now = self.clock.now()
        job = Job(
            id=job_id,
            owner=user,
            queue_name=queue_name,
            spec=spec,
            state=JobState.QUEUED,
            submitted_at=now,
            history=[(now, JobState.QUEUED)],
        )
        self.jobs[job_id] = job
        runtime.fifo.append(job_id)
        if self.auto_dispatch:
            self.dispatch(queue_name)
        return job_id

    def dispatch(self, queue_name: str) -> list[tuple[str, list[str]]]:
        """Start queued jobs strictly in FIFO order.

        The head job runs as soon as enough of the queue's ACL hosts are UP
        and idle (lowest identifiers first); a blocked head blocks everything
        behind it.  Returns the (job id, nodes) assignments made.
        """
        store = self.store_ref.store
        queue = store.get(queue_name)
        runtime = self.runtimes.setdefault(queue_name, QueueRuntime(queue_name))
        assignments: list[tuple[str, list[str]]] = []
        if not (queue.enabled and queue.started):
            return assignments
        targets = sorted(queue.acl_hosts)
        while runtime.fifo:
            job = self.jobs[runtime.fifo[0]]
            idle = [n for n in targets if self._is_idle(n)]
            if len(idle) < job.spec.nodes_requested:
                break
            runtime.fifo.popleft()
            chosen = idle[: job.spec.nodes_requested]
            self._start(job, chosen)
            assignments.append((job.id, chosen))
        return assignments

    def _is_idle(self, node_id: str) -> bool:
        try:
            return self.fabric.state_of(node_id) is NodeState.UP
        except Exception:
            return False

    def _start(self, job: Job, nodes: list[str]) -> None:
        now = self.clock.now()
        job.assigned_nodes = list(nodes)
        job._pending = set(nodes)
        job._seg_start = now
        job._closed_per_node = 0.0
        job._cpu_run = 0.0
        job.started_at = now
        job.run_count += 1
        self._set_state(job, JobState.RUNNING)
        spec = job.spec
        task = TaskDescriptor(
            job_id=job.id,
            cpu_seconds=spec.cpu_seconds_estimate,
            fail=spec.fail,
            payload_name=spec.payload.name if spec.payload else None,
            payload_bytes=spec.payload.size_bytes if spec.payload else 0,
        )
        for node in nodes:
            self.fabric.mom_assign(node, task)
        self._ensure_tick()

    # -- job control -----------------------------------------------------------

    def control(self, job_id: str, action: str) -> Job:
        """Apply one of suspend/resume/stop/delete/reexecute."""
        job = self._job(job_id)
        if action not in ACTIONS:
            raise IllegalTransitionError(job.state.value, action)
        target = TRANSITIONS.get((job.state, action))
        if target is None:
            raise IllegalTransitionError(job.state.value, action)

        if action == "suspend":
            for node in job.assigned_nodes:
                self.fabric.mom_suspend(node)
            job._closed_per_node += self.clock.now() - job._seg_start
            self._set_state(job, JobState.SUSPENDED)
        elif action == "resume":
            for node in job.assigned_nodes:
                self.fabric.mom_resume(node)
            job._seg_start = self.clock.now()
            self._set_state(job, JobState.RUNNING)
            self._ensure_tick()
        elif action in ("stop", "delete"):
            if job.state is JobState.QUEUED:
                self.runtimes[job.queue_name].fifo.remove(job.id)
            self._release_nodes(job, EXIT_STOPPED, f"{action} requested")
            self._finish(job, target)
        elif action == "reexecute":
            self._set_state(job, JobState.QUEUED)
            runtime = self.runtimes[job.queue_name]
            runtime.fifo.append(job.id)
            job.failure_reason = None
            job.ended_at = None
            if self.auto_dispatch:
                self.dispatch(job.queue_name)
        return job

    def stop_all(self, queue_name: str) -> list[str]:
        """Shut a queue down: delete queued jobs, then stop live runs.

        Queued jobs go first; otherwise a stop frees nodes and auto-dispatch
        starts a queued job in the middle of the sweep.
        """
        affected = []
        mine = [j for j in self.jobs.values() if j.queue_name == queue_name]
        for job in mine:
            if job.state is JobState.QUEUED:
                self.control(job.id, "delete")
                affected.append(job.id)
        for job in mine:
            if job.state in (JobState.RUNNING, JobState.SUSPENDED):
                self.control(job.id, "stop")
                affected.append(job.id)
        return affected

    # -- cpu-time cap ------------------------------------------------------------

    def enforce_cput(self, queue_name: str, now: Optional[float] = None) -> list[str]:
        """Kill RUNNING jobs strictly over the queue's cpu-time cap."""
        cap = self.store_ref.store.get(queue_name).resources_max_cput
        if cap is None:
            return []
        if now is None:
            now = self.clock.now()
        killed = []
        for job in list(self.jobs.values()):
            if job.queue_name != queue_name or job.state is not JobState.RUNNING:
                continue
            if job.cpu_accumulated(now) > cap:
                self._release_nodes(job, EXIT_CPUT, "cput exceeded")
                job.failure_reason = "CPUT_EXCEEDED"
                self._finish(job, JobState.FAILED)
                killed.append(job.id)
        return killed

    def _ensure_tick(self) -> None:
        if self._tick_timer is None:
            self._tick_timer = self.clock.schedule(self.tick_interval, self._tick)

    def _tick(self) -> None:
        self._tick_timer = None
        for queue_name in list(self.runtimes):
            if queue_name in self.store_ref.store:
                self.enforce_cput(queue_name)
        if any(j.state is JobState.RUNNING for j in self.jobs.values()):
            self._ensure_tick()

    # -- completion events -------------------------------------------------------

    def _on_completion(self, event: CompletionEvent) -> None:
        job = self.jobs.get(event.job_id)
        if job is None or job.state not in (JobState.RUNNING, JobState.SUSPENDED):
            return  # not ours (benchmark traffic) or a stale run
        job.epilogs.append(event.epilog)
        job._cpu_run += event.epilog.cpu_seconds
        job._pending.discard(event.node_id)
        if event.failed:
            # A node died under the job (power cut, fault, failure flag):
            # abort the remaining nodes and fail the whole job.
            job.assigned_nodes.remove(event.node_id)
            self._release_nodes(job, EXIT_STOPPED, "aborted: sibling node lost")
            lost = event.epilog.exit_status == EXIT_POWER_LOST
            job.failure_reason = "node failure" if lost else "task failure"
            self._finish(job, JobState.FAILED)
            return
        if job._pending:
            return
        cap = None
        if job.queue_name in self.store_ref.store:
            cap = self.store_ref.store.get(job.queue_name).resources_max_cput
        job.assigned_nodes = []
        if cap is not None and job._cpu_run > cap:
            job.failure_reason = "CPUT_EXCEEDED"
            self._finish(job, JobState.FAILED)
        else:
            self._finish(job, JobState.FINISHED)

    def _release_nodes(self, job: Job, exit_status: int, reason: str) -> None:
        for node in list(job.assigned_nodes):
            epilog = self.fabric.mom_release(node, exit_status, reason)
            job.epilogs.append(epilog)
            job._cpu_run += epilog.cpu_seconds

    def _finish(self, job: Job, state: JobState) -> None:
        job.assigned_nodes = []
        job._pending = set()
        job.ended_at = self.clock.now()
        self._set_state(job, state)
        if self.auto_dispatch and job.queue_name in self.store_ref.store:
            self.dispatch(job.queue_name)

    def _set_state(self, job: Job, state: JobState) -> None:
        job.state = state
        job.history.append((self.clock.now(), state))

    # -- queries -------------------------------------------------------------------

    def _job(self, job_id: str) -> Job:
        try:
            return self.jobs[job_id]
        except KeyError:
            raise UnknownJobError(f"no job named {job_id!r}") from None

    def get(self, job_id: str) -> Job:
        return self._job(job_id)

    def fetch_logs(self, job_id: str) -> tuple[list[EpilogRecord], list[tuple[float, JobState]]]:
        """Every epilog record of every run, plus the transition history."""
        job = self._job(job_id)
        return list(job.epilogs), list(job.history)

    def jobs_of_queue(self, queue_name: str) -> list[Job]:
        return [j for j in self.jobs.values() if j.queue_name == queue_name]

    def live_jobs(self, queue_name: str) -> list[Job]:
        live = (JobState.QUEUED, JobState.RUNNING, JobState.SUSPENDED)
        return [j for j in self.jobs_of_queue(queue_name) if j.state in live]
