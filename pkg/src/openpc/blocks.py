"""Block lifecycle: request, review with availability-constrained allocation,
activation (power-on plus queue generation), monitoring, expiry, deactivation.

A block is the unit of tenancy: a user owns its nodes outright for the
approved period, and the queue generated at activation is what confines the
owner's jobs to exactly those nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from . import qmgr
from .clock import Timer, VirtualClock
from .errors import (
    AlreadyReviewedError,
    InvalidArgumentError,
    InvalidPeriodError,
    NoFreeNodesError,
    NodeBootTimeoutError,
    NodesUnavailableError,
    UnknownBlockError,
    UnknownRequestError,
    UnknownUserError,
    WrongStateError,
)
from .fabric import NodeFabric, NodeState
from .scheduler import Scheduler

ENVIRONMENT_PROFILES = ("openmpi", "lammpi", "mpich2")

DEFAULT_CPUT_SECONDS = 24 * 3600
DEFAULT_BOOT_TIMEOUT = 10.0


class RequestState(Enum):
    PENDING = "PENDING"
    APPROVED = "APPROVED"
    REJECTED = "REJECTED"


class BlockState(Enum):
    APPROVED = "APPROVED"
    ACTIVATING = "ACTIVATING"
    ACTIVE = "ACTIVE"
    EXPIRED = "EXPIRED"
    DEACTIVATED = "DEACTIVATED"


@dataclass(frozen=True)
class Period:
    start: float
    end: float

    def __post_init__(self):
        if not self.start < self.end:
            raise InvalidPeriodError(f"period start {self.start} must precede end {self.end}")


@dataclass
class BlockRequest:
    id: str
    user: str
    requested_nodes: int
    period: Period
    project_description: str
    state: RequestState = RequestState.PENDING
    reason: Optional[str] = None
    block_id: Optional[str] = None
    created_at: float = 0.0


@dataclass
class Block:
    id: str
    owner: str
    nodes: tuple[str, ...]  # fixed from approval to the terminal state
    queue_name: str
    period: Period
    environment_profile: str = "openmpi"
    state: BlockState = BlockState.APPROVED
    activated_at: Optional[float] = None
    ended_at: Optional[float] = None
    _expiry: Optional[Timer] = field(default=None, repr=False)


@dataclass(frozen=True)
class ActivationReport:
    block_id: str
    queue_name: str
    nodes: tuple[str, ...]
    boot_seconds: float
    script: str


@dataclass(frozen=True)
class BlockSnapshot:
    block_id: str
    state: BlockState
    owner: str
    queue_name: str
    environment_profile: str
    period: Period
    node_states: dict[str, NodeState]
    queue: Optional[qmgr.QueueConfig]
    active_jobs: tuple[str, ...]


class NodePool:
    """FREE/RESERVED bookkeeping; one reservation per node, ever."""

    def __init__(self, node_ids):
        self._owner: dict[str, Optional[str]] = {n: None for n in node_ids}

    def free_nodes(self) -> list[str]:
        return sorted(n for n, b in self._owner.items() if b is None)

    def reserved_by(self, node_id: str) -> Optional[str]:
        return self._owner[node_id]

    def reserve(self, node_ids, block_id: str) -> None:
        for n in node_ids:
            if self._owner.get(n, "") is not None:
                raise NodesUnavailableError(f"{n} is not a free pool node")
        for n in node_ids:
            self._owner[n] = block_id

    def release(self, node_ids) -> None:
        for n in node_ids:
            self._owner[n] = None

    def counts(self) -> tuple[int, int]:
        free = sum(1 for b in self._owner.values() if b is None)
        return free, len(self._owner) - free


class BlockManager:
    def __init__(
        self,
        node_ids,
        store_ref: qmgr.StoreRef,
        fabric: NodeFabric,
        scheduler: Scheduler,
        clock: VirtualClock,
        is_registered: Optional[Callable[[str], bool]] = None,
        cput_seconds: int = DEFAULT_CPUT_SECONDS,
        boot_timeout: float = DEFAULT_BOOT_TIMEOUT,
    ):
        self.pool = NodePool(node_ids)
        self.store_ref = store_ref
        self.fabric = fabric
        self.scheduler = scheduler
        self.clock = clock
        self.is_registered = is_registered
        self.cput_seconds = cput_seconds
        self.boot_timeout = boot_timeout
        self.requests: dict[str, BlockRequest] = {}
        self.blocks: dict[str, Block] = {}
        self._request_seq = 1
        self._block_seq = 1

    # -- request and review -------------------------------------------------

    def request_block(
        self, user: str, n: int, period: Period, description: str = ""
    ) -> BlockRequest:
        if self.is_registered is not None and not self.is_registered(user):
            raise UnknownUserError(f"{user!r} is not a registered user")
        if n < 1:
            raise InvalidArgumentError("node count must be >= 1")
        request = BlockRequest(
            id=f"req{self._request_seq:02d}",
            user=user,
            requested_nodes=n,
            period=period,
            project_description=description,
            created_at=self.clock.now(),
        )
        self._request_seq += 1
        self.requests[request.id] = request
        return request

    def list_requests(self, state: Optional[RequestState] = None) -> list[BlockRequest]:
        found = list(self.requests.values())
        if state is not None:
            found = [r for r in found if r.state == state]
        return found

    def review(
        self,
        request_id: str,
        decision: str,
        allocated: Optional[list[str]] = None,
        reason: Optional[str] = None,
    ):
        """Approve (allocating nodes, min(requested, free) unless an explicit
        FREE list is given) or reject.  Returns the Block on approve, the
        updated request on reject."""
        request = self.get_request(request_id)
        if request.state is not RequestState.PENDING:
            raise AlreadyReviewedError(f"{request_id} already {request.state.value}")
        if decision == "reject":
            request.state = RequestState.REJECTED
            request.reason = reason or "rejected"
            return request
        if decision != "approve":
            raise InvalidArgumentError(f"decision must be approve or reject, got {decision!r}")

        if allocated is not None:
            nodes = list(allocated)
            if not nodes:
                raise InvalidArgumentError("explicit allocation must name at least one node")
            self.pool.reserve(nodes, self._next_block_id())
        else:
            free = self.pool.free_nodes()
            if not free:
                raise NoFreeNodesError("pool has no free nodes")
            nodes = free[: min(request.requested_nodes, len(free))]
            self.pool.reserve(nodes, self._next_block_id())

        block_id = self._claim_block_id()
        block = Block(
            id=block_id,
            owner=request.user,
            nodes=tuple(nodes),
            queue_name=block_id,
            period=request.period,
        )
        self.blocks[block_id] = block
        request.state = RequestState.APPROVED
        request.block_id = block_id
        return block

    def _next_block_id(self) -> str:
        return f"block{self._block_seq:02d}"

    def _claim_block_id(self) -> str:
        block_id = self._next_block_id()
        self._block_seq += 1
        return block_id

    # -- activation ----------------------------------------------------------

    def activate(self, block_id: str) -> ActivationReport:
        """Power the block's nodes on, wait for them all to reach UP, then
        apply the block's generated queue directives.

        Atomic: on boot timeout every block node is powered back off, no
        queue change is applied, and the block returns to APPROVED.
        """
        block = self.get_block(block_id)
        if block.state is not BlockState.APPROVED:
            raise WrongStateError(f"{block_id} is {block.state.value}, not APPROVED")
        now = self.clock.now()
        if now >= block.period.end:
            raise WrongStateError(f"{block_id} period ended at {block.period.end}")

        block.state = BlockState.ACTIVATING
        started = self.clock.now()
        deadline = started + self.boot_timeout
        for node in block.nodes:
            self.fabric.power_on(node)

        while not self._all_up(block):
            upcoming = self.clock.next_event_time()
            if upcoming is None or upcoming > deadline:
                self.clock.run_until(deadline)
                laggard = next(
                    n for n in block.nodes if self.fabric.state_of(n) is not NodeState.UP
                )
                self._rollback(block)
                raise NodeBootTimeoutError(laggard)
            self.clock.run_until(upcoming)

        script = qmgr.directives_for_block(
            block.queue_name, block.nodes, block.owner, self.cput_seconds
        )
        self.store_ref.update(qmgr.apply_script(self.store_ref.store, script))
        block.state = BlockState.ACTIVE
        block.activated_at = self.clock.now()
        delay = block.period.end - self.clock.now()
        block._expiry = self.clock.schedule(max(delay, 0.0), lambda b=block: self._expire(b))
        return ActivationReport(
            block_id=block.id,
            queue_name=block.queue_name,
            nodes=block.nodes,
            boot_seconds=self.clock.now() - started,
            script=script,
        )

    def _all_up(self, block: Block) -> bool:
        return all(self.fabric.state_of(n) is NodeState.UP for n in block.nodes)

    def _rollback(self, block: Block) -> None:
        for node in block.nodes:
            self.fabric.power_off(node)
        block.state = BlockState.APPROVED

    # -- teardown --------------------------------------------------------------

    def deactivate(self, block_id: str, cause: str = "admin") -> Block:
        """Disable the queue, stop the jobs, power off and free the nodes."""
        block = self.get_block(block_id)
        if block.state is not BlockState.ACTIVE:
            raise WrongStateError(f"{block_id} is {block.state.value}, not ACTIVE")
        if block._expiry is not None:
            block._expiry.cancel()
            block._expiry = None
        store = self.store_ref.store
        for directive in qmgr.parse_script(
            f"set queue {block.queue_name} enabled = False\n"
            f"set queue {block.queue_name} started = False\n"
        ):
            store = qmgr.apply(store, directive)
        self.store_ref.update(store)
        self.scheduler.stop_all(block.queue_name)
        for node in block.nodes:
            self.fabric.power_off(node)
        self.pool.release(block.nodes)
        block.state = BlockState.EXPIRED if cause == "expiry" else BlockState.DEACTIVATED
        block.ended_at = self.clock.now()
        return block

    def _expire(self, block: Block) -> None:
        if block.state is BlockState.ACTIVE:
            self.deactivate(block.id, cause="expiry")

    # -- monitoring ---------------------------------------------------------------

    def block_status(self, block_id: str) -> BlockSnapshot:
        block = self.get_block(block_id)
        store = self.store_ref.store
        queue = store.queues.get(block.queue_name)
        live = (
            self.scheduler.live_jobs(block.queue_name)
            if block.state in (BlockState.ACTIVE, BlockState.ACTIVATING)
            else []
        )
        return BlockSnapshot(
            block_id=block.id,
            state=block.state,
            owner=block.owner,
            queue_name=block.queue_name,
            environment_profile=block.environment_profile,
            period=block.period,
            node_states={n: self.fabric.state_of(n) for n in block.nodes},
            queue=queue.copy() if queue else None,
            active_jobs=tuple(j.id for j in live),
        )

    def set_environment(self, block_id: str, profile: str) -> Block:
        block = self.get_block(block_id)
        if profile not in ENVIRONMENT_PROFILES:
            raise InvalidArgumentError(
                f"unknown environment {profile!r}, pick one of {', '.join(ENVIRONMENT_PROFILES)}"
            )
        if block.state in (BlockState.EXPIRED, BlockState.DEACTIVATED):
            raise WrongStateError(f"{block_id} is {block.state.value}")
        block.environment_profile = profile
        return block

    # -- lookups --------------------------------------------------------------------

    def get_request(self, request_id: str) -> BlockRequest:
        try:
            return self.requests[request_id]
        except KeyError:
            raise UnknownRequestError(f"no request named {request_id!r}") from None

    def get_block(self, block_id: str) -> Block:
        try:
            return self.blocks[block_id]
        except KeyError:
            raise UnknownBlockError(f"no block named {block_id!r}") from None

    def blocks_of_user(self, user: str) -> list[Block]:
        return [b for b in self.blocks.values() if b.owner == user]

    def block_for_queue(self, queue_name: str) -> Optional[Block]:
        for block in self.blocks.values():
            if block.queue_name == queue_name:
                return block
        return None
