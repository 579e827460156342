"""Shared builders for the test suite: a fully wired in-memory system."""

from __future__ import annotations

from dataclasses import dataclass

from openpc.blocks import BlockManager
from openpc.clock import VirtualClock
from openpc.fabric import NodeFabric, make_node_ids
from openpc.qmgr import QueueStore, StoreRef
from openpc.router import CommandRouter, MasterChannel, MasterExecutor
from openpc.scheduler import Scheduler
from openpc.workspace import WorkspaceManager

SECRET = b"shared-test-secret"


@dataclass
class System:
    clock: VirtualClock
    store_ref: StoreRef
    fabric: NodeFabric
    scheduler: Scheduler
    blocks: BlockManager
    workspaces: WorkspaceManager
    channel: MasterChannel
    router: CommandRouter


def build_system(
    pool: int = 8,
    boot_delay: float = 2.0,
    boot_timeout: float = 10.0,
    cput_seconds: int = 24 * 3600,
    registered=None,
) -> System:
    clock = VirtualClock()
    store_ref = StoreRef(QueueStore())
    node_ids = make_node_ids(pool)
    fabric = NodeFabric(node_ids, clock, boot_delay=boot_delay)
    scheduler = Scheduler(store_ref, fabric, clock)
    blocks = BlockManager(
        node_ids,
        store_ref,
        fabric,
        scheduler,
        clock,
        is_registered=(registered.__contains__ if registered is not None else None),
        cput_seconds=cput_seconds,
        boot_timeout=boot_timeout,
    )
    workspaces = WorkspaceManager()
    channel = MasterChannel(SECRET, SECRET, MasterExecutor(scheduler, workspaces))
    router = CommandRouter(blocks, fabric, channel, clock)
    return System(clock, store_ref, fabric, scheduler, blocks, workspaces, channel, router)


def activate_block(system: System, user: str, nodes: int, end: float = 1e9):
    """Request, approve, and activate one block; returns the Block."""
    from openpc.blocks import Period

    request = system.blocks.request_block(user, nodes, Period(system.clock.now(), end))
    block = system.blocks.review(request.id, "approve")
    system.blocks.activate(block.id)
    return system.blocks.get_block(block.id)
