"""
The command gateway, end to end
===============================

Every command a user types at the portal crosses one chokepoint: classify
the verb, authorize it against the user's block, and either forward it over
the authenticated master channel or discard it.  Both outcomes are audited.
"""

from openpc.blocks import BlockManager, Period
from openpc.clock import VirtualClock
from openpc.fabric import NodeFabric, make_node_ids
from openpc.qmgr import QueueStore, StoreRef
from openpc.router import CommandRouter, MasterChannel, MasterExecutor
from openpc.scheduler import Scheduler
from openpc.workspace import WorkspaceManager

clock = VirtualClock()
store_ref = StoreRef(QueueStore())
nodes = make_node_ids(8)
fabric = NodeFabric(nodes, clock, boot_delay=0.5)
scheduler = Scheduler(store_ref, fabric, clock)
blocks = BlockManager(nodes, store_ref, fabric, scheduler, clock)
workspaces = WorkspaceManager()

secret = b"demo-shared-secret"
channel = MasterChannel(secret, secret, MasterExecutor(scheduler, workspaces))
router = CommandRouter(blocks, fabric, channel, clock)

# user01 owns block01 (node01..node03); node04 belongs to nobody
request = blocks.request_block("user01", 3, Period(0.0, 1e9))
block = blocks.review(request.id, "approve")
blocks.activate(block.id)

# -- a day of traffic, good and bad ----------------------------------------------

traffic = [
    ("user01", block.id, "qsub -q block01 run.sh"),
    ("user01", block.id, "qstat"),
    ("user01", block.id, "upload in.dat aGVsbG8="),
    ("user01", block.id, "power off node02"),
    ("user01", block.id, "power off node04"),      # node outside the block
    ("user02", block.id, "qstat"),                 # not the owner
    ("user01", "block09", "qstat"),                # no such block
    ("user01", block.id, "rm /etc/passwd"),        # rm is a known verb, but the
                                                   # workspace refuses to escape
    ("user01", block.id, "sudo reboot"),           # no such verb here
]
for user, target, raw in traffic:
    outcome = router.submit(user, target, raw)
    verdict = outcome.verdict
    note = outcome.response if verdict == "ALLOWED" else outcome.reason
    print(f"{user:7s} {raw:24s} -> {verdict:9s} {note}")

# -- what actually crossed the wire ----------------------------------------------

print(f"\nframes delivered to the master: {len(channel.frames_delivered)}")
for frame in channel.frames_delivered:
    print(f"  {frame.rstrip()}")

# -- and the audit trail remembers everything -------------------------------------

print(f"\naudit log ({len(router.audit_log)} records):")
for record in router.audit_log:
    print(f"  {record.to_json()}")
