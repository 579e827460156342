"""
Job control on an owned block
=============================

FIFO dispatch, suspend/resume, the per-queue cpu-time ceiling, and what
happens when a node dies under a parallel job.  The epilog records at the
end are the ground truth a user would download after a run.
"""

from openpc.blocks import BlockManager, Period
from openpc.clock import VirtualClock
from openpc.fabric import NodeFabric, make_node_ids
from openpc.qmgr import QueueStore, StoreRef
from openpc.scheduler import JobSpec, Scheduler

clock = VirtualClock()
store_ref = StoreRef(QueueStore())
nodes = make_node_ids(4)
fabric = NodeFabric(nodes, clock, boot_delay=0.5)
scheduler = Scheduler(store_ref, fabric, clock)
# a 30 second cpu ceiling so the enforcement is easy to watch
blocks = BlockManager(nodes, store_ref, fabric, scheduler, clock, cput_seconds=30)

request = blocks.request_block("user01", 4, Period(0.0, 1e9))
block = blocks.review(request.id, "approve")
blocks.activate(block.id)
queue = block.queue_name

# -- strict FIFO: a wide job at the head blocks everything behind it ------------

wide = scheduler.submit("user01", queue, JobSpec(nodes_requested=4, cpu_seconds_estimate=5.0))
narrow = scheduler.submit("user01", queue, JobSpec(nodes_requested=1, cpu_seconds_estimate=2.0))
print(f"{wide}: {scheduler.get(wide).state.value}")
print(f"{narrow}: {scheduler.get(narrow).state.value}  (waits; no backfill past the head)")

clock.advance(6.0)
print(f"after 6s: {wide} {scheduler.get(wide).state.value},",
      f"{narrow} {scheduler.get(narrow).state.value}")
clock.advance(3.0)

# -- suspension freezes the cpu meter -------------------------------------------

job_id = scheduler.submit("user01", queue, JobSpec(cpu_seconds_estimate=10.0))
clock.advance(4.0)
scheduler.control(job_id, "suspend")
before = scheduler.get(job_id).cpu_accumulated(clock.now())
clock.advance(60.0)  # a long lunch
after = scheduler.get(job_id).cpu_accumulated(clock.now())
print(f"\n{job_id} suspended at {before:.1f}s cpu; an hour later still {after:.1f}s")
scheduler.control(job_id, "resume")
clock.advance(7.0)
print(f"{job_id} resumed and {scheduler.get(job_id).state.value}")

# -- the cpu ceiling is enforced, not advisory -----------------------------------

runaway = scheduler.submit("user01", queue, JobSpec(cpu_seconds_estimate=1e9))
clock.advance(31.0)
job = scheduler.get(runaway)
print(f"\n{runaway}: {job.state.value} ({job.failure_reason});",
      f"exit status {job.epilogs[-1].exit_status}")

# -- a node fault aborts every sibling of a parallel job -------------------------

parallel = scheduler.submit("user01", queue, JobSpec(nodes_requested=3, cpu_seconds_estimate=100.0))
clock.advance(2.0)
victim = scheduler.get(parallel).assigned_nodes[0]
fabric.fault(victim)
job = scheduler.get(parallel)
print(f"\n{parallel} after {victim} faulted: {job.state.value} ({job.failure_reason})")
for record in job.epilogs:
    print(f"  {record.node_id}: exit {record.exit_status:3d}  {' '.join(record.detail)}")
