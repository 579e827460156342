"""
The service is its event log
============================

Every mutation goes through one append-only log before it is applied, so a
restart rebuilds the exact same state by replaying the file.  This script
runs a short session, shows the log, restarts, and proves the state hash
matches bit for bit.
"""

import tempfile
from pathlib import Path

from openpc.clock import VirtualClock
from openpc.config import ServiceConfig
from openpc.service import ServiceCore, hash_password

workdir = Path(tempfile.mkdtemp(prefix="openpc-demo-"))
config = ServiceConfig(data_dir=str(workdir), pool_size=8, boot_delay=0.5)

core = ServiceCore(config, clock=VirtualClock())

# -- a short administrative session -------------------------------------------------

salt = "0f" * 8
core.execute("user_registered", {
    "username": "user01", "display_name": "User One", "approved": False,
    "role": "USER", "password_salt": salt,
    "password_hash": hash_password("secret", salt),
})
core.execute("user_approved", {"username": "user01"})
request = core.execute("block_requested", {
    "username": "user01", "nodes": 3, "start": 0.0, "end": 86400.0, "description": "demo",
})
block = core.execute("request_reviewed", {"request_id": request.id, "decision": "approve"})
core.execute("block_activated", {"block_id": block.id})
core.execute("job_submitted", {
    "username": "user01", "queue": block.queue_name,
    "nodes_requested": 3, "cpu_seconds_estimate": 2.0,
})
core.clock.advance(5.0)

# a command that fails is still an event; replay will fail it identically
try:
    core.execute("block_activated", {"block_id": block.id})
except Exception as refused:
    print(f"double activation refused as expected: {refused}")

# -- the log is plain ndjson ----------------------------------------------------------

log_path = workdir / "events.ndjson"
lines = log_path.read_text().splitlines()
print(f"\n{log_path.name}: {len(lines)} events")
for line in lines[:3]:
    print(f"  {line[:100]}{'...' if len(line) > 100 else ''}")
print("  ...")

frozen = core.clock.now()
live_hash = core.state_hash()
print(f"\nlive state hash:     {live_hash}")
core.close()

# -- a cold restart replays to the identical state --------------------------------------

reborn = ServiceCore(config, clock=VirtualClock(), replay_until=frozen)
print(f"replayed state hash: {reborn.state_hash()}")
print(f"identical: {reborn.state_hash() == live_hash}")

job = reborn.scheduler.get(f"{block.id}.1")
print(f"the job finished during replay exactly as it did live: {job.state.value}")
reborn.close()
