from __future__ import annotations

import pytest

from openpc.errors import (
    AccessDeniedError,
    IllegalTransitionError,
    TooManyNodesError,
    UnknownJobError,
)
from openpc.fabric import EXIT_CPUT, EXIT_STOPPED, NodeState
from openpc.scheduler import ACTIONS, TRANSITIONS, JobSpec, JobState, PayloadRef

from helpers import activate_block, build_system


def test_transition_table_is_exactly_nine_pairs():
    assert len(TRANSITIONS) == 9
    assert set(ACTIONS) == {a for _, a in TRANSITIONS}
    # terminal DELETED has no outgoing action at all
    assert not any(s is JobState.DELETED for s, _ in TRANSITIONS)


def test_spec_rejects_zero_nodes():
    with pytest.raises(ValueError):
        JobSpec(nodes_requested=0)


# -- submission ---------------------------------------------------------------


def test_submit_names_jobs_queue_dot_seq(system):
    block = activate_block(system, "user01", 2)
    first = system.scheduler.submit("user01", block.queue_name, JobSpec())
    second = system.scheduler.submit("user01", block.queue_name, JobSpec())
    assert first == f"{block.queue_name}.1"
    assert second == f"{block.queue_name}.2"


def test_submit_enforces_queue_acl(system):
    block = activate_block(system, "user01", 2)
    with pytest.raises(AccessDeniedError) as err:
        system.scheduler.submit("intruder", block.queue_name, JobSpec())
    assert "not in user ACL" in str(err.value)


def test_submit_rejects_oversized_jobs(system):
    block = activate_block(system, "user01", 2)
    with pytest.raises(TooManyNodesError):
        system.scheduler.submit("user01", block.queue_name, JobSpec(nodes_requested=3))


def test_unknown_job_lookup(system):
    with pytest.raises(UnknownJobError):
        system.scheduler.get("ghost.1")


# -- dispatch ------------------------------------------------------------------


def test_job_runs_to_completion(system):
    block = activate_block(system, "user01", 2)
    job_id = system.scheduler.submit(
        "user01",
        block.queue_name,
        JobSpec(nodes_requested=2, cpu_seconds_estimate=5.0, payload=PayloadRef("in.dat", 64)),
    )
    job = system.scheduler.get(job_id)
    assert job.state is JobState.RUNNING
    assert job.assigned_nodes == sorted(block.nodes)[:2]
    system.clock.advance(5.0)
    assert job.state is JobState.FINISHED
    assert job.assigned_nodes == []
    assert len(job.epilogs) == 2
    assert all(e.exit_status == 0 for e in job.epilogs)


def test_dispatch_picks_lowest_numbered_idle_nodes(system):
    block = activate_block(system, "user01", 4)
    job_id = system.scheduler.submit("user01", block.queue_name, JobSpec(cpu_seconds_estimate=9.0))
    assert system.scheduler.get(job_id).assigned_nodes == [sorted(block.nodes)[0]]
    second = system.scheduler.submit("user01", block.queue_name, JobSpec(cpu_seconds_estimate=9.0))
    assert system.scheduler.get(second).assigned_nodes == [sorted(block.nodes)[1]]


def test_fifo_head_of_line_blocks(system):
    block = activate_block(system, "user01", 2)
    # wide job takes both nodes; next wide job blocks; small job behind it must wait
    a = system.scheduler.submit(
        "user01", block.queue_name, JobSpec(nodes_requested=2, cpu_seconds_estimate=4.0)
    )
    b = system.scheduler.submit(
        "user01", block.queue_name, JobSpec(nodes_requested=2, cpu_seconds_estimate=4.0)
    )
    c = system.scheduler.submit("user01", block.queue_name, JobSpec(cpu_seconds_estimate=1.0))
    assert system.scheduler.get(a).state is JobState.RUNNING
    assert system.scheduler.get(b).state is JobState.QUEUED
    assert system.scheduler.get(c).state is JobState.QUEUED
    system.clock.advance(4.0)
    # no backfill: b went first even though c is smaller
    assert system.scheduler.get(b).state is JobState.RUNNING
    assert system.scheduler.get(c).state is JobState.QUEUED
    system.clock.advance(4.0)
    assert system.scheduler.get(c).state is JobState.RUNNING


def test_queued_jobs_start_when_nodes_free_up(system):
    block = activate_block(system, "user01", 1)
    a = system.scheduler.submit("user01", block.queue_name, JobSpec(cpu_seconds_estimate=2.0))
    b = system.scheduler.submit("user01", block.queue_name, JobSpec(cpu_seconds_estimate=2.0))
    system.clock.advance(2.0)
    assert system.scheduler.get(a).state is JobState.FINISHED
    assert system.scheduler.get(b).state is JobState.RUNNING
    assert system.scheduler.get(b).started_at == pytest.approx(system.clock.now())


# -- user actions ---------------------------------------------------------------


def test_suspend_freezes_cpu_then_resume_completes(system):
    block = activate_block(system, "user01", 1)
    job_id = system.scheduler.submit(
        "user01", block.queue_name, JobSpec(cpu_seconds_estimate=10.0)
    )
    job = system.scheduler.get(job_id)
    system.clock.advance(3.0)
    system.scheduler.control(job_id, "suspend")
    assert job.state is JobState.SUSPENDED
    frozen = job.cpu_accumulated(system.clock.now())
    assert frozen == pytest.approx(3.0)
    system.clock.advance(100.0)
    assert job.cpu_accumulated(system.clock.now()) == pytest.approx(frozen)
    assert job.state is JobState.SUSPENDED
    system.scheduler.control(job_id, "resume")
    system.clock.advance(7.0)
    assert job.state is JobState.FINISHED
    assert job.epilogs[-1].cpu_seconds == pytest.approx(10.0)


def test_stop_releases_nodes_with_exit_143(system):
    block = activate_block(system, "user01", 2)
    job_id = system.scheduler.submit(
        "user01", block.queue_name, JobSpec(nodes_requested=2, cpu_seconds_estimate=50.0)
    )
    system.clock.advance(2.0)
    job = system.scheduler.control(job_id, "stop")
    assert job.state is JobState.STOPPED
    assert job.assigned_nodes == []
    assert all(e.exit_status == EXIT_STOPPED for e in job.epilogs)
    assert all(system.fabric.state_of(n) is NodeState.UP for n in block.nodes)


def test_delete_queued_job_skips_dispatch(system):
    block = activate_block(system, "user01", 1)
    a = system.scheduler.submit("user01", block.queue_name, JobSpec(cpu_seconds_estimate=3.0))
    b = system.scheduler.submit("user01", block.queue_name, JobSpec(cpu_seconds_estimate=3.0))
    c = system.scheduler.submit("user01", block.queue_name, JobSpec(cpu_seconds_estimate=3.0))
    system.scheduler.control(b, "delete")
    assert system.scheduler.get(b).state is JobState.DELETED
    system.clock.advance(3.0)
    # c runs right after a; b never dispatched
    assert system.scheduler.get(c).state is JobState.RUNNING
    assert system.scheduler.get(b).epilogs == []
    assert system.scheduler.get(a).state is JobState.FINISHED


def test_delete_suspended_job(system):
    block = activate_block(system, "user01", 1)
    job_id = system.scheduler.submit(
        "user01", block.queue_name, JobSpec(cpu_seconds_estimate=10.0)
    )
    system.clock.advance(1.0)
    system.scheduler.control(job_id, "suspend")
    job = system.scheduler.control(job_id, "delete")
    assert job.state is JobState.DELETED
    assert job.epilogs[-1].exit_status == EXIT_STOPPED


def test_reexecute_requeues_same_id(system):
    block = activate_block(system, "user01", 1)
    job_id = system.scheduler.submit(
        "user01", block.queue_name, JobSpec(cpu_seconds_estimate=4.0)
    )
    system.clock.advance(1.0)
    system.scheduler.control(job_id, "stop")
    job = system.scheduler.control(job_id, "reexecute")
    assert job.state is JobState.RUNNING  # auto-dispatch onto the free node
    assert job.run_count == 2
    assert job.ended_at is None
    system.clock.advance(4.0)
    assert job.state is JobState.FINISHED
    # second run pays the full estimate again
    assert job.epilogs[-1].cpu_seconds == pytest.approx(4.0)


def test_reexecute_finished_job(system):
    block = activate_block(system, "user01", 1)
    job_id = system.scheduler.submit(
        "user01", block.queue_name, JobSpec(cpu_seconds_estimate=1.0)
    )
    system.clock.advance(1.0)
    assert system.scheduler.get(job_id).state is JobState.FINISHED
    system.scheduler.control(job_id, "reexecute")
    system.clock.advance(1.0)
    assert system.scheduler.get(job_id).state is JobState.FINISHED
    assert system.scheduler.get(job_id).run_count == 2


@pytest.mark.parametrize(
    "action,state",
    [
        ("resume", JobState.RUNNING),
        ("suspend", JobState.QUEUED),
        ("reexecute", JobState.RUNNING),
        ("delete", JobState.RUNNING),
    ],
)
def test_illegal_actions_raise(system, action, state):
    block = activate_block(system, "user01", 2)
    # build a job in the target state
    if state is JobState.QUEUED:
        blocker = system.scheduler.submit(
            "user01", block.queue_name, JobSpec(nodes_requested=2, cpu_seconds_estimate=60.0)
        )
        job_id = system.scheduler.submit("user01", block.queue_name, JobSpec())
    else:
        job_id = system.scheduler.submit(
            "user01", block.queue_name, JobSpec(cpu_seconds_estimate=60.0)
        )
    assert system.scheduler.get(job_id).state is state
    with pytest.raises(IllegalTransitionError):
        system.scheduler.control(job_id, action)


def test_unknown_action_rejected(system):
    block = activate_block(system, "user01", 1)
    job_id = system.scheduler.submit("user01", block.queue_name, JobSpec())
    with pytest.raises(IllegalTransitionError):
        system.scheduler.control(job_id, "defenestrate")


# -- cpu-time enforcement ----------------------------------------------------------


def test_cput_kill_is_strictly_greater_than(system):
    # cap low enough to trip: 4 cpu-seconds
    sys2 = build_system(cput_seconds=4)
    block = activate_block(sys2, "user01", 1)
    job_id = sys2.scheduler.submit(
        "user01", block.queue_name, JobSpec(cpu_seconds_estimate=100.0)
    )
    job = sys2.scheduler.get(job_id)
    sys2.clock.advance(4.0)  # exactly at the cap: still alive
    assert job.state is JobState.RUNNING
    assert sys2.scheduler.enforce_cput(block.queue_name) == []
    sys2.clock.advance(1.0)  # tick at 5s fires enforce_cput
    assert job.state is JobState.FAILED
    assert job.failure_reason == "CPUT_EXCEEDED"
    assert job.epilogs[-1].exit_status == EXIT_CPUT
    assert "cput exceeded" in job.epilogs[-1].detail


def test_cput_counts_all_nodes(system):
    # 2 nodes x 3s each = 6 node-seconds > 5 cap, even though wall time is 3s
    sys2 = build_system(cput_seconds=5)
    block = activate_block(sys2, "user01", 2)
    job_id = sys2.scheduler.submit(
        "user01", block.queue_name, JobSpec(nodes_requested=2, cpu_seconds_estimate=100.0)
    )
    job = sys2.scheduler.get(job_id)
    sys2.clock.advance(3.0)
    assert job.state is JobState.FAILED
    assert job.failure_reason == "CPUT_EXCEEDED"


def test_exact_cap_finish_is_not_killed(system):
    # run total == cap exactly: completes FINISHED, never killed
    sys2 = build_system(cput_seconds=6)
    block = activate_block(sys2, "user01", 1)
    job_id = sys2.scheduler.submit(
        "user01", block.queue_name, JobSpec(cpu_seconds_estimate=6.0)
    )
    sys2.clock.advance(6.0)
    assert sys2.scheduler.get(job_id).state is JobState.FINISHED


def test_suspended_job_does_not_accrue_toward_cap():
    sys2 = build_system(cput_seconds=4)
    block = activate_block(sys2, "user01", 1)
    job_id = sys2.scheduler.submit(
        "user01", block.queue_name, JobSpec(cpu_seconds_estimate=3.5)
    )
    sys2.clock.advance(2.0)
    sys2.scheduler.control(job_id, "suspend")
    sys2.clock.advance(50.0)
    sys2.scheduler.control(job_id, "resume")
    sys2.clock.advance(1.5)
    assert sys2.scheduler.get(job_id).state is JobState.FINISHED


# -- failures --------------------------------------------------------------------


def test_fail_flag_marks_task_failure(system):
    block = activate_block(system, "user01", 1)
    job_id = system.scheduler.submit(
        "user01", block.queue_name, JobSpec(cpu_seconds_estimate=2.0, fail=True)
    )
    system.clock.advance(2.0)
    job = system.scheduler.get(job_id)
    assert job.state is JobState.FAILED
    assert job.failure_reason == "task failure"


def test_node_loss_aborts_siblings_fail_fast(system):
    block = activate_block(system, "user01", 3)
    job_id = system.scheduler.submit(
        "user01", block.queue_name, JobSpec(nodes_requested=3, cpu_seconds_estimate=100.0)
    )
    job = system.scheduler.get(job_id)
    system.clock.advance(5.0)
    victim = job.assigned_nodes[1]
    survivors = [n for n in job.assigned_nodes if n != victim]
    system.fabric.fault(victim)
    assert job.state is JobState.FAILED
    assert job.failure_reason == "node failure"
    # siblings released instantly, back to UP
    assert all(system.fabric.state_of(n) is NodeState.UP for n in survivors)
    statuses = sorted(e.exit_status for e in job.epilogs)
    assert statuses == [137, 143, 143]
    reasons = [d for e in job.epilogs for d in e.detail if d.startswith("aborted")]
    assert reasons == ["aborted: sibling node lost", "aborted: sibling node lost"]


def test_failed_job_frees_nodes_for_next(system):
    block = activate_block(system, "user01", 2)
    a = system.scheduler.submit(
        "user01", block.queue_name, JobSpec(nodes_requested=2, cpu_seconds_estimate=100.0)
    )
    b = system.scheduler.submit("user01", block.queue_name, JobSpec(cpu_seconds_estimate=1.0))
    job_a = system.scheduler.get(a)
    system.clock.advance(1.0)
    system.fabric.fault(job_a.assigned_nodes[0])
    # b dispatches onto the surviving node
    assert system.scheduler.get(b).state is JobState.RUNNING


def test_history_records_every_state(system):
    block = activate_block(system, "user01", 1)
    job_id = system.scheduler.submit(
        "user01", block.queue_name, JobSpec(cpu_seconds_estimate=5.0)
    )
    system.clock.advance(1.0)
    system.scheduler.control(job_id, "suspend")
    system.scheduler.control(job_id, "resume")
    system.clock.advance(4.0)
    states = [s for _, s in system.scheduler.get(job_id).history]
    assert states == [
        JobState.QUEUED,
        JobState.RUNNING,
        JobState.SUSPENDED,
        JobState.RUNNING,
        JobState.FINISHED,
    ]


def test_fetch_logs_returns_epilogs_and_history(system):
    block = activate_block(system, "user01", 1)
    job_id = system.scheduler.submit(
        "user01", block.queue_name, JobSpec(cpu_seconds_estimate=1.0)
    )
    system.clock.advance(1.0)
    epilogs, history = system.scheduler.fetch_logs(job_id)
    assert len(epilogs) == 1
    assert history[-1][1] is JobState.FINISHED


def test_stop_all_sweeps_queue(system):
    block = activate_block(system, "user01", 2)
    running = system.scheduler.submit(
        "user01", block.queue_name, JobSpec(cpu_seconds_estimate=50.0)
    )
    suspended = system.scheduler.submit(
        "user01", block.queue_name, JobSpec(cpu_seconds_estimate=50.0)
    )
    system.clock.advance(1.0)
    system.scheduler.control(suspended, "suspend")
    queued = system.scheduler.submit(
        "user01", block.queue_name, JobSpec(nodes_requested=2, cpu_seconds_estimate=50.0)
    )
    system.scheduler.stop_all(block.queue_name)
    assert system.scheduler.get(running).state is JobState.STOPPED
    assert system.scheduler.get(suspended).state is JobState.STOPPED
    assert system.scheduler.get(queued).state is JobState.DELETED
