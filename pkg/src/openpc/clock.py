"""Deterministic simulation clock.

All time-dependent behavior (node boots, job completions, heartbeats, block
expiry) is driven by timers on a single event queue.  Tests advance the clock
explicitly; the live service advances it to track wall time.  Events due at
the same instant fire in scheduling order, so a run is reproducible.
"""

from __future__ import annotations

import heapq
import itertools
import time
from typing import Callable, Optional


class Timer:
    """Handle for a scheduled callback; cancellation leaves a dead heap entry."""

    __slots__ = ("at", "seq", "action", "cancelled")

    def __init__(self, at: float, seq: int, action: Callable[[], None]):
        self.at = at
        self.seq = seq
        self.action = action
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True

    def __lt__(self, other: "Timer") -> bool:
        return (self.at, self.seq) < (other.at, other.seq)


class VirtualClock:
    """Event-driven clock advanced under test or service control.

    Callbacks may schedule further timers; anything that falls due before the
    advance target fires in the same call, in (time, sequence) order.
    """

    def __init__(self, start: float = 0.0):
        self._now = start
        self._heap: list[Timer] = []
        self._seq = itertools.count()

    def now(self) -> float:
        return self._now

    def schedule(self, delay: float, action: Callable[[], None]) -> Timer:
        if delay < 0:
            raise ValueError("negative delay")
        timer = Timer(self._now + delay, next(self._seq), action)
        heapq.heappush(self._heap, timer)
        return timer

    def next_event_time(self) -> Optional[float]:
        """Time of the earliest live timer, or None when idle."""
        while self._heap and self._heap[0].cancelled:
            heapq.heappop(self._heap)
        return self._heap[0].at if self._heap else None

    def run_until(self, target: float) -> None:
        """Fire every timer due at or before `target`, then set now=target."""
        if target < self._now:
            raise ValueError("clock cannot run backwards")
        while self._heap:
            head = self._heap[0]
            if head.cancelled:
                heapq.heappop(self._heap)
                continue
            if head.at > target:
                break
            heapq.heappop(self._heap)
            self._now = head.at
            head.action()
        self._now = target

    def advance(self, dt: float) -> None:
        self.run_until(self._now + dt)


class WallAnchoredClock(VirtualClock):
    """Virtual clock that tracks wall time when sync() is called.

    The live service syncs at the start of every request, so timers fire as
    real time passes without any background thread.  Explicit advances (for
    example a block activation waiting out node boots) may move the clock
    ahead of the wall; sync() then becomes a no-op until the wall catches up.
    `scale` compresses or stretches wall seconds into simulated seconds.
    """

    def __init__(self, scale: float = 1.0):
        super().__init__()
        if scale <= 0:
            raise ValueError("scale must be positive")
        self._scale = scale
        self._anchor = time.monotonic()

    def sync(self) -> float:
        target = (time.monotonic() - self._anchor) * self._scale
        if target > self.now():
            self.run_until(target)
        return self.now()

    def rebase(self) -> None:
        # After replaying a recorded history the virtual now is far ahead of a
        # fresh anchor; re-anchor so wall time continues from here.
        self._anchor = time.monotonic() - self.now() / self._scale
