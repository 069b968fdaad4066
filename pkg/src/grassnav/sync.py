"""Approximate-time pairing of two timestamped message streams.

Greedy policy: whenever the closest pending (A, B) stamp pair is within the
threshold it is emitted, and in each queue the messages older than the emitted
pair's counterpart are dropped, so emission order is monotone and no message
ever appears in two pairs.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Any

from .errors import StaleStampError


@dataclass
class SyncConfig:
    threshold: float = 0.1
    queue_capacity: int = 16

    def __post_init__(self) -> None:
        if self.threshold <= 0:
            raise ValueError("threshold must be > 0")
        if self.queue_capacity < 1:
            raise ValueError("queue_capacity must be >= 1")


class Synchronizer:
    """Two-channel nearest-stamp matcher; channels are named "a" and "b"."""

    def __init__(self, config: SyncConfig | None = None) -> None:
        self.config = config or SyncConfig()
        self._queues: dict[str, deque[tuple[float, Any]]] = {
            "a": deque(),
            "b": deque(),
        }
        self._last_stamp: dict[str, float] = {}

    def pending(self, channel: str) -> int:
        return len(self._queues[channel])

    def push(
        self, channel: str, stamp: float, payload: Any = None
    ) -> list[tuple[tuple[float, Any], tuple[float, Any]]]:
        """Add a message; returns the list of (msg_a, msg_b) pairs emitted."""
        if channel not in self._queues:
            raise ValueError(f"unknown channel {channel!r}")
        last = self._last_stamp.get(channel)
        if last is not None and stamp < last:
            raise StaleStampError(
                f"channel {channel}: stamp {stamp} older than {last}"
            )
        self._last_stamp[channel] = stamp
        queue = self._queues[channel]
        queue.append((stamp, payload))
        if len(queue) > self.config.queue_capacity:
            queue.popleft()
        return self._drain()

    def flush(self) -> None:
        """Drop all pending messages and forget channel history."""
        for queue in self._queues.values():
            queue.clear()
        self._last_stamp.clear()

    def _drain(self) -> list[tuple[tuple[float, Any], tuple[float, Any]]]:
        pairs = []
        qa, qb = self._queues["a"], self._queues["b"]
        while qa and qb:
            best = None
            for i, (sa, _) in enumerate(qa):
                for j, (sb, _) in enumerate(qb):
                    delta = abs(sa - sb)
                    if best is None or delta < best[0]:
                        best = (delta, i, j)
            delta, i, j = best
            if delta > self.config.threshold:
                break
            msg_a, msg_b = qa[i], qb[j]
            del qa[i]
            del qb[j]
            # drop messages that predate the emitted pair's counterpart
            while qa and qa[0][0] < msg_b[0]:
                qa.popleft()
            while qb and qb[0][0] < msg_a[0]:
                qb.popleft()
            pairs.append((msg_a, msg_b))
        return pairs
