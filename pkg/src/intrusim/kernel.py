"""Virtual millisecond clock, ordered event queue and UART byte channels.

Everything in a simulation runs on integer milliseconds. Events with equal
fire times are dispatched in the order they were scheduled.
"""

from __future__ import annotations

import heapq
import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

BITS_PER_FRAME = 10  # 8N1: start + 8 data + stop
DEFAULT_BAUD = 9600


class SchedulingError(ValueError):
    """Raised when an event is scheduled before the current time."""


@dataclass(order=True)
class ScheduledEvent:
    fire_at: int
    seq: int
    payload: Any = field(compare=False, default=None)
    cancelled: bool = field(compare=False, default=False)

    def cancel(self) -> None:
        self.cancelled = True


class Kernel:
    """Deterministic discrete-event core.

    ``schedule`` returns the queued event itself, which doubles as the
    cancellation handle.
    """

    def __init__(self) -> None:
        self.now = 0
        self._queue: list[ScheduledEvent] = []
        self._seq = itertools.count()

    def schedule(self, fire_at: int, payload: Any = None) -> ScheduledEvent:
        if fire_at < self.now:
            raise SchedulingError(f"cannot schedule at t={fire_at} ms, clock is at {self.now} ms")
        event = ScheduledEvent(int(fire_at), next(self._seq), payload)
        heapq.heappush(self._queue, event)
        return event

    def pending(self) -> int:
        return sum(1 for ev in self._queue if not ev.cancelled)

    def advance_to(
        self,
        target: int,
        dispatch: Callable[[ScheduledEvent], None] | None = None,
    ) -> list[ScheduledEvent]:
        """Fire every event due at or before ``target`` and stop the clock there.

        ``dispatch`` is called on each event as it fires, with the clock set to
        the event's time, so handlers may schedule follow-up events; those fire
        in the same call if they are due.
        """
        if target < self.now:
            raise SchedulingError(f"cannot rewind clock from {self.now} ms to {target} ms")
        fired = []
        while self._queue and self._queue[0].fire_at <= target:
            event = heapq.heappop(self._queue)
            if event.cancelled:
                continue
            self.now = event.fire_at
            fired.append(event)
            if dispatch is not None:
                dispatch(event)
        self.now = target
        return fired


def per_byte_latency(baud: int) -> int:
    """Whole milliseconds needed to clock one 10-bit frame out at ``baud``."""
    if baud <= 0:
        raise ValueError(f"baud must be positive, got {baud}")
    return (1000 * BITS_PER_FRAME) // baud


class SerialChannel:
    """One direction of a lossless UART link.

    Bytes queue behind whatever is still in flight, so a burst sent while an
    earlier one is on the wire starts once the earlier one finishes.
    """

    def __init__(self, baud: int = DEFAULT_BAUD) -> None:
        self.baud = baud
        self.per_byte_latency = per_byte_latency(baud)
        self._in_flight: deque[tuple[int, int]] = deque()
        self._line_free_at = 0

    def send(self, data: bytes | Iterable[int], now: int) -> int | None:
        """Queue ``data`` at time ``now``.

        Returns the time the last byte becomes deliverable, or None when
        nothing was sent.
        """
        data = bytes(data)
        if not data:
            return None
        start = max(now, self._line_free_at)
        t = start
        for byte in data:
            t += self.per_byte_latency
            self._in_flight.append((byte, t))
        self._line_free_at = t
        return t

    def drain(self, now: int) -> bytes:
        out = bytearray()
        while self._in_flight and self._in_flight[0][1] <= now:
            out.append(self._in_flight.popleft()[0])
        return bytes(out)

    def in_flight(self) -> list[tuple[int, int]]:
        return list(self._in_flight)


def channel_send(ch: SerialChannel, data: bytes, now: int) -> int | None:
    return ch.send(data, now)


def channel_drain(ch: SerialChannel, now: int) -> bytes:
    return ch.drain(now)
