import pytest
from hypothesis import given, strategies as st

from intrusim.kernel import (
    Kernel,
    SchedulingError,
    SerialChannel,
    channel_drain,
    channel_send,
    per_byte_latency,
)


def test_event_fires_when_clock_reaches_it():
    k = Kernel()
    k.schedule(500, "a")
    assert k.advance_to(499) == []
    assert [e.payload for e in k.advance_to(500)] == ["a"]


def test_same_time_events_fire_in_insertion_order():
    k = Kernel()
    for name in "abc":
        k.schedule(500, name)
    assert [e.payload for e in k.advance_to(500)] == ["a", "b", "c"]


def test_schedule_in_the_past_is_rejected():
    k = Kernel()
    k.advance_to(200)
    with pytest.raises(SchedulingError):
        k.schedule(100)


def test_advance_backwards_is_rejected():
    k = Kernel()
    k.advance_to(10)
    with pytest.raises(SchedulingError):
        k.advance_to(5)


def test_empty_queue_advance():
    k = Kernel()
    assert k.advance_to(10_000) == []
    assert k.now == 10_000


def test_cancelled_event_never_fires():
    k = Kernel()
    handle = k.schedule(10, "x")
    k.schedule(10, "y")
    handle.cancel()
    assert [e.payload for e in k.advance_to(20)] == ["y"]
    assert k.pending() == 0


def test_handlers_can_schedule_due_events():
    k = Kernel()
    seen = []

    def dispatch(ev):
        seen.append((k.now, ev.payload))
        if ev.payload == "first":
            k.schedule(k.now, "same-instant")
            k.schedule(k.now + 5, "later")
            k.schedule(k.now + 50, "too-late")

    k.schedule(10, "first")
    k.advance_to(20, dispatch)
    assert seen == [(10, "first"), (10, "same-instant"), (15, "later")]
    assert k.now == 20


@given(st.lists(st.tuples(st.integers(0, 1000), st.integers(0, 1000)), max_size=60))
def test_fired_sequence_sorted_by_time_then_seq(plan):
    # plan: (delay from now, advance step) pairs interleaving schedule and advance
    k = Kernel()
    fired = []
    for delay, step in plan:
        k.schedule(k.now + delay)
        fired += k.advance_to(k.now + step)
    fired += k.advance_to(k.now + 2000)
    keys = [(e.fire_at, e.seq) for e in fired]
    assert keys == sorted(keys)
    assert len(fired) == len(plan)


@given(st.lists(st.integers(0, 100), max_size=30))
def test_identical_schedules_fire_identically(times):
    def go():
        k = Kernel()
        for i, t in enumerate(times):
            k.schedule(t, i)
        return [(e.fire_at, e.payload) for e in k.advance_to(100)]

    assert go() == go()


def test_latency_formula():
    # 10 bits per frame: floor(10000 / baud)
    assert per_byte_latency(9600) == 1
    assert per_byte_latency(2400) == 4
    assert per_byte_latency(1200) == 8
    assert per_byte_latency(115200) == 0


def test_five_byte_burst_lands_after_five_ms():
    ch = SerialChannel(9600)
    assert channel_send(ch, b"hello", 0) == 5
    assert [t for _, t in ch.in_flight()] == [1, 2, 3, 4, 5]
    assert channel_drain(ch, 4) == b"hell"
    assert channel_drain(ch, 5) == b"o"


def test_empty_send_leaves_channel_unchanged():
    ch = SerialChannel()
    assert channel_send(ch, b"", 7) is None
    assert ch.in_flight() == []


def test_back_to_back_sends_queue_fifo():
    ch = SerialChannel()
    ch.send(b"abc", 0)
    assert ch.send(b"de", 1) == 5
    assert ch.drain(2) == b"ab"
    assert ch.drain(2) == b""
    assert ch.drain(100) == b"cde"


def test_idle_line_restarts_at_send_time():
    ch = SerialChannel()
    ch.send(b"a", 0)
    assert ch.send(b"b", 50) == 51


@given(st.lists(st.tuples(st.binary(max_size=20), st.integers(0, 30)), max_size=20),
       st.lists(st.integers(0, 40), max_size=20))
def test_round_trip_and_no_reordering(sends, drain_steps):
    ch = SerialChannel()
    now, sent, got = 0, b"", b""
    for (data, gap), step in zip(sends, drain_steps + [0] * len(sends)):
        now += gap
        ch.send(data, now)
        sent += data
        got += ch.drain(now + step)
    got += ch.drain(now + 10_000)
    assert got == sent
