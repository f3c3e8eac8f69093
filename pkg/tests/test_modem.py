import random
import re

import pytest
from hypothesis import given, strategies as st

from intrusim.modem import (
    Dial,
    Hangup,
    ModemState,
    Ping,
    SendMessageStart,
    SetMessageFormat,
    Unknown,
    call_progress,
    modem_feed,
    parse_command_line,
    records,
)

OWNER = "+2347048850497"
DIAL = b"ATD+2347048850497;\r\n"
SMS_STEPS = [b"AT+CMGF=1\r\n", b'AT+CMGS="+2347048850497"\r', b"ALERT!!\n Intruder detected!!!", b"\x1a"]
WELL_FRAMED = re.compile(rb"(?:OK\r\n|ERROR\r\n|> |\+CMGS: \d+\r\nOK\r\n|NO CARRIER\r\n)*")


def feed(state, *chunks, now=0):
    out = b""
    for chunk in chunks:
        state, resp, _ = modem_feed(state, chunk, now)
        out += resp
    return out


class TestParse:
    @pytest.mark.parametrize("line,cmd", [
        (b"ATD+2347048850497;", Dial(OWNER, voice=True)),
        (b"ATD+2347048850497", Dial(OWNER, voice=False)),
        (b"atd*#21#;", Dial("*#21#", voice=True)),
        (b"AT+CMGF=1", SetMessageFormat(1)),
        (b"at+cmgf=0", SetMessageFormat(0)),
        (b'AT+CMGS="+2347048850497"', SendMessageStart(OWNER)),
        (b"ATH", Hangup()),
        (b"ATH0", Hangup()),
        (b"AT", Ping()),
        (b"at", Ping()),
    ])
    def test_known(self, line, cmd):
        assert parse_command_line(line) == cmd

    @pytest.mark.parametrize("line", [b"XYZZY", b"AT+CMGF=2", b"ATD;", b"ATDabc;", b"AT+CMGS=+1", b"", b"\xff\x00"])
    def test_unknown(self, line):
        assert parse_command_line(line) == Unknown(line)

    @given(st.binary(max_size=40))
    def test_total(self, line):
        parse_command_line(line)


class TestFeed:
    def test_voice_dial(self):
        state, resp, events = modem_feed(ModemState(), DIAL, 20_500)
        assert resp == b"OK\r\n"
        assert state.phase == "in_call"
        assert [e.kind for e in events] == ["call_start"]
        calls, _ = records(state)
        assert (calls[0].number, calls[0].start, calls[0].end) == (OWNER, 20_500, None)

    def test_firmware_sms_sequence(self):
        state = ModemState()
        out = feed(state, *SMS_STEPS, now=30_000)
        assert out == b"OK\r\n> +CMGS: 1\r\nOK\r\n"
        _, sms = records(state)
        assert [(m.number, m.body, m.submitted) for m in sms] == [(OWNER, b"ALERT!!\n Intruder detected!!!", 30_000)]
        assert state.phase == "idle"

    def test_cmgs_needs_text_mode(self):
        state = ModemState()
        assert feed(state, b'AT+CMGS="+1"\r', b"hi\x1a\r") == b"ERROR\r\nERROR\r\n"
        assert records(state) == ([], [])

    def test_dial_while_in_call_errors(self):
        state = ModemState()
        assert feed(state, DIAL, DIAL) == b"OK\r\nERROR\r\n"
        assert len(state.calls) == 1

    def test_data_dial_rejected(self):
        assert feed(ModemState(), b"ATD123\r") == b"ERROR\r\n"

    def test_unknown_errors(self):
        assert feed(ModemState(), b"XYZZY\r\n") == b"ERROR\r\n"

    def test_sms_during_call(self):
        state = ModemState()
        feed(state, DIAL, *SMS_STEPS)
        assert state.phase == "in_call"
        assert len(state.messages) == 1

    def test_split_across_feeds(self):
        state = ModemState()
        data = DIAL + b"".join(SMS_STEPS)
        out = feed(state, *[data[i:i + 3] for i in range(0, len(data), 3)])
        assert out == b"OK\r\nOK\r\n> +CMGS: 1\r\nOK\r\n"

    def test_bare_cr_and_crlf(self):
        assert feed(ModemState(), b"AT\rAT\r\nAT\r") == b"OK\r\n" * 3

    def test_blank_lines_ignored(self):
        assert feed(ModemState(), b"\r\n\r\r\n") == b""

    def test_reference_counter(self):
        state = ModemState()
        feed(state, b"AT+CMGF=1\r", b'AT+CMGS="1"\ra\x1a', b'AT+CMGS="2"\rb\x1a')
        assert [m.reference for m in state.messages] == [1, 2]

    def test_echo(self):
        assert feed(ModemState(echo=True), b"AT\r") == b"AT\r\nOK\r\n"

    def test_hangup_closes_call(self):
        state = ModemState()
        feed(state, DIAL)
        state, resp, events = modem_feed(state, b"ATH\r\n", 5)
        assert resp == b"OK\r\n"
        assert state.calls[0].outcome == "hangup" and state.calls[0].end == 5


class TestCallProgress:
    def dialled(self):
        state = ModemState()
        feed(state, DIAL, now=100)
        return state

    def test_remote_hangup_unanswered(self):
        state, out, _ = call_progress(self.dialled(), "remote_hangup", 500)
        assert out == b"NO CARRIER\r\n"
        assert state.phase == "idle"
        assert (state.calls[0].outcome, state.calls[0].end) == ("unanswered", 500)

    def test_answer_then_hangup(self):
        state = self.dialled()
        call_progress(state, "answer", 200)
        assert state.phase == "in_call"
        state, out, _ = call_progress(state, "remote_hangup", 900)
        assert state.calls[0].outcome == "answered"

    def test_reject(self):
        state, out, _ = call_progress(self.dialled(), "reject", 300)
        assert out == b"NO CARRIER\r\n"
        assert state.calls[0].outcome == "unanswered"

    def test_idle_directive_ignored(self, caplog):
        state, out, events = call_progress(ModemState(), "answer", 0)
        assert (state.phase, out, events) == ("idle", b"", [])
        assert "no call in progress" in caplog.text

    def test_closed_call_end_not_before_start(self):
        state, _, _ = call_progress(self.dialled(), "remote_hangup", 100)
        c = state.calls[0]
        assert c.end >= c.start


class TestRecords:
    def test_fresh(self):
        assert records(ModemState()) == ([], [])

    def test_one_dial(self):
        state = ModemState()
        feed(state, DIAL)
        assert len(records(state)[0]) == 1

    def test_two_magnetic_alerts(self):
        # two passes of the door branch, with the first call ended in between
        state = ModemState()
        feed(state, DIAL, *SMS_STEPS, now=22_000)
        call_progress(state, "remote_hangup", 40_000)
        feed(state, DIAL, *SMS_STEPS, now=41_000)
        calls, sms = records(state)
        assert [c.start for c in calls] == [22_000, 41_000]
        assert [m.reference for m in sms] == [1, 2]


@given(st.lists(st.binary(max_size=24), max_size=12))
def test_feed_is_total_and_well_framed(chunks):
    state = ModemState()
    for chunk in chunks:
        state, out, _ = modem_feed(state, chunk, 0)
        assert WELL_FRAMED.fullmatch(out)
        assert 0x1A not in state.sms_buffer


COMMANDS = [b"AT", DIAL, b"ATH", b"AT+CMGF=1", b"AT+CMGF=0", b'AT+CMGS="+1"', b"XYZZY", b"ATD5"]


@given(st.lists(st.sampled_from(COMMANDS), max_size=20), st.sampled_from([b"\r", b"\r\n"]))
def test_one_final_result_per_line(lines, term):
    state = ModemState()
    finals = 0
    for line in lines:
        state, out, _ = modem_feed(state, line + term, 0)
        if state.phase == "awaiting_sms_body":
            state, body_out, _ = modem_feed(state, b"body\x1a", 0)
            assert re.fullmatch(rb"\+CMGS: \d+\r\nOK\r\n", body_out)
            assert out == b"> "
        finals += len(re.findall(rb"OK\r\n|ERROR\r\n|> ", out))
        assert state.phase in ("idle", "in_call")
    assert finals == len(lines)


def test_partial_body_never_recorded():
    rng = random.Random(7)
    state = ModemState()
    feed(state, b"AT+CMGF=1\r")
    for n in range(1, 51):
        feed(state, b'AT+CMGS="+1"\r')
        body = bytes(rng.randrange(0x20, 0x7F) for _ in range(rng.randrange(0, 40)))
        for i in range(0, len(body), 7):
            feed(state, body[i:i + 7])
            assert len(state.messages) == n - 1
        feed(state, b"\x1a")
        assert len(state.messages) == n
        assert state.messages[-1].body == body
