"""Virtual SIM800L speaking the small AT subset the alarm firmware uses.

The modem consumes raw UART bytes, frames them into command lines (CR or
CRLF terminated; Ctrl-Z terminated while an SMS body is being typed),
answers each line with exactly one final result, and keeps append-only
ledgers of calls placed and SMS submitted.

Call and SMS state are tracked separately, so a message can be submitted
while a voice call is still up (the firmware does exactly that).
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Optional, Union

logger = logging.getLogger(__name__)

CR, LF, CTRL_Z = 0x0D, 0x0A, 0x1A

OK = b"OK\r\n"
ERROR = b"ERROR\r\n"
PROMPT = b"> "
NO_CARRIER = b"NO CARRIER\r\n"

_NUMBER = r"[+0-9*#]+"
_DIAL_RE = re.compile(rb"ATD(" + _NUMBER.encode() + rb")(;?)", re.IGNORECASE)
_CMGF_RE = re.compile(rb"AT\+CMGF=([01])", re.IGNORECASE)
_CMGS_RE = re.compile(rb'AT\+CMGS="(' + _NUMBER.encode() + rb')"', re.IGNORECASE)
_HANGUP_RE = re.compile(rb"ATH0?", re.IGNORECASE)
_PING_RE = re.compile(rb"AT", re.IGNORECASE)


# -- parsed commands ---------------------------------------------------------

@dataclass(frozen=True)
class Ping:
    pass


@dataclass(frozen=True)
class Dial:
    number: str
    voice: bool


@dataclass(frozen=True)
class SetMessageFormat:
    mode: int


@dataclass(frozen=True)
class SendMessageStart:
    number: str


@dataclass(frozen=True)
class Hangup:
    pass


@dataclass(frozen=True)
class Unknown:
    raw: bytes


AtCommand = Union[Ping, Dial, SetMessageFormat, SendMessageStart, Hangup, Unknown]


def parse_command_line(line: bytes) -> AtCommand:
    """Classify one command line (terminator already stripped). Never raises."""
    text = bytes(line).strip(b" \t\r\n")
    if m := _DIAL_RE.fullmatch(text):
        return Dial(m.group(1).decode("ascii"), voice=m.group(2) == b";")
    if m := _CMGF_RE.fullmatch(text):
        return SetMessageFormat(int(m.group(1)))
    if m := _CMGS_RE.fullmatch(text):
        return SendMessageStart(m.group(1).decode("ascii"))
    if _HANGUP_RE.fullmatch(text):
        return Hangup()
    if _PING_RE.fullmatch(text):
        return Ping()
    return Unknown(bytes(line))


# -- ledgers -----------------------------------------------------------------

@dataclass
class CallRecord:
    number: str
    start: int
    end: Optional[int] = None
    outcome: Optional[str] = None  # answered | unanswered | hangup once closed
    answered: bool = False

    @property
    def is_open(self) -> bool:
        return self.end is None


@dataclass(frozen=True)
class SmsRecord:
    number: str
    body: bytes
    submitted: int
    reference: int


# -- state machine -----------------------------------------------------------

@dataclass
class ModemState:
    text_mode: bool = False
    echo: bool = False
    call: Optional[CallRecord] = None
    sms_number: Optional[str] = None
    sms_buffer: bytearray = field(default_factory=bytearray)
    line_buffer: bytearray = field(default_factory=bytearray)
    swallow_lf: bool = False
    next_reference: int = 1
    calls: list[CallRecord] = field(default_factory=list)
    messages: list[SmsRecord] = field(default_factory=list)

    @property
    def phase(self) -> str:
        if self.sms_number is not None:
            return "awaiting_sms_body"
        return "in_call" if self.call is not None else "idle"


@dataclass(frozen=True)
class RecordEvent:
    """Ledger change produced by a feed or call-progress step."""

    kind: str  # call_start | call_end | sms
    at: int
    record: Union[CallRecord, SmsRecord]


def _execute(state: ModemState, cmd: AtCommand, now: int, events: list[RecordEvent]) -> bytes:
    if isinstance(cmd, Ping):
        return OK
    if isinstance(cmd, SetMessageFormat):
        state.text_mode = cmd.mode == 1
        return OK
    if isinstance(cmd, Dial):
        if not cmd.voice or state.call is not None:
            return ERROR
        state.call = CallRecord(cmd.number, now)
        state.calls.append(state.call)
        events.append(RecordEvent("call_start", now, state.call))
        return OK
    if isinstance(cmd, SendMessageStart):
        if not state.text_mode:
            return ERROR
        state.sms_number = cmd.number
        state.sms_buffer = bytearray()
        return PROMPT
    if isinstance(cmd, Hangup):
        if state.call is not None:
            _close_call(state, "hangup", now, events)
        return OK
    return ERROR


def _close_call(state: ModemState, outcome: str, now: int, events: list[RecordEvent]) -> None:
    call = state.call
    call.end = now
    call.outcome = outcome
    state.call = None
    events.append(RecordEvent("call_end", now, call))


def modem_feed(state: ModemState, data: bytes, now: int) -> tuple[ModemState, bytes, list[RecordEvent]]:
    """Push received bytes through the modem.

    Returns the (mutated) state, the response bytes to send back, and the
    ledger events the bytes caused. Accepts any byte sequence.
    """
    out = bytearray()
    events: list[RecordEvent] = []
    for byte in bytes(data):
        if state.swallow_lf:
            state.swallow_lf = False
            if byte == LF:
                continue
        if state.sms_number is not None:
            if byte == CTRL_Z:
                record = SmsRecord(state.sms_number, bytes(state.sms_buffer), now, state.next_reference)
                state.messages.append(record)
                events.append(RecordEvent("sms", now, record))
                out += b"+CMGS: %d\r\n" % state.next_reference + OK
                state.next_reference += 1
                state.sms_number = None
                state.sms_buffer = bytearray()
            else:
                state.sms_buffer.append(byte)
            continue
        if byte == CR:
            line = bytes(state.line_buffer)
            state.line_buffer = bytearray()
            state.swallow_lf = True
            if not line.strip(b" \t\r\n"):
                continue
            if state.echo:
                out += line + b"\r\n"
            out += _execute(state, parse_command_line(line), now, events)
        else:
            state.line_buffer.append(byte)
    return state, bytes(out), events


def call_progress(state: ModemState, directive: str, now: int) -> tuple[ModemState, bytes, list[RecordEvent]]:
    """Apply a far-end call event (answer, reject, remote_hangup) or a local hangup."""
    events: list[RecordEvent] = []
    if directive not in ("answer", "reject", "remote_hangup", "hangup"):
        raise ValueError(f"unknown call directive {directive!r}")
    if state.call is None:
        logger.warning("t=%d call directive %r ignored: no call in progress", now, directive)
        return state, b"", events
    if directive == "answer":
        state.call.answered = True
        return state, b"", events
    if directive == "hangup":
        _close_call(state, "hangup", now, events)
        return state, b"", events
    outcome = "answered" if state.call.answered and directive == "remote_hangup" else "unanswered"
    _close_call(state, outcome, now, events)
    return state, NO_CARRIER, events


def records(state: ModemState) -> tuple[list[CallRecord], list[SmsRecord]]:
    return list(state.calls), list(state.messages)
