"""Line-oriented scenario scripts.

::

    # door intrusion
    at 20000 door open
    at 30000 intruder set 3 0
    at 31000 intruder clear
    at 40000 sound 900 600
    at 45000 call remote_hangup
    expect call +2347048850497 by 25000
    expect sms +2347048850497 "ALERT!!\\n Intruder detected!!!" by 30000
    expect quiet until 15000
    expect indicator 1 by 20000
"""

from __future__ import annotations

import shlex
from dataclasses import dataclass
from typing import Union

from .config import unescape


class ScenarioError(ValueError):
    def __init__(self, lineno: int, token: str, message: str) -> None:
        super().__init__(f"line {lineno}: {message} (at {token!r})")
        self.lineno = lineno
        self.token = token


@dataclass(frozen=True)
class ScenarioEvent:
    at: int
    kind: str  # door | intruder | sound | call
    args: tuple
    line: int = 0


@dataclass(frozen=True)
class ExpectCall:
    number: str
    by: int


@dataclass(frozen=True)
class ExpectSms:
    number: str
    body: bytes
    by: int


@dataclass(frozen=True)
class ExpectQuiet:
    until: int


@dataclass(frozen=True)
class ExpectIndicator:
    pulses: int
    by: int


Expectation = Union[ExpectCall, ExpectSms, ExpectQuiet, ExpectIndicator]


@dataclass(frozen=True)
class Scenario:
    events: tuple[ScenarioEvent, ...]
    expectations: tuple[Expectation, ...]

    def last_time(self) -> int:
        times = [e.at for e in self.events]
        for x in self.expectations:
            times.append(x.until if isinstance(x, ExpectQuiet) else x.by)
        return max(times, default=0)


class _Line:
    def __init__(self, lineno: int, tokens: list[str]) -> None:
        self.lineno = lineno
        self.tokens = tokens
        self.pos = 0

    def error(self, message: str, token: str | None = None) -> ScenarioError:
        if token is None:
            token = self.tokens[self.pos] if self.pos < len(self.tokens) else "<end of line>"
        return ScenarioError(self.lineno, token, message)

    def take(self, what: str) -> str:
        if self.pos >= len(self.tokens):
            raise self.error(f"expected {what}")
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def keyword(self, *choices: str) -> str:
        tok = self.take(" | ".join(choices))
        if tok not in choices:
            raise self.error(f"expected one of {', '.join(choices)}", tok)
        return tok

    def ms(self) -> int:
        tok = self.take("a time in ms")
        if not tok.isdigit():
            raise self.error("expected a non-negative integer", tok)
        return int(tok)

    def number(self) -> float:
        tok = self.take("a number")
        try:
            return float(tok)
        except ValueError:
            raise self.error("expected a number", tok) from None

    def done(self) -> None:
        if self.pos < len(self.tokens):
            raise self.error("unexpected trailing token")


def _parse_event(line: _Line) -> ScenarioEvent:
    at = line.ms()
    kind = line.keyword("door", "intruder", "sound", "call")
    if kind == "door":
        args = (line.keyword("open", "close"),)
    elif kind == "intruder":
        action = line.keyword("set", "clear")
        args = (action, line.number(), line.number()) if action == "set" else (action,)
    elif kind == "sound":
        args = (line.ms(), line.ms())
    else:
        args = (line.keyword("answer", "reject", "remote_hangup"),)
    line.done()
    return ScenarioEvent(at, kind, args, line.lineno)


def _parse_expectation(line: _Line) -> Expectation:
    kind = line.keyword("call", "sms", "quiet", "indicator")
    if kind == "quiet":
        line.keyword("until")
        result: Expectation = ExpectQuiet(line.ms())
    elif kind == "indicator":
        pulses = line.ms()
        line.keyword("by")
        result = ExpectIndicator(pulses, line.ms())
    else:
        number = line.take("a phone number")
        if kind == "sms":
            body = unescape(line.take("a quoted message body"))
            line.keyword("by")
            result = ExpectSms(number, body, line.ms())
        else:
            line.keyword("by")
            result = ExpectCall(number, line.ms())
    line.done()
    return result


def parse_scenario(text: str) -> Scenario:
    events: list[ScenarioEvent] = []
    expectations: list[Expectation] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        lexer = shlex.shlex(raw, posix=True)
        lexer.whitespace_split = True
        lexer.commenters = "#"
        lexer.escape = ""  # backslashes are kept for unescape()
        try:
            tokens = list(lexer)
        except ValueError as exc:
            raise ScenarioError(lineno, raw.strip(), str(exc)) from None
        if not tokens:
            continue
        line = _Line(lineno, tokens)
        head = line.keyword("at", "expect")
        if head == "at":
            events.append(_parse_event(line))
        else:
            expectations.append(_parse_expectation(line))
    events.sort(key=lambda e: e.at)
    return Scenario(tuple(events), tuple(expectations))
