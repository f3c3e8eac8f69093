"""Wire sensors, controller, UART and modem onto one kernel and run a scenario."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable

from . import controller as ctl
from .config import SimConfig
from .kernel import Kernel, SerialChannel
from .modem import ModemState, call_progress, modem_feed
from .scenario import (
    Expectation,
    ExpectCall,
    ExpectIndicator,
    ExpectQuiet,
    ExpectSms,
    Scenario,
    ScenarioEvent,
)
from .sensors import apply_stimulus

logger = logging.getLogger(__name__)

HORIZON_MARGIN_MS = 30_000


class HorizonError(ValueError):
    pass


@dataclass(frozen=True)
class TranscriptRecord:
    t_ms: int
    source: str  # controller | modem | sensor | harness
    kind: str
    detail: str

    def to_json(self) -> str:
        return json.dumps(
            {"t_ms": self.t_ms, "source": self.source, "kind": self.kind, "detail": self.detail},
            ensure_ascii=True,
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "TranscriptRecord":
        d = json.loads(line)
        return cls(d["t_ms"], d["source"], d["kind"], d["detail"])


def render(data: bytes) -> str:
    """Bytes as a str with one code point per byte; JSON escapes the controls."""
    return data.decode("latin-1")


def transcript_text(transcript: Iterable[TranscriptRecord]) -> str:
    return "".join(rec.to_json() + "\n" for rec in transcript)


def default_horizon(scenario: Scenario) -> int:
    return scenario.last_time() + HORIZON_MARGIN_MS


class Simulation:
    """One isolated run: kernel, sensor world, firmware, two UART directions, modem."""

    def __init__(self, config: SimConfig) -> None:
        self.config = config
        self.cfg = config.firmware
        self.kernel = Kernel()
        self.world = config.build_world()
        self.phase: ctl.ControllerPhase = ctl.Booting(self.cfg.boot_delay_ms)
        self.to_modem = SerialChannel(config.baud)
        self.to_controller = SerialChannel(config.baud)
        self.modem = ModemState(echo=config.modem_echo)
        self.transcript: list[TranscriptRecord] = []

    def _emit(self, source: str, kind: str, detail: str) -> None:
        self.transcript.append(TranscriptRecord(self.kernel.now, source, kind, detail))

    def _at(self, t: int, fn: Callable[[], None]) -> None:
        self.kernel.schedule(t, fn)

    # -- event handlers ------------------------------------------------------

    def _stimulus(self, ev: ScenarioEvent) -> None:
        if ev.kind == "call":
            directive = ev.args[0]
            self._emit("harness", "call_directive", directive)
            if self.modem.call is None:
                self._emit("modem", "warning", f"{directive} ignored: no call in progress")
            elif directive == "answer":
                self._emit("modem", "call_answered", self.modem.call.number)
            self._modem_result(*call_progress(self.modem, directive, self.kernel.now))
            return
        apply_stimulus(self.world, ev)
        self._emit("sensor", ev.kind, " ".join(_fmt(a) for a in ev.args))

    def _tick(self) -> None:
        now = self.kernel.now
        inputs = self.world.sample(now)
        self._emit("sensor", "sample", f"sound={inputs['sound']} pir={inputs['pir']} magnetic={inputs['magnetic']}")
        self.phase, actions = ctl.controller_tick(self.cfg, self.phase, inputs, now)
        for action in actions:
            self._at(action.at, lambda a=action: self._perform(a))
        self._at(ctl.next_tick_at(self.cfg, self.phase, now), self._tick)

    def _perform(self, action: ctl.ControllerAction) -> None:
        if isinstance(action, ctl.IndicatorOn):
            self._emit("controller", "indicator_on", "pin 9 high")
        elif isinstance(action, ctl.IndicatorOff):
            self._emit("controller", "indicator_off", "pin 9 low")
        elif isinstance(action, ctl.Log):
            self._emit("controller", "log", action.tag)
        else:
            self._emit("controller", "uart_write", render(action.data))
            done = self.to_modem.send(action.data, self.kernel.now)
            if done is not None:
                self._at(done, self._modem_receive)

    def _modem_receive(self) -> None:
        data = self.to_modem.drain(self.kernel.now)
        if data:
            self._modem_result(*modem_feed(self.modem, data, self.kernel.now))

    def _modem_result(self, state: ModemState, response: bytes, events) -> None:
        for ev in events:
            rec = ev.record
            if ev.kind == "call_start":
                self._emit("modem", "call_start", rec.number)
            elif ev.kind == "call_end":
                self._emit("modem", "call_end", f"{rec.number} {rec.outcome}")
            else:
                self._emit("modem", "sms", f"{rec.number} {render(rec.body)}")
        if response:
            self._emit("modem", "response", render(response))
            done = self.to_controller.send(response, self.kernel.now)
            if done is not None:
                self._at(done, self._controller_receive)

    def _controller_receive(self) -> None:
        data = self.to_controller.drain(self.kernel.now)
        if data:
            self._emit("controller", "uart_rx", render(data))

    # -- driver --------------------------------------------------------------

    def run(self, scenario: Scenario, horizon_ms: int) -> list[TranscriptRecord]:
        self._emit("harness", "boot", f"booting until {self.cfg.boot_delay_ms}")
        for ev in scenario.events:
            self._at(ev.at, lambda e=ev: self._stimulus(e))
        # scheduled after the stimuli so same-instant stimuli land first
        self._at(self.cfg.boot_delay_ms, self._tick)
        self.kernel.advance_to(horizon_ms, lambda event: event.payload())
        self._emit("harness", "end", f"horizon {horizon_ms}")
        return self.transcript


def _fmt(arg) -> str:
    if isinstance(arg, float) and arg.is_integer():
        return str(int(arg))
    return str(arg)


def run(config: SimConfig, scenario: Scenario, horizon_ms: int | None = None) -> list[TranscriptRecord]:
    if horizon_ms is None:
        horizon_ms = default_horizon(scenario)
    if horizon_ms < scenario.last_time():
        raise HorizonError(
            f"horizon {horizon_ms} ms ends before the last scenario time {scenario.last_time()} ms"
        )
    return Simulation(config).run(scenario, horizon_ms)


# -- expectations -------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    expectation: Expectation
    passed: bool
    message: str


@dataclass
class Report:
    verdicts: list[Verdict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    @property
    def exit_status(self) -> int:
        return 0 if self.passed else 1


def _first_diff(a: bytes, b: bytes) -> int:
    for i, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return i
    return min(len(a), len(b))


def _check_one(transcript: list[TranscriptRecord], exp: Expectation) -> Verdict:
    if isinstance(exp, ExpectCall):
        hits = [r for r in transcript
                if r.source == "modem" and r.kind == "call_start" and r.detail == exp.number]
        if hits and hits[0].t_ms <= exp.by:
            return Verdict(exp, True, f"call to {exp.number} placed at {hits[0].t_ms} ms")
        if hits:
            return Verdict(exp, False, f"call to {exp.number} placed late at {hits[0].t_ms} ms (by {exp.by})")
        return Verdict(exp, False, f"no call to {exp.number}")

    if isinstance(exp, ExpectSms):
        bodies = []
        for r in transcript:
            if r.source == "modem" and r.kind == "sms":
                number, _, body = r.detail.partition(" ")
                if number == exp.number:
                    bodies.append((r.t_ms, body.encode("latin-1")))
        for t, body in bodies:
            if body == exp.body and t <= exp.by:
                return Verdict(exp, True, f"SMS to {exp.number} submitted at {t} ms")
        on_time = [(t, b) for t, b in bodies if t <= exp.by]
        if on_time:
            t, body = max(on_time, key=lambda tb: _first_diff(tb[1], exp.body))
            return Verdict(exp, False, f"SMS to {exp.number} at {t} ms differs from expected body "
                                       f"at byte offset {_first_diff(body, exp.body)}")
        if bodies:
            return Verdict(exp, False, f"SMS to {exp.number} submitted late at {bodies[0][0]} ms (by {exp.by})")
        return Verdict(exp, False, f"no SMS to {exp.number}")

    if isinstance(exp, ExpectQuiet):
        writes = [r for r in transcript if r.source == "controller" and r.kind == "uart_write" and r.t_ms < exp.until]
        if writes:
            return Verdict(exp, False, f"UART write at {writes[0].t_ms} ms before {exp.until}")
        return Verdict(exp, True, f"no UART writes before {exp.until} ms")

    if isinstance(exp, ExpectIndicator):
        pulses = sum(1 for r in transcript
                     if r.source == "controller" and r.kind == "indicator_on" and r.t_ms <= exp.by)
        ok = pulses == exp.pulses
        return Verdict(exp, ok, f"{pulses} indicator pulse(s) by {exp.by} ms, expected {exp.pulses}")

    raise TypeError(f"unknown expectation {exp!r}")


def check_expectations(transcript: list[TranscriptRecord], expectations: Iterable[Expectation]) -> Report:
    return Report([_check_one(transcript, exp) for exp in expectations])
