"""Alarm firmware as a step function.

``controller_tick`` samples the three inputs once, runs the branches in
source order (sound, PIR, magnetic) and returns the resulting actions with
absolute timestamps. Blocking delays become gaps between those timestamps;
the controller does not sample again until the whole sequence has played
out.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Union

CTRL_Z = 0x1A
DIAL_NUMBER_RE = re.compile(r"[+0-9]+")


class Policy(str, Enum):
    INDICATOR_ONLY = "indicator_only"
    INDICATOR_DIAL = "indicator_dial"
    INDICATOR_DIAL_SMS = "indicator_dial_sms"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FirmwareConfig:
    owner_number: str = "+2347048850497"
    sound_threshold: int = 800
    sample_period_ms: int = 500
    boot_delay_ms: int = 15000
    indicator_on_ms: int = 1000
    indicator_off_ms: int = 1000
    post_dial_wait_ms: int = 2000
    sms_step_ms: int = 1000
    sound_policy: Policy = Policy.INDICATOR_ONLY
    pir_policy: Policy = Policy.INDICATOR_DIAL
    magnetic_policy: Policy = Policy.INDICATOR_DIAL_SMS
    sms_text: bytes = b"ALERT!!\n Intruder detected!!!"

    def __post_init__(self) -> None:
        if not 0 <= self.sound_threshold <= 1023:
            raise ConfigError(f"sound_threshold must be in [0, 1023], got {self.sound_threshold}")
        for name in ("sample_period_ms", "boot_delay_ms", "indicator_on_ms",
                     "indicator_off_ms", "post_dial_wait_ms", "sms_step_ms"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if not DIAL_NUMBER_RE.fullmatch(self.owner_number or ""):
            raise ConfigError(f"owner_number must match [+0-9]+, got {self.owner_number!r}")
        if CTRL_Z in self.sms_text:
            raise ConfigError("sms_text must not contain 0x1A")
        for name in ("sound_policy", "pir_policy", "magnetic_policy"):
            object.__setattr__(self, name, Policy(getattr(self, name)))

    def policy_for(self, source: str) -> Policy:
        return getattr(self, f"{source}_policy")


# -- phases ------------------------------------------------------------------

@dataclass(frozen=True)
class Booting:
    until: int


@dataclass(frozen=True)
class Monitoring:
    pass


@dataclass(frozen=True)
class Alerting:
    sources: tuple[str, ...]
    until: int


ControllerPhase = Union[Booting, Monitoring, Alerting]


# -- actions -----------------------------------------------------------------

@dataclass(frozen=True)
class IndicatorOn:
    at: int


@dataclass(frozen=True)
class IndicatorOff:
    at: int


@dataclass(frozen=True)
class UartWrite:
    at: int
    data: bytes


@dataclass(frozen=True)
class Log:
    at: int
    tag: str


ControllerAction = Union[IndicatorOn, IndicatorOff, UartWrite, Log]


def evaluate_sound(cfg: FirmwareConfig, val: int) -> bool:
    return val > cfg.sound_threshold


def evaluate_pir(level: int) -> bool:
    return level == 0


def evaluate_magnetic(level: int) -> bool:
    return level == 1


def dial_sequence(number: str) -> bytes:
    if not DIAL_NUMBER_RE.fullmatch(number or ""):
        raise ValueError(f"invalid dial number {number!r}")
    return b"ATD" + number.encode("ascii") + b";\r\n"


def sms_sequence(number: str, text: bytes, step_ms: int = 1000) -> list[tuple[int, bytes]]:
    """Text-mode SMS submission as (offset_ms, bytes) writes.

    Ctrl-Z terminates the body on the modem side, so a body containing it
    would be cut short and is rejected.
    """
    if CTRL_Z in text:
        raise ValueError("SMS text contains 0x1A")
    if not DIAL_NUMBER_RE.fullmatch(number or ""):
        raise ValueError(f"invalid SMS number {number!r}")
    return [
        (0, b"AT+CMGF=1\r\n"),
        (step_ms, b'AT+CMGS="' + number.encode("ascii") + b'"\r'),
        (2 * step_ms, bytes(text)),
        (3 * step_ms, bytes([CTRL_Z])),
    ]


_BRANCH_TAGS = {"sound": "noise detected", "pir": "PIR", "magnetic": "Magnetic"}


def _branch_actions(cfg: FirmwareConfig, source: str, start: int) -> tuple[list, int]:
    policy = cfg.policy_for(source)
    t = start
    actions: list = [Log(t, _BRANCH_TAGS[source]), IndicatorOn(t)]
    t += cfg.indicator_on_ms
    actions.append(IndicatorOff(t))
    t += cfg.indicator_off_ms
    if policy is Policy.INDICATOR_ONLY:
        return actions, t
    actions.append(UartWrite(t, dial_sequence(cfg.owner_number)))
    t += cfg.post_dial_wait_ms
    if policy is Policy.INDICATOR_DIAL:
        return actions, t
    for offset, data in sms_sequence(cfg.owner_number, cfg.sms_text, cfg.sms_step_ms):
        actions.append(UartWrite(t + offset, data))
    # Ctrl-Z goes out at 3 steps; then wait, read the reply, wait again
    t += 5 * cfg.sms_step_ms
    return actions, t


def controller_tick(
    cfg: FirmwareConfig,
    phase: ControllerPhase,
    inputs: dict[str, int],
    now: int,
) -> tuple[ControllerPhase, list[ControllerAction]]:
    """One pass of the monitoring loop at ``now``.

    ``inputs`` maps ``sound``/``pir``/``magnetic`` to the sampled ADC count or
    pin level. Returns the new phase and the actions, ordered by time.
    """
    if isinstance(phase, Booting):
        if now < phase.until:
            return phase, []
    elif isinstance(phase, Alerting):
        if now < phase.until:
            return phase, []

    triggered = []
    if evaluate_sound(cfg, inputs["sound"]):
        triggered.append("sound")
    if evaluate_pir(inputs["pir"]):
        triggered.append("pir")
    if evaluate_magnetic(inputs["magnetic"]):
        triggered.append("magnetic")

    actions: list[ControllerAction] = []
    t = now
    for source in triggered:
        branch, t = _branch_actions(cfg, source, t)
        actions.extend(branch)
    if not triggered:
        return Monitoring(), []
    return Alerting(tuple(triggered), t), actions


def next_tick_at(cfg: FirmwareConfig, phase: ControllerPhase, now: int) -> int:
    """When the loop samples again after a tick at ``now`` left it in ``phase``."""
    if isinstance(phase, Booting):
        return max(phase.until, now)
    if isinstance(phase, Alerting):
        return phase.until + cfg.sample_period_ms
    return now + cfg.sample_period_ms
