"""Virtual PIR, sound and magnetic door sensors.

Each sensor holds its own stimulus history and answers reads as a pure
function of that history and the read time. Digital outputs are plain ints
(0 or 1) and sound readings are 10-bit ADC counts.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

logger = logging.getLogger(__name__)

ADC_MAX = 1023

Point = tuple[float, float]


def clamp_adc(counts: int) -> int:
    return max(0, min(ADC_MAX, int(counts)))


def _angle_diff(a: float, b: float) -> float:
    """Signed difference a - b wrapped into (-180, 180]."""
    d = math.fmod(a - b, 360.0)
    if d <= -180.0:
        d += 360.0
    elif d > 180.0:
        d -= 360.0
    return d


@dataclass
class PirSensor:
    """Planar sector detector with an active-low output and a hold window.

    The field is every point within ``range_m`` whose bearing lies within
    ``half_angle`` degrees of ``facing`` (edges included). The output stays
    asserted for ``hold_ms`` after the last instant an intruder was inside.
    """

    position: Point = (0.0, 0.0)
    facing: float = 0.0
    half_angle: float = 45.0
    range_m: float = 6.1
    hold_ms: int = 2000
    # (since, intruder positions) segments, in time order
    _track: list[tuple[int, tuple[Point, ...]]] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        if not 0.0 < self.half_angle < 180.0:
            raise ValueError(f"half_angle must be in (0, 180), got {self.half_angle}")
        if not (math.isfinite(self.range_m) and self.range_m > 0):
            raise ValueError(f"range_m must be positive and finite, got {self.range_m}")
        if self.hold_ms < 0:
            raise ValueError(f"hold_ms must be >= 0, got {self.hold_ms}")

    def covers(self, point: Point) -> bool:
        dx = point[0] - self.position[0]
        dy = point[1] - self.position[1]
        dist = math.hypot(dx, dy)
        if dist > self.range_m:
            return False
        if dist == 0.0:
            return True
        bearing = math.degrees(math.atan2(dy, dx))
        return abs(_angle_diff(bearing, self.facing)) <= self.half_angle

    def set_intruders(self, intruders: Sequence[Point], at: int) -> None:
        self._track.append((at, tuple(intruders)))

    def read(self, now: int) -> int:
        window_start = now - self.hold_ms
        for i, (since, intruders) in enumerate(self._track):
            if since > now:
                break
            until = self._track[i + 1][0] if i + 1 < len(self._track) else None
            if until is not None and until <= window_start:
                continue
            if any(self.covers(p) for p in intruders):
                return 0
        return 1


def pir_read(sensor: PirSensor, intruders: Sequence[Point], now: int) -> int:
    """Instantaneous read for ``intruders`` present at ``now`` (no history)."""
    return 0 if any(sensor.covers(p) for p in intruders) else 1


@dataclass(frozen=True)
class SoundBurst:
    amplitude: int
    start: int
    duration_ms: int

    def active(self, now: int) -> bool:
        return self.start <= now < self.start + self.duration_ms


@dataclass
class SoundSensor:
    baseline_counts: int = 0
    bursts: list[SoundBurst] = field(default_factory=list)

    def add_burst(self, amplitude: int, start: int, duration_ms: int) -> None:
        self.bursts.append(SoundBurst(amplitude, start, duration_ms))

    def read(self, now: int) -> int:
        amplitude = max((b.amplitude for b in self.bursts if b.active(now)), default=0)
        return clamp_adc(self.baseline_counts + amplitude)


def sound_read(sensor: SoundSensor, now: int) -> int:
    return sensor.read(now)


@dataclass
class MagneticSwitch:
    """Reed contact on a pull-up input: closed door pulls the pin to 0.

    A cut wire is indistinguishable from an open door and also reads 1.
    """

    door_open: bool = False
    _history: list[tuple[int, bool]] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        self._initial = self.door_open

    def set_door(self, is_open: bool, at: int) -> None:
        self._history.append((at, is_open))
        self.door_open = is_open

    def state_at(self, now: int) -> bool:
        state = self._initial
        for at, is_open in self._history:
            if at > now:
                break
            state = is_open
        return state

    def read(self, now: int | None = None) -> int:
        is_open = self.door_open if now is None else self.state_at(now)
        return 1 if is_open else 0


def door_read(switch: MagneticSwitch) -> int:
    return switch.read()


@dataclass
class SensorWorld:
    """The three sensors wired to the controller's input pins."""

    pir: PirSensor = field(default_factory=PirSensor)
    sound: SoundSensor = field(default_factory=SoundSensor)
    door: MagneticSwitch = field(default_factory=MagneticSwitch)

    def sample(self, now: int) -> dict[str, int]:
        return {
            "sound": self.sound.read(now),
            "pir": self.pir.read(now),
            "magnetic": self.door.read(now),
        }


class UnknownStimulus(ValueError):
    pass


def apply_stimulus(world: SensorWorld, ev) -> SensorWorld:
    """Update the one sensor ``ev`` targets, effective from ``ev.at``.

    ``ev`` needs ``at``, ``kind`` and ``args`` attributes (a scenario event).
    Call directives are not sensor stimuli and are rejected here.
    """
    kind, args = ev.kind, tuple(ev.args)
    if kind == "door" and args in (("open",), ("close",)):
        world.door.set_door(args[0] == "open", ev.at)
    elif kind == "intruder" and args and args[0] == "set" and len(args) == 3:
        world.pir.set_intruders([(float(args[1]), float(args[2]))], ev.at)
    elif kind == "intruder" and args == ("clear",):
        world.pir.set_intruders([], ev.at)
    elif kind == "sound" and len(args) == 2:
        world.sound.add_burst(int(args[0]), ev.at, int(args[1]))
    else:
        raise UnknownStimulus(f"not a sensor stimulus: {kind} {' '.join(map(str, args))}".rstrip())
    logger.debug("t=%d applied %s %s", ev.at, kind, args)
    return world
