"""``key = value`` configuration files.

Every key is optional; absent keys keep the firmware defaults. Unknown keys
and out-of-range values are errors that name the key and line.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields

from .controller import ConfigError, FirmwareConfig, Policy
from .kernel import DEFAULT_BAUD
from .sensors import MagneticSwitch, PirSensor, SensorWorld, SoundSensor

_ESCAPE_RE = re.compile(r'\\(x[0-9A-Fa-f]{2}|[\\"nrt0])')
_SIMPLE_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t", "0": "\0"}


def unescape(text: str) -> bytes:
    r"""Decode ``\n \r \t \0 \\ \" \xHH`` escapes; everything else is literal UTF-8."""

    def sub(m: re.Match) -> str:
        esc = m.group(1)
        if esc[0] == "x":
            return chr(int(esc[1:], 16))
        return _SIMPLE_ESCAPES[esc]

    # \xHH must map to a single byte, so route through latin-1 per character
    out = bytearray()
    pos = 0
    for m in _ESCAPE_RE.finditer(text):
        out += text[pos:m.start()].encode("utf-8")
        out += sub(m).encode("latin-1")
        pos = m.end()
    out += text[pos:].encode("utf-8")
    return bytes(out)


@dataclass(frozen=True)
class PirGeometry:
    x: float = 0.0
    y: float = 0.0
    facing_deg: float = 0.0
    half_angle_deg: float = 45.0
    range_m: float = 6.1
    hold_ms: int = 2000


@dataclass(frozen=True)
class SimConfig:
    firmware: FirmwareConfig = field(default_factory=FirmwareConfig)
    pir: PirGeometry = field(default_factory=PirGeometry)
    sound_baseline: int = 0
    baud: int = DEFAULT_BAUD
    modem_echo: bool = False

    def build_world(self) -> SensorWorld:
        return SensorWorld(
            pir=PirSensor(
                position=(self.pir.x, self.pir.y),
                facing=self.pir.facing_deg,
                half_angle=self.pir.half_angle_deg,
                range_m=self.pir.range_m,
                hold_ms=self.pir.hold_ms,
            ),
            sound=SoundSensor(baseline_counts=self.sound_baseline),
            door=MagneticSwitch(),
        )


def _parse_int(raw: str) -> int:
    return int(raw.replace("_", ""), 10)


def _parse_float(raw: str) -> float:
    value = float(raw)
    if not math.isfinite(value):
        raise ValueError("not finite")
    return value


def _parse_bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true/false")


def _parse_str(raw: str) -> str:
    if len(raw) >= 2 and raw[0] == raw[-1] == '"':
        return raw[1:-1]
    return raw


def _parse_bytes(raw: str) -> bytes:
    if len(raw) >= 2 and raw[0] == raw[-1] == '"':
        return unescape(raw[1:-1])
    return unescape(raw)


# key -> (section, field name, parser)
_KEYS = {
    "owner_number": ("firmware", "owner_number", _parse_str),
    "sound_threshold": ("firmware", "sound_threshold", _parse_int),
    "sample_period_ms": ("firmware", "sample_period_ms", _parse_int),
    "boot_delay_ms": ("firmware", "boot_delay_ms", _parse_int),
    "indicator_on_ms": ("firmware", "indicator_on_ms", _parse_int),
    "indicator_off_ms": ("firmware", "indicator_off_ms", _parse_int),
    "post_dial_wait_ms": ("firmware", "post_dial_wait_ms", _parse_int),
    "sms_step_ms": ("firmware", "sms_step_ms", _parse_int),
    "sound_policy": ("firmware", "sound_policy", Policy),
    "pir_policy": ("firmware", "pir_policy", Policy),
    "magnetic_policy": ("firmware", "magnetic_policy", Policy),
    "sms_text": ("firmware", "sms_text", _parse_bytes),
    "pir_x": ("pir", "x", _parse_float),
    "pir_y": ("pir", "y", _parse_float),
    "pir_facing_deg": ("pir", "facing_deg", _parse_float),
    "pir_half_angle_deg": ("pir", "half_angle_deg", _parse_float),
    "pir_range_m": ("pir", "range_m", _parse_float),
    "pir_hold_ms": ("pir", "hold_ms", _parse_int),
    "sound_baseline": ("sim", "sound_baseline", _parse_int),
    "baud": ("sim", "baud", _parse_int),
    "modem_echo": ("sim", "modem_echo", _parse_bool),
}


def _check_sim(values: dict, where: dict) -> None:
    if not 0 <= values.get("sound_baseline", 0) <= 1023:
        raise ConfigError(f"line {where['sound_baseline']}: sound_baseline must be in [0, 1023]")
    if values.get("baud", DEFAULT_BAUD) <= 0:
        raise ConfigError(f"line {where['baud']}: baud must be positive")


def parse_config(text: str) -> SimConfig:
    sections: dict[str, dict] = {"firmware": {}, "pir": {}, "sim": {}}
    where: dict[str, int] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in where:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first set on line {where[key]})")
        section, name, parser = _KEYS[key]
        try:
            sections[section][name] = parser(raw)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {raw!r} ({exc})") from None
        where[key] = lineno

    try:
        firmware = FirmwareConfig(**sections["firmware"])
    except ConfigError as exc:
        bad = next((f.name for f in fields(FirmwareConfig) if f.name in str(exc)), None)
        line = f"line {where[bad]}: " if bad in where else ""
        raise ConfigError(f"{line}{exc}") from None
    try:
        pir = PirGeometry(**sections["pir"])
        PirSensor(position=(pir.x, pir.y), facing=pir.facing_deg, half_angle=pir.half_angle_deg,
                  range_m=pir.range_m, hold_ms=pir.hold_ms)
    except ValueError as exc:
        bad = next((k for k in ("pir_half_angle_deg", "pir_range_m", "pir_hold_ms")
                    if k[4:].removesuffix("_deg") in str(exc)), None)
        line = f"line {where[bad]}: " if bad in where else ""
        raise ConfigError(f"{line}{bad or 'pir geometry'}: {exc}") from None
    _check_sim(sections["sim"], where)
    return SimConfig(firmware=firmware, pir=pir, **sections["sim"])
