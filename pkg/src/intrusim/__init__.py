"""Deterministic simulator of a PIR/sound/door-contact alarm that calls and texts its owner through a virtual SIM800L."""

from .config import SimConfig, parse_config
from .controller import FirmwareConfig, controller_tick, dial_sequence, sms_sequence
from .kernel import Kernel, SerialChannel
from .modem import ModemState, modem_feed, parse_command_line
from .runner import check_expectations, run
from .scenario import parse_scenario

__all__ = [
    "FirmwareConfig",
    "Kernel",
    "ModemState",
    "SerialChannel",
    "SimConfig",
    "check_expectations",
    "controller_tick",
    "dial_sequence",
    "modem_feed",
    "parse_command_line",
    "parse_config",
    "parse_scenario",
    "run",
    "sms_sequence",
]
