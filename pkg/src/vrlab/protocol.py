"""Wire protocol for live sessions: JSON text frames over a WebSocket.

Message shapes are documented in PROTOCOL.md. This module validates inbound
client messages; outbound messages are built by the server.
"""
from __future__ import annotations

from typing import Any

CLIENT_TYPES = ("init", "force", "probe")
SERVER_TYPES = ("ready", "frame", "fit", "verdict", "probe_report", "error")
PROBE_KINDS = ("force_schedule", "stop_and_release", "coupling_sweep", "battery")


class ProtocolError(ValueError):
    pass


def parse_client_message(data: Any) -> dict:
    if not isinstance(data, dict):
        raise ProtocolError("message must be a JSON object")
    mtype = data.get("type")
    if mtype not in CLIENT_TYPES:
        raise ProtocolError(f"unknown message type {mtype!r}")
    if mtype == "init":
        if not isinstance(data.get("calculator"), str):
            raise ProtocolError("init requires a calculator id")
        sensor = data.get("sensor", {})
        if not isinstance(sensor, dict):
            raise ProtocolError("init.sensor must be an object")
        params = data.get("params", {})
        if not isinstance(params, dict):
            raise ProtocolError("init.params must be an object")
        speed = data.get("speed")
        if speed is not None and not isinstance(speed, (int, float)):
            raise ProtocolError("init.speed must be a number")
    elif mtype == "force":
        for key in ("fx", "fy"):
            if not isinstance(data.get(key), (int, float)):
                raise ProtocolError(f"force requires numeric {key}")
    elif mtype == "probe":
        if data.get("kind") not in PROBE_KINDS:
            raise ProtocolError(f"unknown probe kind {data.get('kind')!r}")
    return data
