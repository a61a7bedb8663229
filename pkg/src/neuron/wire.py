"""UDP wire format and latest-wins packet ingestion.

Datagrams are UTF-8 JSON with keys ``type`` ("raw" | "fft" | "bandPower"),
``seq`` (uint64), ``ts`` (epoch ms), ``channels`` (uint), ``data`` (channels
arrays of numbers).  The full schema lives in docs/wire.md; adapters for real
headset software target this boundary.
"""

from __future__ import annotations

import json
import socket
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .errors import DatagramTooLarge, IoError, ParseError, ShapeMismatch, UnknownKind

MAX_DATAGRAM = 64 * 1024
DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 12345


class PacketKind(str, Enum):
    RAW_WINDOW = "raw"
    FFT_FRAME = "fft"
    BAND_POWER_FRAME = "bandPower"


@dataclass(frozen=True)
class WirePacket:
    kind: PacketKind
    seq: int
    timestamp_ms: int
    channels: int
    payload: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(float(v) for v in row) for row in self.payload)
        object.__setattr__(self, "payload", rows)
        if self.channels < 1:
            raise ValueError("channels must be >= 1")
        if len(rows) != self.channels:
            raise ShapeMismatch(f"payload has {len(rows)} rows, declared channels={self.channels}")
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise ShapeMismatch(f"ragged payload rows: widths {sorted(widths)}")
        if self.kind in (PacketKind.FFT_FRAME, PacketKind.BAND_POWER_FRAME):
            if any(v < 0 for row in rows for v in row):
                raise ParseError(f"{self.kind.value} payload must be non-negative")

    @property
    def width(self) -> int:
        return len(self.payload[0])

    def matrix(self) -> list[list[float]]:
        return [list(r) for r in self.payload]


def parse_packet(data: bytes) -> WirePacket:
    """Decode and validate one datagram."""
    try:
        obj = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ParseError(f"bad datagram: {e}") from None
    if not isinstance(obj, dict):
        raise ParseError("datagram must be a JSON object")
    try:
        kind_str = obj["type"]
        seq = int(obj["seq"])
        ts = int(obj["ts"])
        channels = int(obj["channels"])
        rows = obj["data"]
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"missing/bad field: {e}") from None
    try:
        kind = PacketKind(kind_str)
    except ValueError:
        raise UnknownKind(f"unknown packet type {kind_str!r}") from None
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise ParseError("data must be an array of arrays")
    return WirePacket(kind=kind, seq=seq, timestamp_ms=ts, channels=channels,
                      payload=tuple(tuple(r) for r in rows))


def encode_packet(packet: WirePacket) -> bytes:
    """Inverse of parse_packet; one datagram, capped at 64 KiB."""
    obj = {
        "type": packet.kind.value,
        "seq": packet.seq,
        "ts": packet.timestamp_ms,
        "channels": packet.channels,
        "data": packet.matrix(),
    }
    data = json.dumps(obj, separators=(",", ":")).encode("utf-8")
    if len(data) > MAX_DATAGRAM:
        raise DatagramTooLarge(f"{len(data)} bytes exceeds {MAX_DATAGRAM}")
    return data


@dataclass(frozen=True)
class Received:
    packet: WirePacket
    stale: bool
    dropped: int


class UdpReceiver:
    """Non-blocking latest-wins receiver.

    Each poll drains every queued datagram and keeps only the newest valid
    packet (tracked per packet kind, so mixed streams on one port do not
    starve a kind-filtered consumer); older queued frames are counted as
    dropped.  Packets with a sequence number at or below the last kept one
    are ignored, so the delivered seq never goes backwards.
    """

    def __init__(self, host: str = DEFAULT_HOST, port: int = DEFAULT_PORT):
        try:
            self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
            self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_RCVBUF, 1 << 20)
            self._sock.bind((host, port))
            self._sock.setblocking(False)
        except OSError as e:
            raise IoError(f"cannot bind UDP {host}:{port}: {e}") from None
        self._latest: dict[PacketKind, WirePacket] = {}
        self._fresh: set[PacketKind] = set()
        self._max_seq = -1
        self.parse_failures = 0
        self.dropped_total = 0

    @property
    def port(self) -> int:
        return self._sock.getsockname()[1]

    def _drain(self) -> int:
        drained = 0
        while True:
            try:
                data, _ = self._sock.recvfrom(MAX_DATAGRAM)
            except BlockingIOError:
                return drained
            except OSError as e:
                raise IoError(f"UDP receive failed: {e}") from None
            try:
                packet = parse_packet(data)
            except (ParseError, UnknownKind, ShapeMismatch):
                self.parse_failures += 1
                continue
            if packet.seq <= self._max_seq and packet.kind in self._latest:
                continue
            self._max_seq = max(self._max_seq, packet.seq)
            if packet.kind in self._latest and packet.kind in self._fresh:
                self.dropped_total += 1
            self._latest[packet.kind] = packet
            self._fresh.add(packet.kind)
            drained += 1

    def receive_latest(self, kind: PacketKind | None = None) -> Received | None:
        """Most recent packet (optionally of one kind); None until data arrives."""
        dropped_now = self._drain()
        candidates = ([self._latest[kind]] if kind is not None and kind in self._latest
                      else [] if kind is not None
                      else sorted(self._latest.values(), key=lambda p: p.seq))
        if not candidates:
            return None
        packet = candidates[-1]
        stale = packet.kind not in self._fresh
        self._fresh.discard(packet.kind)
        return Received(packet=packet, stale=stale, dropped=max(0, dropped_now - 1))

    def close(self) -> None:
        self._sock.close()


class UdpSender:
    def __init__(self, host: str = DEFAULT_HOST, port: int = DEFAULT_PORT):
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._dest = (host, port)

    def send(self, packet: WirePacket) -> None:
        self._sock.sendto(encode_packet(packet), self._dest)

    def close(self) -> None:
        self._sock.close()
