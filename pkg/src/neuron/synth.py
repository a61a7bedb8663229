"""Synthetic multi-channel EEG generator.

Stands in for a physical headset: each channel is a sum of band-centered
sinusoids plus white Gaussian noise, so the band-power ground truth is known
analytically.  Scripts are ordered segments, each holding per-band amplitudes
on named channel groups.  The generator emits raw windows, FFT frames, and
band-power frames over UDP (or as an in-process iterator for tests and
deterministic replay).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Iterator, Sequence

import numpy as np

from . import dsp
from .layout import ChannelLayout, DEFAULT_LAYOUT
from .wire import PacketKind, UdpSender, WirePacket

DEFAULT_FS_HZ = 125.0
DEFAULT_FRAME_RATE = 25.0
DEFAULT_WINDOW = 256


@dataclass(frozen=True)
class BandDrive:
    """One scripted oscillation: amplitude (arbitrary uV-like units) of a
    sinusoid at the band's center frequency on the listed channels."""

    band: str
    channels: tuple[str, ...]
    amplitude: float

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")
        object.__setattr__(self, "channels", tuple(self.channels))


@dataclass(frozen=True)
class Segment:
    duration_s: float
    drives: tuple[BandDrive, ...] = ()
    noise_std: float = 1.0

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError("segment duration must be > 0")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        object.__setattr__(self, "drives", tuple(self.drives))


@dataclass(frozen=True)
class StateScript:
    segments: tuple[Segment, ...]

    def __post_init__(self):
        if not self.segments:
            raise ValueError("script needs at least one segment")
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def total_seconds(self) -> float:
        return sum(s.duration_s for s in self.segments)

    @classmethod
    def from_json(cls, text: str) -> "StateScript":
        raw = json.loads(text)
        segments = []
        for seg in raw:
            drives = tuple(
                BandDrive(band=d["band"], channels=tuple(d["channels"]), amplitude=float(d["amplitude"]))
                for d in seg.get("drives", [])
            )
            segments.append(Segment(duration_s=float(seg["duration_s"]), drives=drives,
                                     noise_std=float(seg.get("noise_std", 1.0))))
        return cls(segments=tuple(segments))

    @classmethod
    def load(cls, path: FsPath | str) -> "StateScript":
        return cls.from_json(FsPath(path).read_text(encoding="utf-8"))


def band_center(name: str, bands: Sequence[dsp.BandSpec] = dsp.DEFAULT_BANDS) -> float:
    for b in bands:
        if b.name == name:
            return (b.lo_hz + b.hi_hz) / 2.0
    raise ValueError(f"unknown band {name!r}")


class SynthGenerator:
    """Deterministic frame source for a script.

    Every frame step produces a fresh raw window with phase-continuous
    sinusoids, its spectrum, and its band powers; one packet per requested
    kind, sequence numbers strictly increasing across kinds.
    """

    def __init__(
        self,
        script: StateScript,
        fs_hz: float = DEFAULT_FS_HZ,
        frame_rate: float = DEFAULT_FRAME_RATE,
        window: int = DEFAULT_WINDOW,
        layout: ChannelLayout = DEFAULT_LAYOUT,
        bands: Sequence[dsp.BandSpec] = dsp.DEFAULT_BANDS,
        kinds: Sequence[PacketKind] = (PacketKind.RAW_WINDOW, PacketKind.FFT_FRAME,
                                       PacketKind.BAND_POWER_FRAME),
        seed: int = 0,
    ):
        if fs_hz <= 0 or frame_rate <= 0:
            raise ValueError("fs and frame rate must be > 0")
        self.script = script
        self.fs = float(fs_hz)
        self.frame_rate = float(frame_rate)
        self.window = int(window)
        self.layout = layout
        self.bands = tuple(bands)
        self.kinds = tuple(kinds)
        self._rng = np.random.default_rng(seed)
        self._seq = 0

    def _segment_at(self, t: float) -> Segment | None:
        acc = 0.0
        for seg in self.script.segments:
            acc += seg.duration_s
            if t < acc:
                return seg
        return None

    def _raw_window(self, t0: float, segment: Segment) -> np.ndarray:
        n, ch = self.window, self.layout.channels
        t = t0 + np.arange(n) / self.fs
        out = self._rng.normal(0.0, segment.noise_std, size=(ch, n))
        for drive in segment.drives:
            f = band_center(drive.band, self.bands)
            wave = drive.amplitude * np.sin(2 * np.pi * f * t)
            for name in drive.channels:
                out[self.layout.index(name)] += wave
        return out

    def frames(self) -> Iterator[tuple[float, WirePacket]]:
        """Yields (frame time offset seconds, packet) until the script ends."""
        step = 0
        while True:
            t = step / self.frame_rate
            segment = self._segment_at(t)
            if segment is None:
                return
            raw = self._raw_window(t, segment)
            spectrum = dsp.fft_spectrum(raw, self.fs)
            band_tree = dsp.band_matrix(spectrum, list(self.bands))
            payloads = {
                PacketKind.RAW_WINDOW: raw.tolist(),
                PacketKind.FFT_FRAME: spectrum.bins.tolist(),
                PacketKind.BAND_POWER_FRAME: [list(v) for _, v in band_tree.items()],
            }
            ts_ms = int(round(t * 1000.0))
            for kind in self.kinds:
                self._seq += 1
                yield t, WirePacket(kind=kind, seq=self._seq, timestamp_ms=ts_ms,
                                    channels=self.layout.channels,
                                    payload=tuple(tuple(r) for r in payloads[kind]))
            step += 1


def synth_stream(
    script: StateScript,
    host: str = "127.0.0.1",
    port: int = 12345,
    realtime: bool = True,
    **kwargs,
) -> int:
    """Stream a script over UDP; returns the number of packets sent."""
    gen = SynthGenerator(script, **kwargs)
    sender = UdpSender(host, port)
    sent = 0
    start = time.monotonic()
    try:
        for t, packet in gen.frames():
            if realtime:
                lag = start + t - time.monotonic()
                if lag > 0:
                    time.sleep(lag)
            sender.send(packet)
            sent += 1
    finally:
        sender.close()
    return sent
