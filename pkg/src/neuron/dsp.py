"""Spectral estimation and band-power reduction.

Raw windows become one-sided power spectra (Hann window, 1/n power
normalization, so the bins sum to the mean square of the windowed signal).
Band powers are plain sums over the bins whose center frequency falls in
``[lo, hi)``; a band ending exactly at Nyquist also takes the Nyquist bin,
which keeps partitions of the full range exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datatree import DataTree
from .errors import BadWindowLength, BandOutOfRange

MIN_WINDOW = 32


@dataclass(frozen=True)
class BandSpec:
    name: str
    lo_hz: float
    hi_hz: float

    def __post_init__(self):
        if not (0 <= self.lo_hz < self.hi_hz):
            raise ValueError(f"band {self.name}: need 0 <= lo < hi, got [{self.lo_hz}, {self.hi_hz})")


DEFAULT_BANDS = (
    BandSpec("delta", 0.5, 4.0),
    BandSpec("theta", 4.0, 8.0),
    BandSpec("alpha", 8.0, 12.0),
    BandSpec("beta", 12.0, 30.0),
    BandSpec("gamma", 30.0, 50.0),
)

# The motor-cortex mu rhythm; band edges are configurable, this is the default.
MU_BAND = BandSpec("mu", 8.0, 13.0)


@dataclass(frozen=True)
class Spectrum:
    """One-sided power spectrum for one or more channels.

    ``bins`` has shape (channels, n_fft // 2 + 1); bin k is centered at
    k * fs / n_fft.
    """

    fs_hz: float
    n_fft: int
    bins: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "bins", np.atleast_2d(np.asarray(self.bins, dtype=np.float64)))
        if self.bins.shape[1] != self.n_fft // 2 + 1:
            raise ValueError(f"expected {self.n_fft // 2 + 1} bins, got {self.bins.shape[1]}")

    @property
    def channels(self) -> int:
        return self.bins.shape[0]

    def bin_freqs(self) -> np.ndarray:
        return np.arange(self.n_fft // 2 + 1) * self.fs_hz / self.n_fft


def fft_spectrum(window: np.ndarray, fs_hz: float) -> Spectrum:
    """Hann-windowed one-sided power spectrum of a channels x n sample block."""
    window = np.atleast_2d(np.asarray(window, dtype=np.float64))
    n = window.shape[1]
    if n < MIN_WINDOW or (n & (n - 1)) != 0:
        raise BadWindowLength(f"window length must be a power of two >= {MIN_WINDOW}, got {n}")
    taper = np.hanning(n)
    spec = np.fft.rfft(window * taper, axis=1)
    power = (np.abs(spec) ** 2) / n**2
    # fold the redundant negative-frequency halves into the interior bins
    power[:, 1:-1] *= 2.0
    # Parseval: bins now sum to mean((taper * x)**2) per channel
    return Spectrum(fs_hz=float(fs_hz), n_fft=n, bins=power)


def _band_mask(spec: Spectrum, band: BandSpec) -> np.ndarray:
    nyquist = spec.fs_hz / 2.0
    if band.hi_hz > nyquist:
        raise BandOutOfRange(f"band {band.name} [{band.lo_hz}, {band.hi_hz}) exceeds Nyquist {nyquist}")
    freqs = spec.bin_freqs()
    mask = (freqs >= band.lo_hz) & (freqs < band.hi_hz)
    if band.hi_hz == nyquist:
        mask |= freqs == nyquist
    return mask


def band_power(spec: Spectrum, band: BandSpec) -> np.ndarray:
    """Per-channel sum of the bins whose center frequency lies in the band."""
    return spec.bins[:, _band_mask(spec, band)].sum(axis=1)


def band_matrix(spec: Spectrum, bands: list[BandSpec] | tuple[BandSpec, ...]) -> DataTree:
    """Channels x bands tree: branch (channel,) holds powers in band-list order."""
    if not bands:
        raise BandOutOfRange("band list must be non-empty")
    cols = np.stack([band_power(spec, b) for b in bands], axis=1)
    return DataTree.from_matrix(cols.tolist())
