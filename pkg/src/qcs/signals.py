"""Sparse test-signal synthesis and intensity-modulation rendering.

Signals are K-sparse either directly in time (a train of pulse bins) or on
an integer-cycle frequency grid (a set of tones).  Rendering maps a signal
onto a nonnegative optical intensity ``rate * (1 + depth * x(t))`` so the
photon front end can sample it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    FrequencyOutOfRange,
    InvalidArgument,
    InvalidSupport,
    ModulationOverdrive,
)

TIME_SPARSE = "time"
FREQUENCY_SPARSE = "frequency"
IDENTITY_BASIS = "identity"
FOURIER_BASIS = "fourier"

# Tones whose bin offset exceeds this snap to the nearest grid bin.
GRID_SNAP_TOL = 1e-9


@dataclass(frozen=True)
class SparseSignal:
    """A K-sparse signal: N grid bins, support indices, positive amplitudes.

    ``domain`` is "time" (identity basis) or "frequency" (cosine/Fourier
    basis); ``period`` is the signal repetition period in seconds.
    ``snapped`` records that off-grid tones were moved to their nearest bin.
    """

    dimension: int
    domain: str
    support: tuple
    amplitudes: tuple
    period: float
    basis: str
    snapped: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.dimension < 1:
            raise InvalidArgument("dimension must be a positive integer")
        if self.period <= 0:
            raise InvalidArgument("period must be positive")
        if self.domain not in (TIME_SPARSE, FREQUENCY_SPARSE):
            raise InvalidArgument(f"unknown domain {self.domain!r}")
        expected_basis = IDENTITY_BASIS if self.domain == TIME_SPARSE else FOURIER_BASIS
        if self.basis != expected_basis:
            raise InvalidArgument(
                f"{self.domain!r} signals must use the {expected_basis!r} basis"
            )
        support = tuple(int(i) for i in self.support)
        amplitudes = tuple(float(a) for a in self.amplitudes)
        if not support:
            raise InvalidSupport("support must not be empty")
        if len(support) != len(set(support)):
            raise InvalidSupport("support indices must be distinct")
        if min(support) < 0 or max(support) >= self.dimension:
            raise InvalidSupport("support indices must lie in [0, dimension)")
        if len(amplitudes) != len(support):
            raise InvalidSupport("need one amplitude per support index")
        if any(a <= 0 for a in amplitudes):
            raise InvalidArgument("amplitudes must be positive")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "amplitudes", amplitudes)

    @property
    def sparsity(self) -> int:
        return len(self.support)


@dataclass(frozen=True)
class ToneSet:
    """Tones as (frequency_hz, amplitude, phase_rad) over a time window."""

    tones: tuple
    window: float

    def __post_init__(self):
        tones = tuple((float(f), float(a), float(ph)) for f, a, ph in self.tones)
        if self.window <= 0:
            raise InvalidArgument("window must be positive")
        freqs = [f for f, _, _ in tones]
        if any(f < 0 for f in freqs):
            raise InvalidArgument("tone frequencies must be nonnegative")
        if len(freqs) != len(set(freqs)):
            raise InvalidArgument("tone frequencies must be distinct")
        if any(a <= 0 for _, a, _ in tones):
            raise InvalidArgument("tone amplitudes must be positive")
        object.__setattr__(self, "tones", tones)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([f for f, _, _ in self.tones])

    @property
    def powers(self) -> np.ndarray:
        """Relative power of each tone (amplitude squared)."""
        return np.array([a * a for _, a, _ in self.tones])


@dataclass(frozen=True)
class ModulationConfig:
    """Intensity-modulation settings: depth in (0, 1] and mean photon rate."""

    depth: float
    mean_rate: float

    def __post_init__(self):
        if not 0 < self.depth <= 1:
            raise InvalidArgument("modulation depth must be in (0, 1]")
        if self.mean_rate <= 0:
            raise InvalidArgument("mean_rate must be positive (counts/second)")


@dataclass(frozen=True)
class IntensityWaveform:
    """One period of a nonnegative intensity, sampled on a uniform grid."""

    values: np.ndarray
    period: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if self.period <= 0:
            raise InvalidArgument("period must be positive")

    @property
    def max_rate(self) -> float:
        return float(self.values.max()) if self.values.size else 0.0

    def mean_rate(self) -> float:
        return float(self.values.mean())


def make_dirac_train(n, support, amplitudes, period) -> SparseSignal:
    """A time-sparse pulse train: one pulse bin per support index."""
    return SparseSignal(
        dimension=int(n),
        domain=TIME_SPARSE,
        support=tuple(support),
        amplitudes=tuple(amplitudes),
        period=float(period),
        basis=IDENTITY_BASIS,
    )


def make_tone_signal(tones: ToneSet, n) -> SparseSignal:
    """Place tones on the length-``n`` frequency grid of their window.

    Off-grid tones snap to the nearest bin and the result is flagged
    ``snapped``.  Tones above the grid Nyquist (bin n/2) are rejected.
    """
    n = int(n)
    if not tones.tones:
        raise InvalidSupport("tone set is empty")
    bins = []
    snapped = False
    for freq, _, _ in tones.tones:
        cycles = freq * tones.window
        bin_idx = int(round(cycles))
        if abs(cycles - bin_idx) > GRID_SNAP_TOL * max(1.0, cycles):
            snapped = True
        # strictly below Nyquist: the bin-n/2 cosine is degenerate on the grid
        if 2 * bin_idx >= n:
            raise FrequencyOutOfRange(
                f"tone at {freq:g} Hz is at or above the grid Nyquist ({n / 2 / tones.window:g} Hz)"
            )
        bins.append(bin_idx)
    if len(set(bins)) != len(bins):
        raise InvalidSupport("two tones snapped to the same frequency bin")
    order = np.argsort(bins)
    return SparseSignal(
        dimension=n,
        domain=FREQUENCY_SPARSE,
        support=tuple(bins[i] for i in order),
        amplitudes=tuple(tones.tones[i][1] for i in order),
        period=float(tones.window),
        basis=FOURIER_BASIS,
        snapped=snapped,
    )


def signal_waveform(
    signal: SparseSignal, grid: int, normalize: bool = True, midpoint: bool = False
) -> np.ndarray:
    """Evaluate the signal on ``grid`` samples of one period.

    Time-sparse signals are piecewise constant over their pulse bins;
    frequency-sparse signals are sums of zero-phase cosines.  With
    ``midpoint`` each sample represents its grid cell's center, so a
    zeroth-order hold of the values carries no half-sample delay.  With
    ``normalize`` the result is scaled to unit peak magnitude.
    """
    grid = int(grid)
    if grid < signal.dimension:
        raise InvalidArgument("grid must be at least the signal dimension")
    pos = np.arange(grid) + (0.5 if midpoint else 0.0)
    if signal.domain == TIME_SPARSE:
        x = np.zeros(grid)
        bin_of_sample = (pos * signal.dimension / grid).astype(np.int64)
        for idx, amp in zip(signal.support, signal.amplitudes):
            x[bin_of_sample == idx] = amp
    else:
        x = np.zeros(grid)
        for idx, amp in zip(signal.support, signal.amplitudes):
            x += amp * np.cos(2 * np.pi * idx * pos / grid)
    if normalize:
        peak = np.abs(x).max()
        if peak > 0:
            x = x / peak
    return x


def render_intensity(
    signal: SparseSignal,
    mod: ModulationConfig,
    grid: int,
    normalize: bool = True,
) -> IntensityWaveform:
    """Render ``rate * (1 + depth * x(t))`` over one period.

    With the default peak normalization and depth <= 1 the result is
    nonnegative for every signal; disabling normalization raises
    ``ModulationOverdrive`` if the raw amplitudes overdrive the modulator.
    Samples are taken at grid-cell centers so the held waveform stays
    phase-aligned with the continuous signal.
    """
    x = signal_waveform(signal, grid, normalize=normalize, midpoint=True)
    values = mod.mean_rate * (1.0 + mod.depth * x)
    if values.min() < 0:
        raise ModulationOverdrive(
            "modulation depth too large for unnormalized signal amplitudes"
        )
    return IntensityWaveform(values=values, period=signal.period)


def constant_intensity(rate: float, period: float, grid: int = 1) -> IntensityWaveform:
    """A flat waveform at ``rate`` counts/second."""
    if rate < 0:
        raise InvalidArgument("rate must be nonnegative")
    return IntensityWaveform(values=np.full(int(grid), float(rate)), period=float(period))


def signal_to_json(signal: SparseSignal) -> dict:
    return {
        "dimension": signal.dimension,
        "domain": signal.domain,
        "support": list(signal.support),
        "amplitudes": list(signal.amplitudes),
        "period_s": signal.period,
        "basis": signal.basis,
    }


def signal_from_json(doc: dict) -> SparseSignal:
    return SparseSignal(
        dimension=int(doc["dimension"]),
        domain=str(doc["domain"]),
        support=tuple(doc["support"]),
        amplitudes=tuple(doc["amplitudes"]),
        period=float(doc["period_s"]),
        basis=str(doc["basis"]),
    )


def save_signal(signal: SparseSignal, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(signal_to_json(signal), fh, indent=2)
        fh.write("\n")


def load_signal(path) -> SparseSignal:
    with open(path, "r", encoding="utf-8") as fh:
        return signal_from_json(json.load(fh))
