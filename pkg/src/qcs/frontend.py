"""Photon-arrival simulation and the detector imperfection layer.

Arrivals from a coherent source follow an inhomogeneous Poisson process
with the rendered intensity as its rate; the detector layer applies
Bernoulli thinning (efficiency), homogeneous dark counts, exponentially
modified Gaussian (EMG) timing jitter, and a linear clock skew.

Timestamps are integer picoseconds (the TDC resolution).  Quantization is
round-to-nearest and happens after jitter, so sub-picosecond jitter still
shows up in aggregate statistics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import exponnorm, norm

from .errors import InvalidArgument, InvalidIntensity
from .signals import TIME_SPARSE, IntensityWaveform, SparseSignal

PS_PER_S = 10**12

# FWHM of a Gaussian = 2*sqrt(2*ln 2) * sigma
GAUSSIAN_FWHM_FACTOR = 2.0 * np.sqrt(2.0 * np.log(2.0))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class JitterModel:
    """EMG timing response: Gaussian(mu, sigma) convolved with Exp(tau).

    Sample mean is mu + tau and variance sigma^2 + tau^2.  sigma = tau = 0
    degenerates to a pure delay; it is accepted so the ideal limit stays
    expressible, but bandwidth queries on it are unbounded.
    """

    mu: float = 0.0
    sigma: float = 0.0
    tau: float = 0.0

    def __post_init__(self):
        if self.sigma < 0 or self.tau < 0:
            raise InvalidArgument("jitter sigma and tau must be nonnegative")

    @property
    def degenerate(self) -> bool:
        return self.sigma == 0 and self.tau == 0

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        delays = np.full(size, self.mu)
        if self.sigma > 0:
            delays = delays + rng.normal(0.0, self.sigma, size)
        if self.tau > 0:
            delays = delays + rng.exponential(self.tau, size)
        return delays

    def pdf(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.degenerate:
            raise InvalidArgument("degenerate jitter model has no density")
        if self.tau == 0:
            return norm.pdf(t, loc=self.mu, scale=self.sigma)
        if self.sigma == 0:
            out = np.where(t >= self.mu, np.exp(-(t - self.mu) / self.tau) / self.tau, 0.0)
            return out
        return exponnorm.pdf(t, self.tau / self.sigma, loc=self.mu, scale=self.sigma)

    @staticmethod
    def from_fwhm(fwhm: float, tau: float = 0.0, mu: float = 0.0) -> "JitterModel":
        """Gaussian-dominated model with the given full width at half maximum."""
        if fwhm <= 0:
            raise InvalidArgument("fwhm must be positive")
        return JitterModel(mu=mu, sigma=fwhm / GAUSSIAN_FWHM_FACTOR, tau=tau)


@dataclass(frozen=True)
class DetectorModel:
    """Detection efficiency, dark counts, timing jitter, and clock skew."""

    efficiency: float = 1.0
    dark_rate: float = 0.0
    jitter: JitterModel | None = None
    clock_skew: float = 0.0

    def __post_init__(self):
        if not 0 < self.efficiency <= 1:
            raise InvalidArgument("efficiency must be in (0, 1]")
        if self.dark_rate < 0:
            raise InvalidArgument("dark_rate must be nonnegative")


@dataclass(frozen=True)
class PhotonStream:
    """Sorted detection timestamps in integer picoseconds over a span."""

    timestamps: np.ndarray
    span_ps: int

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "span_ps", int(self.span_ps))
        if self.span_ps < 0:
            raise InvalidArgument("span must be nonnegative")
        if ts.size:
            if np.any(np.diff(ts) < 0):
                raise InvalidArgument("timestamps must be nondecreasing")
            if ts[0] < 0 or ts[-1] > self.span_ps:
                raise InvalidArgument("timestamps must lie within [0, span]")

    @property
    def count(self) -> int:
        return int(self.timestamps.size)

    @property
    def span(self) -> float:
        """Observation span in seconds."""
        return self.span_ps / PS_PER_S

    def seconds(self) -> np.ndarray:
        return self.timestamps / PS_PER_S


def click_probability(mean_photons: float) -> float:
    """Probability that a non-number-resolving detector clicks: 1 - exp(-mu)."""
    if mean_photons < 0:
        raise InvalidArgument("mean photon number must be nonnegative")
    return float(-np.expm1(-mean_photons))


def sample_arrivals(waveform: IntensityWaveform, span: float, seed=None) -> PhotonStream:
    """Inhomogeneous Poisson arrivals over ``span`` seconds.

    The waveform repeats with its own period; sampling thins a homogeneous
    candidate process at the waveform's peak rate, which is exact for any
    nonnegative rate profile.
    """
    if span <= 0:
        raise InvalidArgument("span must be positive")
    values = waveform.values
    if values.size == 0 or np.any(values < 0):
        raise InvalidIntensity("intensity waveform must be nonnegative and nonempty")
    rng = _rng(seed)
    span_ps = int(round(span * PS_PER_S))
    lam_max = float(values.max())
    if lam_max == 0:
        return PhotonStream(timestamps=np.empty(0, dtype=np.int64), span_ps=span_ps)
    n_candidates = rng.poisson(lam_max * span)
    times = rng.uniform(0.0, span, n_candidates)
    grid = values.size
    idx = ((times % waveform.period) / waveform.period * grid).astype(np.int64)
    np.clip(idx, 0, grid - 1, out=idx)
    accept = rng.random(n_candidates) < values[idx] / lam_max
    kept = np.round(times[accept] * PS_PER_S).astype(np.int64)
    kept = kept[(kept >= 0) & (kept <= span_ps)]
    kept.sort()
    return PhotonStream(timestamps=kept, span_ps=span_ps)


def sample_pulse_detections(
    signal: SparseSignal, p: float, n_periods: int, seed=None
) -> PhotonStream:
    """Bernoulli-per-pulse detection of a cyclically replayed pulse train.

    Each nonzero bin yields at most one detection per period, independently
    with probability ``p``; timestamps sit at the pulse-bin centers.  This
    is the idealized click model the coverage statistics are built on (the
    Poisson path cannot enforce the one-detection-per-pulse constraint).
    """
    if signal.domain != TIME_SPARSE:
        raise InvalidArgument("pulse detection applies to time-sparse signals")
    if not 0 < p <= 1:
        raise InvalidArgument("detection probability must be in (0, 1]")
    if n_periods < 1:
        raise InvalidArgument("need at least one period")
    rng = _rng(seed)
    n = signal.dimension
    period_ps = signal.period * PS_PER_S
    support = np.sort(np.array(signal.support, dtype=np.int64))
    hits = rng.random((n_periods, support.size)) < p
    periods, pulses = np.nonzero(hits)
    centers = (support[pulses] + 0.5) / n
    ts = np.round((periods + centers) * period_ps).astype(np.int64)
    span_ps = int(round(n_periods * period_ps))
    ts = np.sort(np.clip(ts, 0, span_ps))
    return PhotonStream(timestamps=ts, span_ps=span_ps)


def apply_detector(stream: PhotonStream, det: DetectorModel, seed=None) -> PhotonStream:
    """Apply efficiency thinning, dark counts, jitter, and clock skew.

    Surviving photon timestamps get an independent EMG jitter draw; dark
    counts arrive homogeneously over the span; the skew scales every
    timestamp by (1 + epsilon).  Events leaving [0, span] are dropped.
    """
    rng = _rng(seed)
    times = stream.timestamps / PS_PER_S
    if det.efficiency < 1:
        times = times[rng.random(times.size) < det.efficiency]
    if det.jitter is not None:
        times = times + det.jitter.sample(rng, times.size)
    if det.dark_rate > 0:
        n_dark = rng.poisson(det.dark_rate * stream.span)
        times = np.concatenate([times, rng.uniform(0.0, stream.span, n_dark)])
    if det.clock_skew != 0:
        times = times * (1.0 + det.clock_skew)
    ts = np.round(times * PS_PER_S).astype(np.int64)
    ts = ts[(ts >= 0) & (ts <= stream.span_ps)]
    ts.sort()
    return PhotonStream(timestamps=ts, span_ps=stream.span_ps)


def save_stream(stream: PhotonStream, path) -> None:
    """Write the on-disk format: a span header then one timestamp per line."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# span_ps={stream.span_ps}\n")
        for t in stream.timestamps:
            fh.write(f"{t}\n")


def load_stream(path) -> PhotonStream:
    span_ps = None
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                if key.strip() == "span_ps":
                    span_ps = int(val)
                continue
            values.append(int(line))
    if span_ps is None:
        raise InvalidArgument(f"{path}: missing '# span_ps=' header")
    return PhotonStream(timestamps=np.array(values, dtype=np.int64), span_ps=span_ps)
