"""Triangular-sweep CWLFM waveform generation and path-delay application.

The radar record is a single up/down frequency sweep: the first half of the
record sweeps instantaneous frequency linearly from -B/2 to +B/2, the second
half sweeps back down to -B/2, with continuous phase at the turnaround.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

# Fraction of the record duration used as the nominal maximum path delay.
# Delays beyond this are allowed but flagged with a warning.
MAX_DELAY_FRAC = 0.01


@dataclass(frozen=True)
class ChirpParams:
    """Parameters of the triangular CWLFM sweep.

    Defaults give the 30 MHz complex-baseband configuration; num_samples is
    1000 for desk-scale experiments and 40000 for the full-length record.
    """

    sample_rate_hz: float = 30e6
    bandwidth_hz: float = 24e6
    num_samples: int = 1000
    amplitude: float = 1.0

    def validate(self) -> None:
        if self.sample_rate_hz <= 0:
            raise ConfigError("sample_rate_hz must be positive")
        if not 0 < self.bandwidth_hz < self.sample_rate_hz:
            raise ConfigError(
                "bandwidth_hz must satisfy 0 < bandwidth_hz < sample_rate_hz "
                f"(complex Nyquist); got {self.bandwidth_hz} at fs={self.sample_rate_hz}"
            )
        if self.num_samples <= 0:
            raise ConfigError("num_samples must be positive")
        if self.num_samples % 2 != 0:
            raise ConfigError("num_samples must be even (equal sweep halves)")
        if self.num_samples % 8 != 0:
            raise ConfigError(
                "num_samples must be divisible by 8 (three pooling stages of 2)"
            )
        if self.amplitude <= 0:
            raise ConfigError("amplitude must be positive")

    @property
    def duration_s(self) -> float:
        return self.num_samples / self.sample_rate_hz

    @property
    def slope_hz_per_s(self) -> float:
        """Sweep rate of each half: full bandwidth over half the record."""
        return self.bandwidth_hz / (self.duration_s / 2.0)


@dataclass
class IQSignal:
    """Complex baseband sample sequence with its sample rate.

    Samples are stored as complex64 (32-bit I and Q components).
    """

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(np.asarray(self.samples), dtype=np.complex64)
        if arr.ndim != 1 or arr.size == 0:
            raise ConfigError("IQSignal requires a non-empty 1-D sample array")
        if not np.all(np.isfinite(arr.view(np.float32))):
            raise ConfigError("IQSignal samples must be finite")
        self.samples = arr
        self.sample_rate_hz = float(self.sample_rate_hz)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def power(self) -> float:
        """Mean squared magnitude, accumulated in float64."""
        x = self.samples
        return float(np.mean(x.real.astype(np.float64) ** 2 + x.imag.astype(np.float64) ** 2))


def generate_cwlfm(params: ChirpParams) -> IQSignal:
    """Generate one triangular up/down sweep at constant modulus.

    Phase is computed in closed form per half (quadratic in time) and the
    downsweep is anchored to the upsweep's terminal phase, so the phase is
    continuous at the midpoint and the instantaneous frequency hits -B/2,
    +B/2, -B/2 at the start, middle, and end of the record.
    """
    params.validate()
    fs = params.sample_rate_hz
    bw = params.bandwidth_hz
    n = params.num_samples
    half = n // 2
    k = params.slope_hz_per_s

    t = np.arange(half, dtype=np.float64) / fs
    phase_up = 2.0 * np.pi * (-0.5 * bw * t + 0.5 * k * t * t)
    t_half = half / fs
    phase_mid = 2.0 * np.pi * (-0.5 * bw * t_half + 0.5 * k * t_half * t_half)
    phase_down = phase_mid + 2.0 * np.pi * (0.5 * bw * t - 0.5 * k * t * t)

    phase = np.concatenate([phase_up, phase_down])
    samples = params.amplitude * np.exp(1j * phase)
    return IQSignal(samples.astype(np.complex64), fs)


def apply_delay(sig: IQSignal, delay_s: float) -> IQSignal:
    """Circularly delay a signal by an arbitrary (fractional) time.

    Implemented as a full-length frequency-domain linear phase ramp, which is
    unitary (energy preserving) and exact for integer-sample delays. Wrap-around
    is negligible for delays up to MAX_DELAY_FRAC of the record; larger delays
    are accepted with a warning.
    """
    if delay_s < 0:
        raise ValueError(f"delay_s must be non-negative, got {delay_s}")
    if delay_s > MAX_DELAY_FRAC * sig.duration_s:
        warnings.warn(
            f"delay {delay_s:.3e} s exceeds {MAX_DELAY_FRAC:.0%} of the record "
            f"({sig.duration_s:.3e} s); circular wrap-around is no longer negligible",
            stacklevel=2,
        )
    if delay_s == 0.0:
        return IQSignal(sig.samples.copy(), sig.sample_rate_hz)

    x = sig.samples.astype(np.complex128)
    n = x.size
    f = np.fft.fftfreq(n, d=1.0 / sig.sample_rate_hz)
    ramp = np.exp(-2j * np.pi * f * delay_s)
    y = np.fft.ifft(np.fft.fft(x) * ramp)
    return IQSignal(y.astype(np.complex64), sig.sample_rate_hz)
