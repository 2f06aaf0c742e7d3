"""Channel corruption: multipath-like amplitude fading, AWGN, tone and QPSK interference.

SNR and SIR are power ratios against a caller-supplied reference power (the
clean chirp power). SIR is defined per interferer, so several tones at -20 dB
SIR each contribute 100x the reference power apiece.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .waveform import IQSignal


@dataclass(frozen=True)
class FadingParams:
    """Band-limited Gaussian envelope process.

    relative_bandwidth is the one-sided low-pass cutoff as a fraction of the
    chirp bandwidth; sigma is the standard deviation of the envelope
    fluctuation around unity.
    """

    relative_bandwidth: float = 0.1
    sigma: float = 0.3

    def validate(self) -> None:
        if not 0 < self.relative_bandwidth <= 1:
            raise ConfigError("relative_bandwidth must be in (0, 1]")
        if self.sigma < 0:
            raise ConfigError("sigma must be non-negative")


@dataclass(frozen=True)
class ToneSpec:
    frequency_hz: float
    sir_db: float
    phase_rad: float = 0.0


@dataclass(frozen=True)
class QpskSpec:
    """Pulse-shaped QPSK interferer occupying part of the band and record.

    bandwidth_hz is the total occupied bandwidth; the symbol rate is
    bandwidth_hz / (1 + rolloff). start_frac and duration_frac place the
    active burst as fractions of the record length.
    """

    bandwidth_hz: float
    center_hz: float = 0.0
    start_frac: float = 0.0
    duration_frac: float = 1.0
    sir_db: float = 0.0
    rolloff: float = 0.35

    def validate(self, sample_rate_hz: float) -> None:
        if self.bandwidth_hz <= 0 or self.bandwidth_hz > sample_rate_hz:
            raise ConfigError(
                f"QPSK bandwidth {self.bandwidth_hz} Hz must be in (0, fs={sample_rate_hz}]"
            )
        if self.start_frac < 0 or self.duration_frac < 0:
            raise ConfigError("start_frac and duration_frac must be non-negative")
        if self.start_frac + self.duration_frac > 1.0 + 1e-9:
            raise ConfigError("QPSK burst must fit inside the record: start_frac + duration_frac <= 1")
        if not 0 <= self.rolloff <= 1:
            raise ConfigError("rolloff must be in [0, 1]")


@dataclass(frozen=True)
class NoiseParams:
    snr_db: float

    def validate(self) -> None:
        if not np.isfinite(self.snr_db):
            raise ConfigError("snr_db must be finite")


def apply_amplitude_fading(
    sig: IQSignal, p: FadingParams, seed: int, bandwidth_hz: float
) -> IQSignal:
    """Multiply sig by (1 + g[n]) where g is low-pass Gaussian with std sigma.

    g is white Gaussian noise brick-wall filtered to p.relative_bandwidth *
    bandwidth_hz (one-sided), then rescaled so its sample standard deviation
    is exactly p.sigma. Deterministic for a fixed seed.
    """
    p.validate()
    if bandwidth_hz <= 0:
        raise ConfigError("bandwidth_hz must be positive")
    if p.sigma == 0.0:
        return IQSignal(sig.samples.copy(), sig.sample_rate_hz)

    n = len(sig)
    rng = np.random.default_rng(seed)
    white = rng.standard_normal(n)
    spec = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, d=1.0 / sig.sample_rate_hz)
    cutoff = p.relative_bandwidth * bandwidth_hz
    spec[freqs > cutoff] = 0.0
    g = np.fft.irfft(spec, n)
    std = g.std()
    if std > 0:
        g *= p.sigma / std
    out = sig.samples.astype(np.complex128) * (1.0 + g)
    return IQSignal(out.astype(np.complex64), sig.sample_rate_hz)


def add_awgn(sig: IQSignal, p: NoiseParams, seed: int) -> IQSignal:
    """Add circularly symmetric complex Gaussian noise at the configured SNR.

    Noise power is P_sig * 10^(-snr_db/10) with P_sig the mean squared
    magnitude of the input signal.
    """
    p.validate()
    n = len(sig)
    noise_power = sig.power() * 10.0 ** (-p.snr_db / 10.0)
    rng = np.random.default_rng(seed)
    scale = np.sqrt(noise_power / 2.0)
    noise = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    out = sig.samples.astype(np.complex128) + noise
    return IQSignal(out.astype(np.complex64), sig.sample_rate_hz)


def add_tones(sig: IQSignal, tones: list[ToneSpec], reference_power: float) -> IQSignal:
    """Add complex exponentials, each scaled to its own SIR against reference_power."""
    if reference_power <= 0:
        raise ValueError("reference_power must be positive")
    if not tones:
        return IQSignal(sig.samples.copy(), sig.sample_rate_hz)

    fs = sig.sample_rate_hz
    n = len(sig)
    t = np.arange(n, dtype=np.float64) / fs
    total = np.zeros(n, dtype=np.complex128)
    for tone in tones:
        if abs(tone.frequency_hz) > fs / 2:
            raise ConfigError(
                f"tone frequency {tone.frequency_hz} Hz outside +/-fs/2 = {fs / 2} Hz"
            )
        amp = np.sqrt(reference_power * 10.0 ** (-tone.sir_db / 10.0))
        total += amp * np.exp(1j * (2.0 * np.pi * tone.frequency_hz * t + tone.phase_rad))
    out = sig.samples.astype(np.complex128) + total
    return IQSignal(out.astype(np.complex64), sig.sample_rate_hz)


def uniform_tone_grid(num_tones: int, bandwidth_hz: float, sir_db: float) -> list[ToneSpec]:
    """Deterministic tone comb: interior points of a uniform grid across the band."""
    if num_tones < 1:
        return []
    freqs = np.linspace(-bandwidth_hz / 2, bandwidth_hz / 2, num_tones + 2)[1:-1]
    return [ToneSpec(frequency_hz=float(f), sir_db=sir_db) for f in freqs]


# Gray-mapped QPSK constellation: adjacent symbols differ in one bit.
_QPSK_POINTS = np.exp(1j * (np.pi / 4 + np.pi / 2 * np.arange(4)))

# RRC pulse support, in symbol periods on each side of the symbol center.
_RRC_SPAN_SYMBOLS = 8


def _rrc_impulse(t: np.ndarray, symbol_period: float, rolloff: float) -> np.ndarray:
    """Root-raised-cosine impulse response, handling both singular points."""
    ts = t / symbol_period
    b = rolloff
    out = np.empty_like(ts)

    if b == 0.0:
        return np.sinc(ts)

    near_zero = np.isclose(ts, 0.0, atol=1e-10)
    sing = np.isclose(np.abs(ts), 1.0 / (4.0 * b), atol=1e-10)
    regular = ~(near_zero | sing)

    tr = ts[regular]
    num = np.sin(np.pi * tr * (1 - b)) + 4 * b * tr * np.cos(np.pi * tr * (1 + b))
    den = np.pi * tr * (1 - (4 * b * tr) ** 2)
    out[regular] = num / den
    out[near_zero] = 1.0 + b * (4.0 / np.pi - 1.0)
    out[sing] = (b / np.sqrt(2.0)) * (
        (1 + 2.0 / np.pi) * np.sin(np.pi / (4 * b))
        + (1 - 2.0 / np.pi) * np.cos(np.pi / (4 * b))
    )
    return out


def add_qpsk(sig: IQSignal, spec: QpskSpec, reference_power: float, seed: int) -> IQSignal:
    """Add a root-raised-cosine shaped QPSK burst at the configured SIR.

    Random Gray-mapped symbols at rate bandwidth_hz/(1+rolloff) are pulse
    shaped (symbol spacing may be a fractional number of samples), shifted to
    center_hz, hard-windowed onto [start_frac, start_frac + duration_frac] of
    the record, and scaled so the power over the active window equals
    reference_power * 10^(-sir_db/10).
    """
    fs = sig.sample_rate_hz
    spec.validate(fs)
    if reference_power <= 0:
        raise ValueError("reference_power must be positive")

    n = len(sig)
    n0 = int(round(spec.start_frac * n))
    n1 = int(round((spec.start_frac + spec.duration_frac) * n))
    n1 = min(n1, n)
    if n1 <= n0:
        return IQSignal(sig.samples.copy(), sig.sample_rate_hz)

    symbol_rate = spec.bandwidth_hz / (1.0 + spec.rolloff)
    symbol_period = 1.0 / symbol_rate
    sps = fs / symbol_rate
    num_symbols = max(1, int(np.floor((n1 - n0) / sps)))

    rng = np.random.default_rng(seed)
    symbols = _QPSK_POINTS[rng.integers(0, 4, num_symbols)]

    # Place each symbol's pulse on the sample grid at its (fractional) center.
    centers = n0 + (np.arange(num_symbols) + 0.5) * sps
    half_w = int(np.ceil(_RRC_SPAN_SYMBOLS * sps))
    nearest = np.round(centers).astype(np.int64)
    idx = nearest[:, None] + np.arange(-half_w, half_w + 1)[None, :]
    tau = (idx - centers[:, None]) / fs
    contrib = symbols[:, None] * _rrc_impulse(tau, symbol_period, spec.rolloff)

    burst = np.zeros(n, dtype=np.complex128)
    valid = (idx >= 0) & (idx < n)
    np.add.at(burst, idx[valid], contrib[valid])

    t = np.arange(n, dtype=np.float64) / fs
    burst *= np.exp(2j * np.pi * spec.center_hz * t)

    # Hard window, then normalize power over the active duration.
    burst[:n0] = 0.0
    burst[n1:] = 0.0
    active_power = np.mean(np.abs(burst[n0:n1]) ** 2)
    if active_power > 0:
        target = reference_power * 10.0 ** (-spec.sir_db / 10.0)
        burst *= np.sqrt(target / active_power)

    out = sig.samples.astype(np.complex128) + burst
    return IQSignal(out.astype(np.complex64), sig.sample_rate_hz)
