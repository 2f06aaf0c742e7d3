"""Stretch processing, range-profile formation, and two-peak range estimation.

Mixing the received record against the zero-delay reference turns a path
delay tau into a beat tone: +k*tau during the upsweep half and -k*tau during
the downsweep half, where k is the sweep slope in Hz/s. A single full-record
FFT therefore shows a peak in each half-spectrum; the range estimate averages
the two.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .waveform import IQSignal

SPEED_OF_LIGHT_M_S = 299792458.0

# Bins excluded around DC when searching for peaks: the mixing product of the
# un-overlapped sweep edges and any DC offset otherwise dominates near bin 0.
DC_GUARD_BINS = 2

# Sentinel cap for PSLR when no sidelobe exists (single-bin profile).
PSLR_CAP_DB = 300.0

# A peak inside the DC guard is trusted only if it tops the guarded search by
# this margin; covers near-zero-delay targets without re-admitting DC junk.
_GUARD_OVERRIDE_MARGIN_DB = 3.0


@dataclass
class RangeProfile:
    """Normalized magnitude spectrum of the stretch-processed record."""

    magnitudes_db: np.ndarray
    bin_freq_hz: np.ndarray
    chirp_slope_hz_per_s: float
    sample_rate_hz: float

    @property
    def num_bins(self) -> int:
        return self.magnitudes_db.size

    @property
    def range_bin_m(self) -> float:
        """Range extent of one FFT bin: c * df / (2k)."""
        df = self.sample_rate_hz / self.num_bins
        return SPEED_OF_LIGHT_M_S * df / (2.0 * self.chirp_slope_hz_per_s)

    def freq_to_range_m(self, freq_hz: float) -> float:
        return SPEED_OF_LIGHT_M_S * abs(freq_hz) / (2.0 * self.chirp_slope_hz_per_s)


@dataclass
class RangeEstimate:
    range_m: float
    up_peak_bin: int
    down_peak_bin: int
    peak_mags_db: tuple[float, float]
    up_range_m: float
    down_range_m: float


def stretch_process(
    received: IQSignal, reference: IQSignal, bandwidth_hz: float
) -> RangeProfile:
    """Mix received against the zero-delay reference and FFT to a range profile.

    The conjugation order (reference times conj(received)) puts the upsweep
    beat at +k*tau. Magnitudes are in dB, normalized to the profile maximum.
    """
    if len(received) != len(reference):
        raise DimensionError(
            f"received length {len(received)} != reference length {len(reference)}"
        )
    if received.sample_rate_hz != reference.sample_rate_hz:
        raise DimensionError("received and reference sample rates differ")

    n = len(received)
    mix = reference.samples.astype(np.complex128) * np.conj(
        received.samples.astype(np.complex128)
    )
    spectrum = np.fft.fft(mix)
    mag = np.abs(spectrum)
    peak = mag.max()
    if peak == 0.0:
        mags_db = np.zeros(n)
    else:
        floor = peak * 10.0 ** (-2 * PSLR_CAP_DB / 20.0)
        mags_db = 20.0 * np.log10(np.maximum(mag, floor) / peak)

    duration = n / received.sample_rate_hz
    slope = bandwidth_hz / (duration / 2.0)
    freqs = np.fft.fftfreq(n, d=1.0 / received.sample_rate_hz)
    return RangeProfile(
        magnitudes_db=mags_db,
        bin_freq_hz=freqs,
        chirp_slope_hz_per_s=slope,
        sample_rate_hz=received.sample_rate_hz,
    )


def _half_peak(mags: np.ndarray, search: np.ndarray, guard: np.ndarray) -> tuple[int, bool]:
    """Peak bin over the search indices, with a guarded-region escape hatch.

    The guard bins are excluded from the primary search (DC junk lives there),
    but when the guard's own maximum clearly dominates the search winner, it
    is used instead: a genuinely near-zero-delay target concentrates inside
    the guard and would otherwise be unobservable.
    """
    best_search = int(search[np.argmax(mags[search])])
    best_guard = int(guard[np.argmax(mags[guard])])
    if mags[best_guard] >= mags[best_search] + _GUARD_OVERRIDE_MARGIN_DB:
        return best_guard, True
    return best_search, False


def _guard_centroid_freq(profile: RangeProfile) -> float:
    """Beat-frequency magnitude of a target inside the DC guard.

    Below roughly two bins of beat frequency, the up- and downsweep peaks
    merge into one DC-centered lump and a bare argmax is biased toward bin 0;
    the power-weighted centroid of |frequency| over the lump recovers the
    beat magnitude to within a bin.
    """
    n = profile.num_bins
    window = np.arange(-(DC_GUARD_BINS + 1), DC_GUARD_BINS + 2) % n
    weights = (10.0 ** (profile.magnitudes_db[window] / 20.0)) ** 2
    return float(
        np.sum(weights * np.abs(profile.bin_freq_hz[window])) / np.sum(weights)
    )


def estimate_range(profile: RangeProfile) -> RangeEstimate:
    """Average the up- and downsweep beat peaks into a single range estimate."""
    n = profile.num_bins
    mags = profile.magnitudes_db
    half = n // 2

    # Positive-frequency half: bins [0, half); negative half: [half, n).
    # Bin 0 is a guard candidate for both halves: a zero-frequency beat is
    # shared between them.
    g = DC_GUARD_BINS
    up_bin, up_in_guard = _half_peak(mags, np.arange(g + 1, half), np.arange(0, g + 1))
    down_bin, down_in_guard = _half_peak(
        mags, np.arange(half, n - g), np.concatenate([np.arange(n - g, n), [0]])
    )

    f_up = _guard_centroid_freq(profile) if up_in_guard else abs(profile.bin_freq_hz[up_bin])
    f_down = (
        _guard_centroid_freq(profile) if down_in_guard else abs(profile.bin_freq_hz[down_bin])
    )
    r_up = profile.freq_to_range_m(f_up)
    r_down = profile.freq_to_range_m(f_down)
    return RangeEstimate(
        range_m=0.5 * (r_up + r_down),
        up_peak_bin=up_bin,
        down_peak_bin=down_bin,
        peak_mags_db=(float(mags[up_bin]), float(mags[down_bin])),
        up_range_m=r_up,
        down_range_m=r_down,
    )


def pslr(profile: RangeProfile, peak_bin: int) -> float:
    """Peak-to-sidelobe ratio in dB within the half-spectrum holding the peak.

    The main lobe spans contiguous bins around peak_bin out to the first local
    minimum on each side; the sidelobe level is the largest magnitude outside
    the main lobe in that half. Returns PSLR_CAP_DB when no sidelobe exists.
    """
    n = profile.num_bins
    mags = profile.magnitudes_db
    half = n // 2
    lo, hi = (0, half) if peak_bin < half else (half, n)
    if not lo <= peak_bin < hi:
        raise DimensionError(f"peak_bin {peak_bin} outside profile of {n} bins")

    seg = mags[lo:hi]
    pk = peak_bin - lo
    left = pk
    while left - 1 >= 0 and seg[left - 1] <= seg[left]:
        left -= 1
    right = pk
    while right + 1 < seg.size and seg[right + 1] <= seg[right]:
        right += 1

    rest = np.concatenate([seg[:left], seg[right + 1 :]])
    if rest.size == 0:
        return PSLR_CAP_DB
    return float(min(seg[pk] - rest.max(), PSLR_CAP_DB))


def profile_to_csv(profile: RangeProfile, path: str) -> None:
    """Write the profile as CSV rows (bin, frequency_hz, range_m, magnitude_db)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin", "frequency_hz", "range_m", "magnitude_db"])
        for i in range(profile.num_bins):
            f = profile.bin_freq_hz[i]
            writer.writerow(
                [i, f"{f:.6f}", f"{profile.freq_to_range_m(f):.6f}",
                 f"{profile.magnitudes_db[i]:.6f}"]
            )
