"""Channel corruption contracts: fading, AWGN, tones, QPSK."""

import numpy as np
import pytest

from radalt.channel import (
    FadingParams,
    NoiseParams,
    QpskSpec,
    ToneSpec,
    add_awgn,
    add_qpsk,
    add_tones,
    apply_amplitude_fading,
    uniform_tone_grid,
)
from radalt.errors import ConfigError
from radalt.waveform import ChirpParams, generate_cwlfm

DESK = ChirpParams(num_samples=1000)
FULL = ChirpParams(num_samples=40000)


def _envelope_fluctuation(faded, original):
    """Recover g from output = input * (1 + g)."""
    return (faded.samples.astype(np.complex128) / original.samples.astype(np.complex128)).real - 1.0


class TestFading:
    def test_zero_sigma_is_identity(self):
        sig = generate_cwlfm(DESK)
        out = apply_amplitude_fading(sig, FadingParams(sigma=0.0), 3, DESK.bandwidth_hz)
        np.testing.assert_array_equal(out.samples, sig.samples)

    def test_envelope_std_full_scale(self):
        sig = generate_cwlfm(FULL)
        out = apply_amplitude_fading(sig, FadingParams(), 11, FULL.bandwidth_hz)
        g = _envelope_fluctuation(out, sig)
        assert abs(g.std() - 0.3) < 0.05

    def test_envelope_band_limited(self):
        # Periodogram oracle: >= 99% of the fluctuation energy below 0.1*B.
        sig = generate_cwlfm(FULL)
        out = apply_amplitude_fading(sig, FadingParams(), 12, FULL.bandwidth_hz)
        g = _envelope_fluctuation(out, sig)
        spec = np.abs(np.fft.rfft(g)) ** 2
        freqs = np.fft.rfftfreq(len(g), d=1 / FULL.sample_rate_hz)
        cutoff = 0.1 * FULL.bandwidth_hz
        assert spec[freqs <= cutoff].sum() / spec.sum() >= 0.99

    def test_deterministic_per_seed(self):
        sig = generate_cwlfm(DESK)
        a = apply_amplitude_fading(sig, FadingParams(), 5, DESK.bandwidth_hz)
        b = apply_amplitude_fading(sig, FadingParams(), 5, DESK.bandwidth_hz)
        c = apply_amplitude_fading(sig, FadingParams(), 6, DESK.bandwidth_hz)
        np.testing.assert_array_equal(a.samples, b.samples)
        assert np.any(a.samples != c.samples)

    def test_invalid_params(self):
        sig = generate_cwlfm(DESK)
        with pytest.raises(ConfigError):
            apply_amplitude_fading(sig, FadingParams(relative_bandwidth=0.0), 1, 24e6)
        with pytest.raises(ConfigError):
            apply_amplitude_fading(sig, FadingParams(sigma=-0.1), 1, 24e6)


class TestAwgn:
    def test_vanishing_noise(self):
        sig = generate_cwlfm(DESK)
        out = add_awgn(sig, NoiseParams(snr_db=200.0), 1)
        err = np.abs(out.samples - sig.samples).max() / np.abs(sig.samples).max()
        assert err < 1e-4

    def test_zero_db_noise_power(self):
        sig = generate_cwlfm(FULL)
        out = add_awgn(sig, NoiseParams(snr_db=0.0), 2)
        noise = out.samples.astype(np.complex128) - sig.samples.astype(np.complex128)
        measured = np.mean(np.abs(noise) ** 2)
        offset_db = 10 * np.log10(measured / sig.power())
        assert abs(offset_db) < 0.2

    @pytest.mark.parametrize("snr_db", [-25.0, 30.0])
    def test_training_range_endpoints_accepted(self, snr_db):
        sig = generate_cwlfm(DESK)
        out = add_awgn(sig, NoiseParams(snr_db=snr_db), 3)
        assert len(out) == len(sig)

    def test_deterministic(self):
        sig = generate_cwlfm(DESK)
        a = add_awgn(sig, NoiseParams(0.0), 9)
        b = add_awgn(sig, NoiseParams(0.0), 9)
        np.testing.assert_array_equal(a.samples, b.samples)


class TestTones:
    def test_empty_list_is_identity(self):
        sig = generate_cwlfm(DESK)
        out = add_tones(sig, [], 1.0)
        np.testing.assert_array_equal(out.samples, sig.samples)

    def test_single_tone_power_at_0db(self):
        sig = generate_cwlfm(DESK)
        ref = sig.power()
        out = add_tones(sig, [ToneSpec(frequency_hz=1e6, sir_db=0.0)], ref)
        added = out.samples.astype(np.complex128) - sig.samples.astype(np.complex128)
        assert abs(np.mean(np.abs(added) ** 2) - ref) / ref < 1e-6

    def test_landing_config_five_tones_total_power(self):
        # 5 tones at -20 dB SIR each: total interference power = 5 * 100 * P.
        # Per-tone powers are exact (constant modulus); sum them one at a time.
        sig = generate_cwlfm(FULL)
        ref = sig.power()
        grid = uniform_tone_grid(5, FULL.bandwidth_hz, sir_db=-20.0)
        assert len(grid) == 5
        total = 0.0
        for tone in grid:
            out = add_tones(sig, [tone], ref)
            added = out.samples.astype(np.complex128) - sig.samples.astype(np.complex128)
            total += np.mean(np.abs(added) ** 2)
        assert abs(total - 5 * 100.0 * ref) / (5 * 100.0 * ref) < 1e-6

    def test_orthogonal_grid_sum_power(self):
        # With bin-centered frequencies the summed waveform power equals the
        # sum of per-tone powers exactly.
        sig = generate_cwlfm(FULL)
        ref = sig.power()
        df = FULL.sample_rate_hz / FULL.num_samples
        tones = [ToneSpec(frequency_hz=m * df * 1000, sir_db=-20.0) for m in (-8, -3, 1, 5, 9)]
        out = add_tones(sig, tones, ref)
        added = out.samples.astype(np.complex128) - sig.samples.astype(np.complex128)
        measured = np.mean(np.abs(added) ** 2)
        assert abs(measured - 500.0 * ref) / (500.0 * ref) < 1e-6

    def test_reference_power_scaling_is_exact(self):
        # Doubling reference_power raises the added power by 3 dB exactly.
        sig = generate_cwlfm(DESK)
        tone = [ToneSpec(frequency_hz=2e6, sir_db=-5.0)]
        a1 = add_tones(sig, tone, 1.0).samples.astype(np.complex128) - sig.samples
        a2 = add_tones(sig, tone, 2.0).samples.astype(np.complex128) - sig.samples
        ratio = np.mean(np.abs(a2) ** 2) / np.mean(np.abs(a1) ** 2)
        assert abs(10 * np.log10(ratio) - 10 * np.log10(2.0)) < 1e-6

    def test_out_of_band_tone_rejected(self):
        sig = generate_cwlfm(DESK)
        with pytest.raises(ConfigError):
            add_tones(sig, [ToneSpec(frequency_hz=16e6, sir_db=0.0)], 1.0)


class TestQpsk:
    def test_zero_duration_is_identity(self):
        sig = generate_cwlfm(DESK)
        out = add_qpsk(sig, QpskSpec(bandwidth_hz=6e6, duration_frac=0.0), 1.0, 4)
        np.testing.assert_array_equal(out.samples, sig.samples)

    def test_full_record_power_at_0db(self):
        sig = generate_cwlfm(FULL)
        ref = sig.power()
        out = add_qpsk(sig, QpskSpec(bandwidth_hz=12e6, sir_db=0.0), ref, 5)
        added = out.samples.astype(np.complex128) - sig.samples.astype(np.complex128)
        assert abs(np.mean(np.abs(added) ** 2) - ref) / ref < 0.02

    @pytest.mark.parametrize("bw_hz,center_hz,seed", [(8e6, 2e6, 6), (24e6, 0.0, 7), (4e6, -5e6, 8)])
    def test_occupied_bandwidth(self, bw_hz, center_hz, seed):
        # Periodogram oracle: the occupied bandwidth, measured between the
        # outermost points where the smoothed PSD is within 20 dB of the
        # passband level, approximates the requested bandwidth.
        sig = generate_cwlfm(FULL)
        spec = QpskSpec(bandwidth_hz=bw_hz, center_hz=center_hz, sir_db=0.0)
        out = add_qpsk(sig, spec, sig.power(), seed)
        added = out.samples.astype(np.complex128) - sig.samples.astype(np.complex128)
        psd = np.abs(np.fft.fft(added)) ** 2
        freqs = np.fft.fftfreq(len(added), d=1 / FULL.sample_rate_hz)
        order = np.argsort(freqs)
        freqs, psd = freqs[order], psd[order]
        smooth = np.convolve(psd, np.ones(201) / 201, mode="same")
        passband = np.abs(freqs - spec.center_hz) < 0.2 * spec.bandwidth_hz
        level = np.median(smooth[passband])
        above = np.where(smooth >= 0.01 * level)[0]
        width = freqs[above[-1]] - freqs[above[0]]
        assert abs(width - spec.bandwidth_hz) / spec.bandwidth_hz < 0.10

    def test_burst_confined_to_window(self):
        sig = generate_cwlfm(DESK)
        spec = QpskSpec(bandwidth_hz=6e6, start_frac=0.25, duration_frac=0.5, sir_db=0.0)
        out = add_qpsk(sig, spec, sig.power(), 7)
        added = out.samples.astype(np.complex128) - sig.samples.astype(np.complex128)
        n = len(sig)
        assert np.abs(added[: n // 4]).max() < 1e-5
        assert np.abs(added[3 * n // 4 :]).max() < 1e-5
        active = np.mean(np.abs(added[n // 4 : 3 * n // 4]) ** 2)
        assert abs(active - sig.power()) / sig.power() < 0.02

    def test_deterministic(self):
        sig = generate_cwlfm(DESK)
        spec = QpskSpec(bandwidth_hz=6e6)
        a = add_qpsk(sig, spec, 1.0, 8)
        b = add_qpsk(sig, spec, 1.0, 8)
        np.testing.assert_array_equal(a.samples, b.samples)

    def test_invalid_placement_rejected(self):
        sig = generate_cwlfm(DESK)
        with pytest.raises(ConfigError):
            add_qpsk(sig, QpskSpec(bandwidth_hz=6e6, start_frac=0.8, duration_frac=0.4), 1.0, 1)
        with pytest.raises(ConfigError):
            add_qpsk(sig, QpskSpec(bandwidth_hz=40e6), 1.0, 1)


def test_corruptions_preserve_length_and_rate():
    sig = generate_cwlfm(DESK)
    outs = [
        apply_amplitude_fading(sig, FadingParams(), 1, DESK.bandwidth_hz),
        add_awgn(sig, NoiseParams(0.0), 1),
        add_tones(sig, [ToneSpec(1e6, 0.0)], 1.0),
        add_qpsk(sig, QpskSpec(bandwidth_hz=6e6), 1.0, 1),
    ]
    for out in outs:
        assert len(out) == len(sig)
        assert out.sample_rate_hz == sig.sample_rate_hz
