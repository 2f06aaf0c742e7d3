"""End-to-end landing simulation: a descending trajectory produces one radar
record every record interval; each record is corrupted per the configured
interference environment and range-tracked both directly and through the
autoencoder.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .autoencoder import Autoencoder, reconstruct
from .channel import (
    FadingParams,
    NoiseParams,
    QpskSpec,
    add_awgn,
    add_qpsk,
    add_tones,
    apply_amplitude_fading,
    uniform_tone_grid,
)
from .errors import ConfigError, DimensionError
from .metrics import false_report_count, mean_peak_pslr
from .rangeproc import SPEED_OF_LIGHT_M_S, stretch_process
from .waveform import MAX_DELAY_FRAC, ChirpParams, IQSignal, apply_delay, generate_cwlfm

SIM_CSV_COLUMNS = [
    "time_s",
    "true_range_m",
    "est_no_aec_m",
    "est_aec_m",
    "pslr_no_aec_db",
    "pslr_aec_db",
]


def max_unambiguous_range_m(chirp: ChirpParams) -> float:
    """Largest altitude whose two-way delay stays within the delay budget."""
    return SPEED_OF_LIGHT_M_S * (MAX_DELAY_FRAC * chirp.duration_s) / 2.0


@dataclass(frozen=True)
class Trajectory:
    """Altitude profile sampled once per record interval.

    The default is a linear descent from start_altitude_m to end_altitude_m
    over the full duration.
    """

    duration_s: float = 175.0
    record_interval_s: float = 0.5
    start_altitude_m: float = 2000.0
    end_altitude_m: float = 0.0

    @classmethod
    def for_chirp(cls, chirp: ChirpParams, duration_s: float = 175.0,
                  record_interval_s: float = 0.5) -> "Trajectory":
        """Descent from the chirp's maximum unambiguous range down to ground."""
        return cls(
            duration_s=duration_s,
            record_interval_s=record_interval_s,
            start_altitude_m=max_unambiguous_range_m(chirp),
            end_altitude_m=0.0,
        )

    def validate(self) -> None:
        if self.duration_s <= 0 or self.record_interval_s <= 0:
            raise ConfigError("duration_s and record_interval_s must be positive")
        if self.start_altitude_m < 0 or self.end_altitude_m < 0:
            raise ConfigError("altitudes must be non-negative")

    def altitude_m(self, t: float) -> float:
        frac = min(max(t / self.duration_s, 0.0), 1.0)
        return self.start_altitude_m + frac * (self.end_altitude_m - self.start_altitude_m)

    def record_times(self) -> np.ndarray:
        count = int(np.floor(self.duration_s / self.record_interval_s)) + 1
        return np.arange(count) * self.record_interval_s


@dataclass(frozen=True)
class ClutterParams:
    """Discrete weak scatterers trailing the main echo."""

    num_scatterers: int = 0
    delay_frac_max: float = 0.002
    relative_power_db: float = -20.0

    def validate(self) -> None:
        if self.num_scatterers < 0:
            raise ConfigError("num_scatterers must be non-negative")
        if self.delay_frac_max < 0:
            raise ConfigError("delay_frac_max must be non-negative")


@dataclass(frozen=True)
class SimConfig:
    """Landing-scenario configuration.

    The default interference environment is the harsh case: five tones on a
    deterministic uniform grid at -20 dB SIR each plus full-band QPSK at
    -20 dB SIR. Set tone_sir_db/qpsk_sir_db/snr_db to None to disable that
    corruption; fading stays part of the echo itself.
    """

    chirp: ChirpParams = ChirpParams(num_samples=40000)
    trajectory: Trajectory | None = None
    snr_db: float | None = 0.0
    num_tones: int = 5
    tone_sir_db: float | None = -20.0
    qpsk_sir_db: float | None = -20.0
    clutter: ClutterParams = ClutterParams()
    fading: FadingParams | None = FadingParams()
    false_report_gate_m: float = 50.0
    seed: int = 0

    def validate(self) -> None:
        self.chirp.validate()
        if self.trajectory is not None:
            self.trajectory.validate()
        self.clutter.validate()
        if self.fading is not None:
            self.fading.validate()
        if self.num_tones < 0:
            raise ConfigError("num_tones must be non-negative")
        if self.false_report_gate_m <= 0:
            raise ConfigError("false_report_gate_m must be positive")


@dataclass
class SimRecord:
    time_s: float
    true_range_m: float
    est_no_aec_m: float
    est_aec_m: float
    pslr_no_aec_db: float
    pslr_aec_db: float


@dataclass
class SimResult:
    records: list[SimRecord] = field(default_factory=list)
    rmse_no_aec_m: float = 0.0
    rmse_aec_m: float = 0.0
    false_no_aec: int = 0
    false_aec: int = 0
    gate_m: float = 50.0


def _synthesize_record(
    cfg: SimConfig, reference: IQSignal, tau_s: float, rng: np.random.Generator
) -> IQSignal:
    chirp = cfg.chirp
    fading_seed, noise_seed, qpsk_seed = (int(s) for s in rng.integers(0, 2**63, 3))

    echo = apply_delay(reference, tau_s)
    if cfg.fading is not None:
        echo = apply_amplitude_fading(echo, cfg.fading, fading_seed, chirp.bandwidth_hz)

    if cfg.clutter.num_scatterers > 0:
        total = echo.samples.astype(np.complex128)
        scale = 10.0 ** (cfg.clutter.relative_power_db / 20.0)
        extras = rng.uniform(0, cfg.clutter.delay_frac_max * chirp.duration_s,
                             cfg.clutter.num_scatterers)
        with warnings.catch_warnings():
            # Clutter trails the main echo by up to 0.2% of the record; near
            # the maximum altitude this nudges past the nominal delay budget,
            # where the wrap-around is still negligible.
            warnings.simplefilter("ignore")
            for extra in extras:
                total += scale * apply_delay(reference, tau_s + extra).samples
        echo = IQSignal(total.astype(np.complex64), chirp.sample_rate_hz)

    dirty = echo
    ref_power = echo.power()
    if cfg.snr_db is not None:
        dirty = add_awgn(dirty, NoiseParams(cfg.snr_db), noise_seed)
    if cfg.tone_sir_db is not None and cfg.num_tones > 0:
        tones = uniform_tone_grid(cfg.num_tones, chirp.bandwidth_hz, cfg.tone_sir_db)
        dirty = add_tones(dirty, tones, ref_power)
    if cfg.qpsk_sir_db is not None:
        spec = QpskSpec(bandwidth_hz=chirp.bandwidth_hz, sir_db=cfg.qpsk_sir_db)
        dirty = add_qpsk(dirty, spec, ref_power, qpsk_seed)
    return dirty


def run_landing_sim(model: Autoencoder, cfg: SimConfig) -> SimResult:
    """Track range with and without the autoencoder along the trajectory."""
    cfg.validate()
    chirp = cfg.chirp
    if model.cfg.num_samples != chirp.num_samples:
        raise DimensionError(
            f"model length {model.cfg.num_samples} != chirp length {chirp.num_samples}"
        )
    trajectory = cfg.trajectory if cfg.trajectory is not None else Trajectory.for_chirp(chirp)
    trajectory.validate()

    max_range = max_unambiguous_range_m(chirp)
    if trajectory.start_altitude_m > max_range * (1 + 1e-9) or (
        trajectory.end_altitude_m > max_range * (1 + 1e-9)
    ):
        raise ConfigError(
            f"trajectory altitude exceeds the maximum unambiguous range "
            f"{max_range:.1f} m for this chirp"
        )

    reference = generate_cwlfm(chirp)
    result = SimResult(gate_m=cfg.false_report_gate_m)
    for index, t in enumerate(trajectory.record_times()):
        altitude = trajectory.altitude_m(float(t))
        tau = 2.0 * altitude / SPEED_OF_LIGHT_M_S
        rng = np.random.default_rng(np.random.SeedSequence([0x53494D, cfg.seed, index]))
        dirty = _synthesize_record(cfg, reference, tau, rng)

        profile_dirty = stretch_process(dirty, reference, chirp.bandwidth_hz)
        pslr_dirty, est_dirty = mean_peak_pslr(profile_dirty)
        recon = reconstruct(model, dirty)
        profile_recon = stretch_process(recon, reference, chirp.bandwidth_hz)
        pslr_recon, est_recon = mean_peak_pslr(profile_recon)

        result.records.append(
            SimRecord(
                time_s=float(t),
                true_range_m=altitude,
                est_no_aec_m=est_dirty.range_m,
                est_aec_m=est_recon.range_m,
                pslr_no_aec_db=pslr_dirty,
                pslr_aec_db=pslr_recon,
            )
        )

    truths = np.array([r.true_range_m for r in result.records])
    est_no = np.array([r.est_no_aec_m for r in result.records])
    est_aec = np.array([r.est_aec_m for r in result.records])
    result.rmse_no_aec_m = float(np.sqrt(np.mean((est_no - truths) ** 2)))
    result.rmse_aec_m = float(np.sqrt(np.mean((est_aec - truths) ** 2)))
    result.false_no_aec = false_report_count(est_no, truths, cfg.false_report_gate_m)
    result.false_aec = false_report_count(est_aec, truths, cfg.false_report_gate_m)
    return result


def write_sim_csv(result: SimResult, path: str, header_comment: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if header_comment:
            for line in header_comment.splitlines():
                fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(SIM_CSV_COLUMNS)
        for r in result.records:
            writer.writerow(
                [
                    f"{r.time_s:.3f}",
                    f"{r.true_range_m:.4f}",
                    f"{r.est_no_aec_m:.4f}",
                    f"{r.est_aec_m:.4f}",
                    f"{r.pslr_no_aec_db:.4f}",
                    f"{r.pslr_aec_db:.4f}",
                ]
            )


def summary_text(result: SimResult) -> str:
    return (
        f"records={len(result.records)}\n"
        f"rmse_no_aec_m={result.rmse_no_aec_m:.4f}\n"
        f"rmse_aec_m={result.rmse_aec_m:.4f}\n"
        f"false_no_aec={result.false_no_aec}\n"
        f"false_aec={result.false_aec}\n"
        f"false_report_gate_m={result.gate_m:.4f}\n"
    )
