"""Aggregate evaluation: PSLR and RMS range error versus SIR, false-report
counting, and residual-based SINR.

Each sweep point synthesizes fresh corrupted records at a fixed SIR, runs
them through the model, and stretch-processes both the dirty input and the
reconstruction; the resulting table is what the no-AEC/with-AEC comparison
plots are drawn from.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .autoencoder import Autoencoder, reconstruct
from .channel import (
    FadingParams,
    NoiseParams,
    QpskSpec,
    ToneSpec,
    add_awgn,
    add_qpsk,
    add_tones,
    apply_amplitude_fading,
)
from .errors import ConfigError, DimensionError
from .rangeproc import SPEED_OF_LIGHT_M_S, estimate_range, pslr, stretch_process
from .waveform import ChirpParams, IQSignal, apply_delay, generate_cwlfm

SWEEP_CSV_COLUMNS = [
    "sir_db",
    "num_trials",
    "pslr_no_aec_db",
    "pslr_aec_db",
    "rmse_no_aec_m",
    "rmse_aec_m",
    "false_no_aec",
    "false_aec",
]


@dataclass(frozen=True)
class EvalSweepConfig:
    sir_grid_db: tuple[float, ...] = tuple(np.arange(-30.0, 21.0, 5.0))
    interference_type: str = "tones"
    num_trials: int = 25
    snr_db: float = 0.0
    chirp: ChirpParams = ChirpParams()
    num_tones: int = 1
    fading: FadingParams = FadingParams()
    delay_frac_range: tuple[float, float] = (0.0, 0.01)
    false_gate_m: float = 50.0
    seed: int = 0

    def validate(self) -> None:
        self.chirp.validate()
        self.fading.validate()
        if len(self.sir_grid_db) == 0:
            raise ConfigError("sir_grid_db must not be empty")
        if self.interference_type not in ("tones", "qpsk"):
            raise ConfigError("interference_type must be 'tones' or 'qpsk'")
        if self.num_trials < 1:
            raise ConfigError("num_trials must be at least 1")
        if self.num_tones < 1:
            raise ConfigError("num_tones must be at least 1")


@dataclass
class EvalRow:
    sir_db: float
    num_trials: int
    pslr_no_aec_db: float
    pslr_aec_db: float
    rmse_no_aec_m: float
    rmse_aec_m: float
    false_no_aec: int
    false_aec: int


@dataclass
class TrialOutcome:
    truth_m: float
    est_no_aec_m: float
    est_aec_m: float
    pslr_no_aec_db: float
    pslr_aec_db: float


def mean_peak_pslr(profile) -> tuple[float, "object"]:
    """Average PSLR of the up- and downsweep peaks of a profile."""
    est = estimate_range(profile)
    value = 0.5 * (pslr(profile, est.up_peak_bin) + pslr(profile, est.down_peak_bin))
    return value, est


def _corrupt(
    reference: IQSignal,
    cfg: EvalSweepConfig,
    sir_db: float,
    rng: np.random.Generator,
) -> tuple[IQSignal, IQSignal, float]:
    """One trial's (clean, dirty, truth_m) at a fixed SIR."""
    chirp = cfg.chirp
    delay_s = rng.uniform(*cfg.delay_frac_range) * chirp.duration_s
    fading_seed, noise_seed, qpsk_seed = (int(s) for s in rng.integers(0, 2**63, 3))

    clean = apply_amplitude_fading(
        apply_delay(reference, delay_s), cfg.fading, fading_seed, chirp.bandwidth_hz
    )
    ref_power = clean.power()
    dirty = add_awgn(clean, NoiseParams(cfg.snr_db), noise_seed)
    if cfg.interference_type == "tones":
        freqs = rng.uniform(-chirp.bandwidth_hz / 2, chirp.bandwidth_hz / 2, cfg.num_tones)
        phases = rng.uniform(0, 2 * np.pi, cfg.num_tones)
        tones = [ToneSpec(float(f), sir_db, float(p)) for f, p in zip(freqs, phases)]
        dirty = add_tones(dirty, tones, ref_power)
    else:
        bw = rng.uniform(0.1, 1.0) * chirp.bandwidth_hz
        span = max(chirp.bandwidth_hz - bw, 0.0)
        center = rng.uniform(-span / 2, span / 2) if span > 0 else 0.0
        duration = rng.uniform(0.1, 1.0)
        start = rng.uniform(0.0, 1.0 - duration)
        spec = QpskSpec(bandwidth_hz=bw, center_hz=center, start_frac=start,
                        duration_frac=duration, sir_db=sir_db)
        dirty = add_qpsk(dirty, spec, ref_power, qpsk_seed)
    truth_m = SPEED_OF_LIGHT_M_S * delay_s / 2.0
    return clean, dirty, truth_m


def run_trial(
    model: Autoencoder, reference: IQSignal, dirty: IQSignal, truth_m: float,
    bandwidth_hz: float,
) -> TrialOutcome:
    profile_dirty = stretch_process(dirty, reference, bandwidth_hz)
    pslr_dirty, est_dirty = mean_peak_pslr(profile_dirty)
    recon = reconstruct(model, dirty)
    profile_recon = stretch_process(recon, reference, bandwidth_hz)
    pslr_recon, est_recon = mean_peak_pslr(profile_recon)
    return TrialOutcome(
        truth_m=truth_m,
        est_no_aec_m=est_dirty.range_m,
        est_aec_m=est_recon.range_m,
        pslr_no_aec_db=pslr_dirty,
        pslr_aec_db=pslr_recon,
    )


def run_sweep(model: Autoencoder, cfg: EvalSweepConfig) -> list[EvalRow]:
    """Evaluate the model over the SIR grid; deterministic per cfg.seed."""
    cfg.validate()
    if model.cfg.num_samples != cfg.chirp.num_samples:
        raise DimensionError(
            f"model length {model.cfg.num_samples} != chirp length "
            f"{cfg.chirp.num_samples}"
        )
    reference = generate_cwlfm(cfg.chirp)
    rows = []
    for sir_index, sir_db in enumerate(cfg.sir_grid_db):
        outcomes = []
        for trial in range(cfg.num_trials):
            rng = np.random.default_rng(
                np.random.SeedSequence([0x53574550, cfg.seed, sir_index, trial])
            )
            _, dirty, truth_m = _corrupt(reference, cfg, float(sir_db), rng)
            outcomes.append(
                run_trial(model, reference, dirty, truth_m, cfg.chirp.bandwidth_hz)
            )
        truths = np.array([o.truth_m for o in outcomes])
        est_no = np.array([o.est_no_aec_m for o in outcomes])
        est_aec = np.array([o.est_aec_m for o in outcomes])
        rows.append(
            EvalRow(
                sir_db=float(sir_db),
                num_trials=cfg.num_trials,
                pslr_no_aec_db=float(np.mean([o.pslr_no_aec_db for o in outcomes])),
                pslr_aec_db=float(np.mean([o.pslr_aec_db for o in outcomes])),
                rmse_no_aec_m=float(np.sqrt(np.mean((est_no - truths) ** 2))),
                rmse_aec_m=float(np.sqrt(np.mean((est_aec - truths) ** 2))),
                false_no_aec=false_report_count(est_no, truths, cfg.false_gate_m),
                false_aec=false_report_count(est_aec, truths, cfg.false_gate_m),
            )
        )
    return rows


def false_report_count(estimates, truths, gate_m: float = 50.0) -> int:
    """Count estimates deviating from truth by more than the gate."""
    estimates = np.asarray(estimates, dtype=np.float64)
    truths = np.asarray(truths, dtype=np.float64)
    if estimates.shape != truths.shape:
        raise DimensionError(
            f"estimates shape {estimates.shape} != truths shape {truths.shape}"
        )
    return int(np.count_nonzero(np.abs(estimates - truths) > gate_m))


SINR_CAP_DB = 300.0


def sinr_residual_db(output: IQSignal, clean: IQSignal) -> float:
    """Residual SINR after removing a single complex scale factor.

    The projection alpha = <output, clean> / ||clean||^2 absorbs benign
    gain/phase differences; what remains counts as noise-plus-interference.
    """
    if len(output) != len(clean):
        raise DimensionError(f"lengths differ: {len(output)} vs {len(clean)}")
    c = clean.samples.astype(np.complex128)
    o = output.samples.astype(np.complex128)
    clean_energy = np.sum(np.abs(c) ** 2)
    if clean_energy == 0:
        raise ValueError("clean signal has zero energy")
    alpha = np.sum(o * np.conj(c)) / clean_energy
    residual = np.sum(np.abs(o - alpha * c) ** 2)
    if residual <= clean_energy * 10.0 ** (-SINR_CAP_DB / 10.0):
        return SINR_CAP_DB
    return float(min(10.0 * np.log10(clean_energy / residual), SINR_CAP_DB))


def rmse_threshold_sir(rows: list[EvalRow], with_aec: bool, limit_m: float) -> float | None:
    """Lowest SIR on the grid at which the arm still tracks (RMSE <= limit).

    Returns None when the arm exceeds the limit everywhere.
    """
    tracking = [
        row.sir_db
        for row in rows
        if (row.rmse_aec_m if with_aec else row.rmse_no_aec_m) <= limit_m
    ]
    return min(tracking) if tracking else None


def write_sweep_csv(rows: list[EvalRow], path: str, header_comment: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if header_comment:
            for line in header_comment.splitlines():
                fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(SWEEP_CSV_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    f"{row.sir_db:.3f}",
                    row.num_trials,
                    f"{row.pslr_no_aec_db:.4f}",
                    f"{row.pslr_aec_db:.4f}",
                    f"{row.rmse_no_aec_m:.4f}",
                    f"{row.rmse_aec_m:.4f}",
                    row.false_no_aec,
                    row.false_aec,
                ]
            )
