"""Training/evaluation pair generation and the AEDS dataset file format.

Each example draws a path delay, SNR, and interference parameters from the
configured ranges. The clean label is the delayed, amplitude-faded chirp; the
dirty signal adds noise and interference on top of it. Per-example seeds are
derived by hashing (master_seed, index), so generation order is irrelevant
and regeneration is byte-identical.

File layout (little-endian):
    magic "AEDS" | u32 version | u64 num_examples | u64 num_samples | f64 sample_rate
followed by one record per example: clean then dirty, each num_samples
complex64 values (interleaved 32-bit I, Q). A human-readable ".meta" sidecar
lists the drawn parameters, one line per example.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

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
from .errors import ConfigError, FileFormatError
from .waveform import ChirpParams, IQSignal, apply_delay, generate_cwlfm

DATASET_MAGIC = b"AEDS"
DATASET_VERSION = 1
_HEADER = struct.Struct("<4sIQQd")

INTERFERENCE_MODES = ("tones", "qpsk", "mixed", "none")


def _check_range(name: str, rng_pair, lo=None, hi=None) -> tuple[float, float]:
    a, b = float(rng_pair[0]), float(rng_pair[1])
    if not a <= b:
        raise ConfigError(f"{name} must be an ordered (low, high) pair, got {rng_pair}")
    if lo is not None and a < lo:
        raise ConfigError(f"{name} low bound {a} below minimum {lo}")
    if hi is not None and b > hi:
        raise ConfigError(f"{name} high bound {b} above maximum {hi}")
    return a, b


@dataclass(frozen=True)
class GenerationConfig:
    """Dataset recipe: chirp geometry plus corruption parameter ranges."""

    chirp: ChirpParams = ChirpParams()
    num_examples: int = 10000
    delay_frac_range: tuple[float, float] = (0.0, 0.01)
    snr_db_range: tuple[float, float] = (-25.0, 30.0)
    interference_mode: str = "mixed"
    num_tones_range: tuple[int, int] = (1, 5)
    tone_sir_db_range: tuple[float, float] = (-20.0, 20.0)
    qpsk_sir_db_range: tuple[float, float] = (-20.0, 0.0)
    qpsk_bandwidth_frac_range: tuple[float, float] = (0.1, 1.0)
    qpsk_duration_frac_range: tuple[float, float] = (0.1, 1.0)
    fading: FadingParams = FadingParams()
    faded_label: bool = True
    master_seed: int = 0

    def validate(self) -> None:
        self.chirp.validate()
        self.fading.validate()
        if self.num_examples < 1:
            raise ConfigError("num_examples must be positive")
        if self.interference_mode not in INTERFERENCE_MODES:
            raise ConfigError(
                f"interference_mode must be one of {INTERFERENCE_MODES}, "
                f"got {self.interference_mode!r}"
            )
        _check_range("delay_frac_range", self.delay_frac_range, lo=0.0)
        _check_range("snr_db_range", self.snr_db_range)
        lo, hi = self.num_tones_range
        if not (isinstance(lo, int) and isinstance(hi, int) and 1 <= lo <= hi):
            raise ConfigError(f"num_tones_range must be ordered ints >= 1, got {self.num_tones_range}")
        _check_range("tone_sir_db_range", self.tone_sir_db_range)
        _check_range("qpsk_sir_db_range", self.qpsk_sir_db_range)
        _check_range("qpsk_bandwidth_frac_range", self.qpsk_bandwidth_frac_range, lo=1e-6, hi=1.0)
        _check_range("qpsk_duration_frac_range", self.qpsk_duration_frac_range, lo=0.0, hi=1.0)


@dataclass
class ExampleMeta:
    """Parameters drawn for one example (mirrors the sidecar line)."""

    index: int
    delay_s: float
    snr_db: float
    mode: str
    tones: list[ToneSpec] = field(default_factory=list)
    qpsk: QpskSpec | None = None
    fading_seed: int = 0
    noise_seed: int = 0
    qpsk_seed: int = 0


@dataclass
class ExamplePair:
    clean: IQSignal
    dirty: IQSignal
    meta: ExampleMeta | None = None


@dataclass
class DatasetInfo:
    path: str
    sidecar_path: str
    num_examples: int
    num_samples: int
    sample_rate_hz: float
    byte_size: int


def example_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([0x41454453, master_seed, index])


def draw_example_meta(cfg: GenerationConfig, index: int) -> ExampleMeta:
    """Draw one example's corruption parameters (fixed draw order)."""
    rng = np.random.default_rng(example_seed(cfg.master_seed, index))
    chirp = cfg.chirp
    bw = chirp.bandwidth_hz

    delay_s = rng.uniform(*cfg.delay_frac_range) * chirp.duration_s
    snr_db = rng.uniform(*cfg.snr_db_range)

    mode = cfg.interference_mode
    if mode == "mixed":
        mode = ("tones", "qpsk", "both")[rng.integers(0, 3)]

    tones: list[ToneSpec] = []
    if mode in ("tones", "both"):
        count = int(rng.integers(cfg.num_tones_range[0], cfg.num_tones_range[1] + 1))
        freqs = rng.uniform(-bw / 2, bw / 2, count)
        sirs = rng.uniform(*cfg.tone_sir_db_range, size=count)
        phases = rng.uniform(0.0, 2.0 * np.pi, count)
        tones = [
            ToneSpec(frequency_hz=float(f), sir_db=float(s), phase_rad=float(p))
            for f, s, p in zip(freqs, sirs, phases)
        ]

    qpsk = None
    if mode in ("qpsk", "both"):
        qbw = rng.uniform(*cfg.qpsk_bandwidth_frac_range) * bw
        center_span = max(bw - qbw, 0.0)
        center = rng.uniform(-center_span / 2, center_span / 2) if center_span > 0 else 0.0
        duration = rng.uniform(*cfg.qpsk_duration_frac_range)
        start = rng.uniform(0.0, 1.0 - duration)
        sir = rng.uniform(*cfg.qpsk_sir_db_range)
        qpsk = QpskSpec(
            bandwidth_hz=float(qbw),
            center_hz=float(center),
            start_frac=float(start),
            duration_frac=float(duration),
            sir_db=float(sir),
        )

    fading_seed, noise_seed, qpsk_seed = (int(s) for s in rng.integers(0, 2**63, 3))
    return ExampleMeta(
        index=index,
        delay_s=float(delay_s),
        snr_db=float(snr_db),
        mode=mode,
        tones=tones,
        qpsk=qpsk,
        fading_seed=fading_seed,
        noise_seed=noise_seed,
        qpsk_seed=qpsk_seed,
    )


def synthesize_pair(
    cfg: GenerationConfig, meta: ExampleMeta, base_chirp: IQSignal | None = None
) -> ExamplePair:
    """Build the (clean, dirty) pair described by meta."""
    chirp = base_chirp if base_chirp is not None else generate_cwlfm(cfg.chirp)
    delayed = apply_delay(chirp, meta.delay_s)
    faded = apply_amplitude_fading(
        delayed, cfg.fading, meta.fading_seed, cfg.chirp.bandwidth_hz
    )
    clean = faded if cfg.faded_label else delayed

    reference_power = faded.power()
    dirty = add_awgn(faded, NoiseParams(meta.snr_db), meta.noise_seed)
    if meta.tones:
        dirty = add_tones(dirty, meta.tones, reference_power)
    if meta.qpsk is not None:
        dirty = add_qpsk(dirty, meta.qpsk, reference_power, meta.qpsk_seed)
    return ExamplePair(clean=clean, dirty=dirty, meta=meta)


def _meta_line(meta: ExampleMeta) -> str:
    parts = [
        f"index={meta.index}",
        f"delay_s={meta.delay_s:.12e}",
        f"snr_db={meta.snr_db:.6f}",
        f"mode={meta.mode}",
        f"num_tones={len(meta.tones)}",
    ]
    if meta.tones:
        parts.append("tone_freq_hz=" + ";".join(f"{t.frequency_hz:.6f}" for t in meta.tones))
        parts.append("tone_sir_db=" + ";".join(f"{t.sir_db:.6f}" for t in meta.tones))
        parts.append("tone_phase_rad=" + ";".join(f"{t.phase_rad:.9f}" for t in meta.tones))
    if meta.qpsk is not None:
        q = meta.qpsk
        parts += [
            f"qpsk_bandwidth_hz={q.bandwidth_hz:.6f}",
            f"qpsk_center_hz={q.center_hz:.6f}",
            f"qpsk_start_frac={q.start_frac:.9f}",
            f"qpsk_duration_frac={q.duration_frac:.9f}",
            f"qpsk_sir_db={q.sir_db:.6f}",
        ]
    parts += [
        f"fading_seed={meta.fading_seed}",
        f"noise_seed={meta.noise_seed}",
        f"qpsk_seed={meta.qpsk_seed}",
    ]
    return " ".join(parts)


def _parse_meta_line(line: str) -> ExampleMeta:
    kv = dict(item.split("=", 1) for item in line.split())
    tones = []
    if int(kv["num_tones"]) > 0:
        freqs = [float(v) for v in kv["tone_freq_hz"].split(";")]
        sirs = [float(v) for v in kv["tone_sir_db"].split(";")]
        phases = [float(v) for v in kv["tone_phase_rad"].split(";")]
        tones = [ToneSpec(f, s, p) for f, s, p in zip(freqs, sirs, phases)]
    qpsk = None
    if "qpsk_bandwidth_hz" in kv:
        qpsk = QpskSpec(
            bandwidth_hz=float(kv["qpsk_bandwidth_hz"]),
            center_hz=float(kv["qpsk_center_hz"]),
            start_frac=float(kv["qpsk_start_frac"]),
            duration_frac=float(kv["qpsk_duration_frac"]),
            sir_db=float(kv["qpsk_sir_db"]),
        )
    return ExampleMeta(
        index=int(kv["index"]),
        delay_s=float(kv["delay_s"]),
        snr_db=float(kv["snr_db"]),
        mode=kv["mode"],
        tones=tones,
        qpsk=qpsk,
        fading_seed=int(kv["fading_seed"]),
        noise_seed=int(kv["noise_seed"]),
        qpsk_seed=int(kv["qpsk_seed"]),
    )


def sidecar_path_for(path: str) -> str:
    return path + ".meta"


def generate_dataset(
    cfg: GenerationConfig, path: str, config_echo: dict | None = None
) -> DatasetInfo:
    """Generate all examples and write the dataset plus its metadata sidecar.

    Writes go to temporary files that are renamed on success, so a failed run
    leaves no partial dataset behind.
    """
    cfg.validate()
    base = generate_cwlfm(cfg.chirp)
    tmp = path + ".tmp"
    meta_path = sidecar_path_for(path)
    meta_tmp = meta_path + ".tmp"

    try:
        with open(tmp, "wb") as data_fh, open(meta_tmp, "w") as meta_fh:
            data_fh.write(
                _HEADER.pack(
                    DATASET_MAGIC,
                    DATASET_VERSION,
                    cfg.num_examples,
                    cfg.chirp.num_samples,
                    cfg.chirp.sample_rate_hz,
                )
            )
            meta_fh.write("# radalt dataset sidecar v1\n")
            if config_echo is not None:
                meta_fh.write("# config: " + json.dumps(config_echo, sort_keys=True) + "\n")
            for i in range(cfg.num_examples):
                meta = draw_example_meta(cfg, i)
                pair = synthesize_pair(cfg, meta, base_chirp=base)
                data_fh.write(pair.clean.samples.astype("<c8", copy=False).tobytes())
                data_fh.write(pair.dirty.samples.astype("<c8", copy=False).tobytes())
                meta_fh.write(_meta_line(meta) + "\n")
    except BaseException:
        for leftover in (tmp, meta_tmp):
            if os.path.exists(leftover):
                os.remove(leftover)
        raise

    os.replace(tmp, path)
    os.replace(meta_tmp, meta_path)
    return DatasetInfo(
        path=path,
        sidecar_path=meta_path,
        num_examples=cfg.num_examples,
        num_samples=cfg.chirp.num_samples,
        sample_rate_hz=cfg.chirp.sample_rate_hz,
        byte_size=os.path.getsize(path),
    )


class DatasetReader:
    """Random-access view over an AEDS dataset file (memory-mapped)."""

    def __init__(self, path: str):
        self.path = path
        size = os.path.getsize(path)
        if size < _HEADER.size:
            raise FileFormatError(
                f"dataset header truncated at offset {size}; need {_HEADER.size} bytes"
            )
        with open(path, "rb") as fh:
            header = fh.read(_HEADER.size)
        magic, version, num_examples, num_samples, sample_rate = _HEADER.unpack(header)
        if magic != DATASET_MAGIC:
            raise FileFormatError(
                f"bad dataset magic {magic!r} at offset 0, expected "
                f"{DATASET_MAGIC.decode()!r}"
            )
        if version != DATASET_VERSION:
            raise FileFormatError(f"unsupported dataset version {version}")
        expected = _HEADER.size + num_examples * 2 * num_samples * 8
        if size != expected:
            raise FileFormatError(
                f"dataset size mismatch: expected {expected} bytes for "
                f"{num_examples} examples of {num_samples} samples, got {size}"
            )
        self.num_examples = int(num_examples)
        self.num_samples = int(num_samples)
        self.sample_rate_hz = float(sample_rate)
        self._mm = np.memmap(path, dtype="<c8", mode="r", offset=_HEADER.size,
                             shape=(self.num_examples, 2, self.num_samples))
        self._metas: list[ExampleMeta] | None = None

    def __len__(self) -> int:
        return self.num_examples

    def metas(self) -> list[ExampleMeta]:
        """Sidecar metadata, parsed lazily (requires the .meta file)."""
        if self._metas is None:
            entries = []
            with open(sidecar_path_for(self.path)) as fh:
                for line in fh:
                    line = line.strip()
                    if line and not line.startswith("#"):
                        entries.append(_parse_meta_line(line))
            self._metas = entries
        return self._metas

    def __getitem__(self, index: int) -> ExamplePair:
        if not 0 <= index < self.num_examples:
            raise IndexError(
                f"example index {index} out of range [0, {self.num_examples})"
            )
        clean = IQSignal(np.array(self._mm[index, 0]), self.sample_rate_hz)
        dirty = IQSignal(np.array(self._mm[index, 1]), self.sample_rate_hz)
        meta = None
        if os.path.exists(sidecar_path_for(self.path)):
            meta = self.metas()[index]
        return ExamplePair(clean=clean, dirty=dirty, meta=meta)

    def __iter__(self) -> Iterator[ExamplePair]:
        for i in range(self.num_examples):
            yield self[i]

    def tensors(self, indices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(dirty, clean) float32 [len(indices), 2, N] channel tensors."""
        raw = np.asarray(self._mm[indices])  # [B, 2, N] complex64
        dirty = np.stack([raw[:, 1].real, raw[:, 1].imag], axis=1)
        clean = np.stack([raw[:, 0].real, raw[:, 0].imag], axis=1)
        return dirty.astype(np.float32), clean.astype(np.float32)

    def all_tensors(self) -> tuple[np.ndarray, np.ndarray]:
        return self.tensors(np.arange(self.num_examples))


def read_dataset(path: str) -> DatasetReader:
    return DatasetReader(path)


def batch_iterator(
    reader: DatasetReader, batch_size: int, shuffle_seed: int | None = None
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield (dirty, clean) float32 [batch, 2, N] tensors; the final partial
    batch is yielded. Shuffling is deterministic per seed; None keeps order."""
    if batch_size < 1:
        raise ConfigError("batch_size must be at least 1")
    if shuffle_seed is None:
        order = np.arange(reader.num_examples)
    else:
        order = np.random.default_rng(shuffle_seed).permutation(reader.num_examples)
    for start in range(0, reader.num_examples, batch_size):
        yield reader.tensors(order[start : start + batch_size])
