"""Dataset generation, AEDS serialization, and batch iteration contracts."""

import numpy as np
import pytest

from radalt.channel import FadingParams
from radalt.dataset import (
    DATASET_MAGIC,
    DatasetReader,
    GenerationConfig,
    batch_iterator,
    draw_example_meta,
    generate_dataset,
    read_dataset,
    sidecar_path_for,
)
from radalt.errors import ConfigError, FileFormatError
from radalt.waveform import ChirpParams

SMALL_CHIRP = ChirpParams(num_samples=128)


def small_config(**overrides):
    defaults = dict(chirp=SMALL_CHIRP, num_examples=24, master_seed=99)
    defaults.update(overrides)
    return GenerationConfig(**defaults)


def test_regeneration_is_byte_identical(tmp_path):
    cfg = small_config()
    p1, p2 = str(tmp_path / "a.aeds"), str(tmp_path / "b.aeds")
    generate_dataset(cfg, p1)
    generate_dataset(cfg, p2)
    assert open(p1, "rb").read() == open(p2, "rb").read()
    assert open(sidecar_path_for(p1)).read() == open(sidecar_path_for(p2)).read()


def test_file_size_formula(tmp_path):
    cfg = small_config(num_examples=17)
    info = generate_dataset(cfg, str(tmp_path / "d.aeds"))
    header = 32
    assert info.byte_size == header + 17 * 2 * 128 * 2 * 4


def test_write_read_roundtrip_exact(tmp_path):
    cfg = small_config(num_examples=6)
    path = str(tmp_path / "d.aeds")
    generate_dataset(cfg, path)
    reader = read_dataset(path)
    assert len(reader) == 6
    assert reader.num_samples == 128
    assert reader.sample_rate_hz == SMALL_CHIRP.sample_rate_hz
    # Regenerate example 3 from its sidecar metadata: stored bytes match the
    # float32 synthesis exactly.
    from radalt.dataset import synthesize_pair

    pair = reader[3]
    regen = synthesize_pair(cfg, draw_example_meta(cfg, 3))
    np.testing.assert_array_equal(pair.clean.samples, regen.clean.samples)
    np.testing.assert_array_equal(pair.dirty.samples, regen.dirty.samples)
    assert pair.meta is not None and pair.meta.index == 3


def test_clean_equals_dirty_without_corruption(tmp_path):
    cfg = small_config(
        num_examples=4,
        interference_mode="none",
        snr_db_range=(200.0, 200.0),
    )
    path = str(tmp_path / "d.aeds")
    generate_dataset(cfg, path)
    for pair in read_dataset(path):
        err = np.abs(pair.dirty.samples - pair.clean.samples).max()
        assert err < 1e-3


def test_unfaded_label_option(tmp_path):
    cfg = small_config(num_examples=3, faded_label=False, interference_mode="none",
                       snr_db_range=(200.0, 200.0))
    path = str(tmp_path / "d.aeds")
    generate_dataset(cfg, path)
    reader = read_dataset(path)
    pair = reader[0]
    # Label excludes fading, dirty still includes it: they differ by the envelope.
    ratio = (pair.dirty.samples / pair.clean.samples).real
    assert ratio.std() > 0.1


def test_wrong_magic_rejected(tmp_path):
    path = str(tmp_path / "d.aeds")
    generate_dataset(small_config(num_examples=2), path)
    blob = bytearray(open(path, "rb").read())
    blob[:4] = b"XXXX"
    open(path, "wb").write(bytes(blob))
    with pytest.raises(FileFormatError, match="AEDS"):
        read_dataset(path)
    assert DATASET_MAGIC == b"AEDS"


def test_truncated_payload_rejected(tmp_path):
    path = str(tmp_path / "d.aeds")
    generate_dataset(small_config(num_examples=2), path)
    blob = open(path, "rb").read()
    open(path, "wb").write(blob[:-40])
    with pytest.raises(FileFormatError, match="size mismatch"):
        read_dataset(path)


def test_index_out_of_range(tmp_path):
    path = str(tmp_path / "d.aeds")
    generate_dataset(small_config(num_examples=5), path)
    reader = read_dataset(path)
    with pytest.raises(IndexError):
        reader[5]


def test_metadata_within_configured_ranges(tmp_path):
    cfg = small_config(num_examples=60, interference_mode="mixed")
    path = str(tmp_path / "d.aeds")
    generate_dataset(cfg, path)
    reader = read_dataset(path)
    duration = cfg.chirp.duration_s
    bw = cfg.chirp.bandwidth_hz
    modes = set()
    for meta in reader.metas():
        modes.add(meta.mode)
        assert 0.0 <= meta.delay_s <= 0.01 * duration
        assert -25.0 <= meta.snr_db <= 30.0
        for tone in meta.tones:
            assert abs(tone.frequency_hz) <= bw / 2
            assert -20.0 <= tone.sir_db <= 20.0
        assert 1 <= len(meta.tones) <= 5 or meta.mode in ("qpsk", "none")
        if meta.qpsk is not None:
            q = meta.qpsk
            assert -20.0 <= q.sir_db <= 0.0
            assert 0.1 * bw - 1e-6 <= q.bandwidth_hz <= bw + 1e-6
            assert q.start_frac + q.duration_frac <= 1.0 + 1e-9
            assert abs(q.center_hz) + q.bandwidth_hz / 2 <= bw / 2 + 1e-3
    assert modes == {"tones", "qpsk", "both"}


def test_delay_distribution_uniform():
    # Kolmogorov-Smirnov statistic of drawn delays against U(0, 0.01*T).
    cfg = small_config(num_examples=1200)
    delays = np.array(
        [draw_example_meta(cfg, i).delay_s for i in range(cfg.num_examples)]
    )
    scale = 0.01 * cfg.chirp.duration_s
    ecdf_points = np.sort(delays) / scale
    n = len(ecdf_points)
    upper = np.abs(np.arange(1, n + 1) / n - ecdf_points).max()
    lower = np.abs(np.arange(0, n) / n - ecdf_points).max()
    assert max(upper, lower) < 0.05


def test_invalid_configs_rejected():
    with pytest.raises(ConfigError):
        small_config(num_examples=0).validate()
    with pytest.raises(ConfigError):
        small_config(interference_mode="chaos").validate()
    with pytest.raises(ConfigError):
        small_config(delay_frac_range=(0.01, 0.0)).validate()
    with pytest.raises(ConfigError):
        small_config(num_tones_range=(0, 3)).validate()


class TestBatchIterator:
    @pytest.fixture
    def reader(self, tmp_path) -> DatasetReader:
        path = str(tmp_path / "d.aeds")
        generate_dataset(small_config(num_examples=10), path)
        return read_dataset(path)

    def test_single_batch_when_size_covers_all(self, reader):
        batches = list(batch_iterator(reader, batch_size=10))
        assert len(batches) == 1
        dirty, clean = batches[0]
        assert dirty.shape == (10, 2, 128)
        assert clean.shape == (10, 2, 128)
        assert dirty.dtype == np.float32

    def test_partial_final_batch_and_coverage(self, reader):
        sizes = [d.shape[0] for d, _ in batch_iterator(reader, batch_size=4)]
        assert sizes == [4, 4, 2]

    def test_shuffle_determinism(self, reader):
        a = [d.copy() for d, _ in batch_iterator(reader, 3, shuffle_seed=5)]
        b = [d.copy() for d, _ in batch_iterator(reader, 3, shuffle_seed=5)]
        c = [d.copy() for d, _ in batch_iterator(reader, 3, shuffle_seed=6)]
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)
        assert any(np.any(x != y) for x, y in zip(a, c))

    def test_channels_are_i_and_q(self, reader):
        dirty, clean = next(batch_iterator(reader, 2))
        pair = reader[0]
        np.testing.assert_array_equal(clean[0, 0], pair.clean.samples.real)
        np.testing.assert_array_equal(clean[0, 1], pair.clean.samples.imag)
        np.testing.assert_array_equal(dirty[0, 0], pair.dirty.samples.real)
