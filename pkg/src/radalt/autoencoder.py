"""The CNN-only denoising autoencoder: assembly, training, and checkpoints.

Encoder: an IQ mixer collapses the [2, N] input to one real channel, then
three conv/leaky-relu/max-pool stages halve the temporal length each (N/8 at
the bottleneck). Decoder: three unpool/transposed-conv/leaky-relu stages
mirror the encoder, consuming the encoder's pooling indices in reverse stage
order, followed by a linear IQ unmixer back to [2, N].
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import neuralnet as nn
from .errors import ConfigError, DimensionError, FileFormatError
from .waveform import IQSignal

CHECKPOINT_MAGIC = b"AECW"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<4sIIIIIIIIdI")
_ADAM_HEADER = struct.Struct("<Qdddd")
_FLAG_ADAM = 1


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyper-parameters.

    kernel_size defaults to the full-length configuration (200 at 40k
    samples); desk-scale experiments at ~1000 samples work best around 300.
    latent_channels=None keeps the interior channel count at the bottleneck;
    set it to 1 for a strict element-count bottleneck.
    """

    num_samples: int
    kernel_size: int = 200
    channels: int = 64
    num_stages: int = 3
    pool_window: int = 2
    latent_channels: int | None = None
    activation_slope: float = 0.2
    mixer_channels: int | None = None

    @property
    def resolved_latent_channels(self) -> int:
        return self.channels if self.latent_channels is None else self.latent_channels

    @property
    def resolved_mixer_channels(self) -> int:
        return self.channels if self.mixer_channels is None else self.mixer_channels

    @property
    def latent_length(self) -> int:
        return self.num_samples // self.pool_window**self.num_stages

    def validate(self) -> None:
        if self.num_samples <= 0:
            raise ConfigError("num_samples must be positive")
        if self.kernel_size < 2:
            raise ConfigError("kernel_size must be at least 2")
        if self.channels < 1:
            raise ConfigError("channels must be at least 1")
        if self.num_stages < 1:
            raise ConfigError("num_stages must be at least 1")
        if self.pool_window < 2:
            raise ConfigError("pool_window must be at least 2")
        factor = self.pool_window**self.num_stages
        if self.num_samples % factor != 0:
            raise ConfigError(
                f"num_samples {self.num_samples} must be divisible by "
                f"pool_window**num_stages = {factor}"
            )
        if self.resolved_latent_channels < 1:
            raise ConfigError("latent_channels must be at least 1")
        if self.resolved_mixer_channels < 1:
            raise ConfigError("mixer_channels must be at least 1")
        if self.activation_slope < 0:
            raise ConfigError("activation_slope must be non-negative")


class Autoencoder:
    """Model weights plus the fixed forward/backward topology."""

    def __init__(self, cfg: ModelConfig, seed: int = 0):
        cfg.validate()
        self.cfg = cfg
        rng = np.random.default_rng(np.random.SeedSequence([0x41454357, seed]))
        ch = cfg.channels
        latent = cfg.resolved_latent_channels
        stages = cfg.num_stages

        gain = nn.leaky_relu_gain(cfg.activation_slope)
        mixed = cfg.resolved_mixer_channels
        self.mixer = nn.IQMixerLayer(mixed, rng, "mixer")
        self.enc_convs: list[nn.Conv1dLayer] = []
        for i in range(stages):
            c_in = mixed if i == 0 else ch
            c_out = latent if i == stages - 1 else ch
            self.enc_convs.append(
                nn.Conv1dLayer(c_in, c_out, cfg.kernel_size, rng, f"enc{i + 1}", gain)
            )
        self.dec_convs: list[nn.ConvTranspose1dLayer] = []
        for j in range(stages):
            c_in = latent if j == 0 else ch
            c_out = mixed if j == stages - 1 else ch
            self.dec_convs.append(
                nn.ConvTranspose1dLayer(c_in, c_out, cfg.kernel_size, rng, f"dec{j + 1}", gain)
            )
        self.unmixer = nn.IQUnmixerLayer(mixed, rng, "unmixer")
        self._cache: dict | None = None

    def parameters(self) -> list[nn.Parameter]:
        layers = [self.mixer, *self.enc_convs, *self.dec_convs, self.unmixer]
        return [p for layer in layers for p in layer.parameters()]

    def num_parameters(self) -> int:
        return sum(p.data.size for p in self.parameters())

    def stage_lengths(self) -> list[int]:
        """Temporal length after each block: input, mixer, encoder pools,
        decoder stages, unmixer."""
        n = self.cfg.num_samples
        w = self.cfg.pool_window
        s = self.cfg.num_stages
        enc = [n // w**i for i in range(1, s + 1)]
        dec = [n // w**i for i in range(s - 1, -1, -1)]
        return [n, n, *enc, *dec, n]

    def compression_ratio(self) -> float:
        """Input dimensionality over latent temporal length: (2N)/(N/8) = 16."""
        return 2.0 * self.cfg.num_samples / self.cfg.latent_length

    def element_compression_ratio(self) -> float:
        """Strict element-count ratio, counting latent channels."""
        return 2.0 * self.cfg.num_samples / (
            self.cfg.latent_length * self.cfg.resolved_latent_channels
        )

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        """Reconstruct a batch. x: [batch, 2, N] (or [2, N])."""
        squeeze = x.ndim == 2
        if squeeze:
            x = x[None]
        if x.ndim != 3 or x.shape[1] != 2:
            raise DimensionError(f"expected input [batch, 2, N], got {x.shape}")
        if x.shape[2] != self.cfg.num_samples:
            raise DimensionError(
                f"input length {x.shape[2]} does not match model length "
                f"{self.cfg.num_samples}"
            )

        slope = self.cfg.activation_slope
        w = self.cfg.pool_window
        cache: dict = {"pool_indices": [], "pool_lengths": [], "enc_pre": [], "dec_pre": []}

        h = self.mixer.forward(x)
        for conv in self.enc_convs:
            pre = conv.forward(h)
            cache["enc_pre"].append(pre)
            act = nn.leaky_relu(pre, slope)
            cache["pool_lengths"].append(act.shape[-1])
            h, idx = nn.maxpool(act, w)
            cache["pool_indices"].append(idx)

        for j, tconv in enumerate(self.dec_convs):
            idx = cache["pool_indices"][self.cfg.num_stages - 1 - j]
            h = nn.max_unpool(h, idx, w)
            pre = tconv.forward(h)
            cache["dec_pre"].append(pre)
            h = nn.leaky_relu(pre, slope)

        y = self.unmixer.forward(h)
        self._cache = cache if train else None
        return y[0] if squeeze else y

    def backward(self, grad_out: np.ndarray) -> None:
        """Accumulate parameter gradients for the most recent training forward."""
        if self._cache is None:
            raise RuntimeError("backward() requires a preceding forward(train=True)")
        cache = self._cache
        slope = self.cfg.activation_slope
        w = self.cfg.pool_window

        g = self.unmixer.backward(grad_out if grad_out.ndim == 3 else grad_out[None])
        for j in range(self.cfg.num_stages - 1, -1, -1):
            g = nn.leaky_relu_backward(cache["dec_pre"][j], g, slope)
            g = self.dec_convs[j].backward(g)
            idx = cache["pool_indices"][self.cfg.num_stages - 1 - j]
            g = nn.max_unpool_backward(g, idx)
        for i in range(self.cfg.num_stages - 1, -1, -1):
            idx = cache["pool_indices"][i]
            g = nn.maxpool_backward(g, idx, cache["pool_lengths"][i])
            g = nn.leaky_relu_backward(cache["enc_pre"][i], g, slope)
            g = self.enc_convs[i].backward(g)
        self.mixer.backward(g)
        self._cache = None


def build_model(cfg: ModelConfig, seed: int = 0) -> Autoencoder:
    return Autoencoder(cfg, seed)


def signal_to_channels(sig: IQSignal) -> np.ndarray:
    """IQSignal -> float32 [2, N] with I on row 0 and Q on row 1."""
    return np.stack([sig.samples.real, sig.samples.imag]).astype(np.float32)


def channels_to_signal(arr: np.ndarray, sample_rate_hz: float) -> IQSignal:
    if arr.ndim != 2 or arr.shape[0] != 2:
        raise DimensionError(f"expected a [2, N] array, got {arr.shape}")
    return IQSignal((arr[0] + 1j * arr[1]).astype(np.complex64), sample_rate_hz)


# Floor for the per-example input RMS used to condition model inputs.
_SCALE_FLOOR = 1e-20


def input_scales(batch: np.ndarray) -> np.ndarray:
    """Per-example RMS over channels and time, floored away from zero.

    Interference can raise the input RMS far above the unit-amplitude chirp
    (a -20 dB SIR tone alone is 10x); training and inference divide each
    example by its own RMS so the network always sees unit-scale inputs, and
    the reconstruction is scaled back afterwards.
    """
    scales = np.sqrt(np.mean(np.square(batch, dtype=np.float64), axis=(-2, -1)))
    return np.maximum(scales, _SCALE_FLOOR).astype(np.float32)


def denoise_batch(model: Autoencoder, dirty: np.ndarray) -> np.ndarray:
    """Reconstruct a [batch, 2, N] tensor with input-scale conditioning."""
    scales = input_scales(dirty)[:, None, None]
    return model.forward(dirty / scales) * scales


def reconstruct(model: Autoencoder, sig: IQSignal) -> IQSignal:
    """Run one signal through the autoencoder."""
    out = denoise_batch(model, signal_to_channels(sig)[None])[0]
    return channels_to_signal(out, sig.sample_rate_hz)


@dataclass
class EpochLog:
    epoch: int
    train_mse: float
    holdout_mse: float = float("nan")


@dataclass
class TrainResult:
    epochs: list[EpochLog] = field(default_factory=list)
    best_holdout_mse: float = float("inf")


def _eval_mse(model: Autoencoder, dirty: np.ndarray, clean: np.ndarray,
              batch_size: int = 64) -> float:
    """Scale-equalized holdout loss (same units as the training objective)."""
    total = 0.0
    for start in range(0, dirty.shape[0], batch_size):
        d = dirty[start : start + batch_size]
        c = clean[start : start + batch_size]
        scales = input_scales(d)[:, None, None]
        out = model.forward(d / scales)
        total += float(np.sum((out.astype(np.float64) - c / scales) ** 2))
    return total / clean.size


def train(
    model: Autoencoder,
    dirty: np.ndarray,
    clean: np.ndarray,
    *,
    epochs: int,
    batch_size: int,
    adam: nn.AdamState | None = None,
    seed: int = 0,
    holdout: tuple[np.ndarray, np.ndarray] | None = None,
    checkpoint_path: str | None = None,
    clip_grad_norm: float | None = 1.0,
    verbose: bool = False,
) -> TrainResult:
    """Minimize reconstruction MSE over (dirty, clean) float32 [M, 2, N] pairs.

    Each example is divided by its own input RMS before entering the model
    (see input_scales), so the objective is a scale-equalized MSE: examples
    with overpowering interference do not dominate the gradient, and
    reported losses are in these normalized units. Shuffling is
    deterministic per (seed, epoch). When a holdout set and a checkpoint
    path are given, the best-holdout model is saved after each improvement;
    without a holdout the train loss decides.
    """
    if dirty.shape != clean.shape:
        raise DimensionError(f"dirty shape {dirty.shape} != clean shape {clean.shape}")
    if dirty.shape[-1] != model.cfg.num_samples:
        raise DimensionError(
            f"dataset signal length {dirty.shape[-1]} does not match model "
            f"length {model.cfg.num_samples}"
        )
    if adam is None:
        adam = nn.AdamState(model.parameters())
    if batch_size < 1:
        raise ConfigError("batch_size must be at least 1")

    num = dirty.shape[0]
    scales = input_scales(dirty)[:, None, None]
    dirty_n = dirty / scales
    clean_n = clean / scales
    result = TrainResult()
    for epoch in range(1, epochs + 1):
        order = np.random.default_rng(np.random.SeedSequence([seed, epoch])).permutation(num)
        sq_sum = 0.0
        for start in range(0, num, batch_size):
            sel = order[start : start + batch_size]
            batch_dirty = dirty_n[sel]
            batch_clean = clean_n[sel]
            out = model.forward(batch_dirty, train=True)
            loss, grad = nn.mse_loss(out, batch_clean)
            model.backward(grad)
            if clip_grad_norm is not None:
                nn.clip_gradient_norm(adam.params, clip_grad_norm)
            nn.adam_step(adam)
            sq_sum += loss * batch_clean.size

        log = EpochLog(epoch=epoch, train_mse=sq_sum / clean.size)
        if holdout is not None:
            log.holdout_mse = _eval_mse(model, holdout[0], holdout[1])
        result.epochs.append(log)

        score = log.holdout_mse if holdout is not None else log.train_mse
        if score < result.best_holdout_mse:
            result.best_holdout_mse = score
            if checkpoint_path is not None:
                save_checkpoint(model, checkpoint_path, adam=adam)
        if verbose:
            print(
                f"epoch {epoch:3d}  train_mse {log.train_mse:.6f}"
                + (f"  holdout_mse {log.holdout_mse:.6f}" if holdout is not None else "")
            )
    return result


def save_checkpoint(model: Autoencoder, path: str, adam: nn.AdamState | None = None) -> None:
    """Write weights (and optionally Adam state) in the AECW binary format.

    Layout: header (magic, version, config fields, flags), then each parameter
    in model traversal order as raw little-endian float32, then, when present,
    the Adam step/hyper-parameters and first/second moments in the same order.
    """
    cfg = model.cfg
    flags = _FLAG_ADAM if adam is not None else 0
    chunks = [
        _HEADER.pack(
            CHECKPOINT_MAGIC,
            CHECKPOINT_VERSION,
            cfg.num_samples,
            cfg.kernel_size,
            cfg.channels,
            cfg.num_stages,
            cfg.pool_window,
            cfg.resolved_latent_channels,
            cfg.resolved_mixer_channels,
            cfg.activation_slope,
            flags,
        )
    ]
    chunks += [p.data.astype("<f4", copy=False).tobytes() for p in model.parameters()]
    if adam is not None:
        chunks.append(
            _ADAM_HEADER.pack(adam.step, adam.learning_rate, adam.beta1, adam.beta2,
                              adam.epsilon)
        )
        chunks += [m.astype("<f4", copy=False).tobytes() for m in adam.m]
        chunks += [v.astype("<f4", copy=False).tobytes() for v in adam.v]
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def load_checkpoint(path: str) -> tuple[Autoencoder, nn.AdamState | None]:
    """Read an AECW checkpoint back into a model (bit-exact round trip)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise FileFormatError(
            f"checkpoint too short for header: {len(blob)} < {_HEADER.size} bytes"
        )
    (magic, version, n, k, ch, stages, pool, latent, mixed, slope,
     flags) = _HEADER.unpack_from(blob)
    if magic != CHECKPOINT_MAGIC:
        raise FileFormatError(
            f"bad checkpoint magic {magic!r}, expected {CHECKPOINT_MAGIC.decode()!r}"
        )
    if version != CHECKPOINT_VERSION:
        raise FileFormatError(f"unsupported checkpoint version {version}")

    cfg = ModelConfig(
        num_samples=n,
        kernel_size=k,
        channels=ch,
        num_stages=stages,
        pool_window=pool,
        latent_channels=latent,
        activation_slope=slope,
        mixer_channels=mixed,
    )
    model = Autoencoder(cfg)
    params = model.parameters()
    param_bytes = sum(4 * p.data.size for p in params)
    expected = _HEADER.size + param_bytes
    has_adam = bool(flags & _FLAG_ADAM)
    if has_adam:
        expected += _ADAM_HEADER.size + 2 * param_bytes
    if len(blob) != expected:
        raise FileFormatError(
            f"checkpoint size mismatch: expected {expected} bytes, got {len(blob)}"
        )

    offset = _HEADER.size

    def take(target: np.ndarray) -> None:
        nonlocal offset
        count = target.size
        target[...] = np.frombuffer(blob, dtype="<f4", count=count, offset=offset).reshape(
            target.shape
        )
        offset += 4 * count

    for p in params:
        take(p.data)

    adam = None
    if has_adam:
        step, lr, b1, b2, eps = _ADAM_HEADER.unpack_from(blob, offset)
        offset += _ADAM_HEADER.size
        adam = nn.AdamState(params, learning_rate=lr, beta1=b1, beta2=b2, epsilon=eps)
        adam.step = step
        for m in adam.m:
            take(m)
        for v in adam.v:
            take(v)
    return model, adam
