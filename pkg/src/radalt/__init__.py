"""FMCW radar altimeter simulation with a CNN-only denoising autoencoder."""

__version__ = "0.1.0"

from .waveform import ChirpParams, IQSignal, apply_delay, generate_cwlfm  # noqa: F401
from .channel import FadingParams, NoiseParams, QpskSpec, ToneSpec  # noqa: F401
from .autoencoder import Autoencoder, ModelConfig, build_model  # noqa: F401
from .rangeproc import RangeEstimate, RangeProfile, estimate_range, stretch_process  # noqa: F401
