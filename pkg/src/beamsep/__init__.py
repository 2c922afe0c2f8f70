"""Two-source reverberant scene synthesis, beamforming, and TCN-based separation."""

__version__ = "0.1.0"

from .dsp import SAMPLE_RATE, N_BINS, StftConfig, stft, istft

__all__ = ["SAMPLE_RATE", "N_BINS", "StftConfig", "stft", "istft", "__version__"]
