"""Waveform and time-frequency primitives shared by the whole pipeline.

All pipeline audio is mono float at 16 kHz. Spectrograms are arrays of shape
(257, frames): axis 0 is the frequency bin of a 512-point FFT, axis 1 the
frame index. Analysis uses 25 ms frames every 10 ms (15 ms overlap) with a
periodic Hann window; synthesis is weighted overlap-add with the same window.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy.io import wavfile
from scipy.signal import convolve as _sp_convolve

SAMPLE_RATE = 16000
N_BINS = 257


@dataclasses.dataclass(frozen=True)
class StftConfig:
    frame_len: int = 400
    hop: int = 160
    fft_size: int = 512

    def __post_init__(self):
        if self.fft_size // 2 + 1 != N_BINS:
            raise ValueError(
                f"fft_size {self.fft_size} gives {self.fft_size // 2 + 1} bins, "
                f"the pipeline is fixed at {N_BINS}"
            )
        if not (0 < self.hop <= self.frame_len <= self.fft_size):
            raise ValueError(
                f"need 0 < hop <= frame_len <= fft_size, got "
                f"hop={self.hop} frame_len={self.frame_len} fft_size={self.fft_size}"
            )

    def num_frames(self, n_samples: int) -> int:
        if n_samples < self.frame_len:
            raise ValueError(
                f"signal of {n_samples} samples is shorter than one "
                f"{self.frame_len}-sample frame"
            )
        return 1 + (n_samples - self.frame_len) // self.hop


DEFAULT_STFT = StftConfig()


def hann_periodic(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def stft(signal, cfg: StftConfig = DEFAULT_STFT) -> np.ndarray:
    """Short-time Fourier transform.

    Args:
        signal: 1-D float array.
        cfg: analysis geometry.

    Returns:
        Complex array of shape (257, frames), frames = 1 + (len - frame_len) // hop.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a mono signal, got shape {x.shape}")
    n_frames = cfg.num_frames(x.size)
    frames = np.lib.stride_tricks.sliding_window_view(x, cfg.frame_len)[:: cfg.hop]
    frames = frames[:n_frames] * hann_periodic(cfg.frame_len)
    return np.fft.rfft(frames, n=cfg.fft_size, axis=1).T


def istft(spec, cfg: StftConfig = DEFAULT_STFT) -> np.ndarray:
    """Weighted overlap-add inverse of :func:`stft`.

    Per-sample normalization divides by the accumulated squared synthesis
    window, floored at 1e-2, so interior samples of stft->istft round-trips
    are reconstructed exactly. The floor matters at the utterance edges,
    where samples are covered by a single window: there the normalizer
    decays like the squared window tail, and dividing by it would amplify
    any spectrogram modification (a magnitude estimate recombined with a
    different signal's phase) by up to seven orders of magnitude. Flooring
    trades exactness over the outermost ~2.5 ms for bounded gain.
    """
    spec = np.asarray(spec)
    if not np.iscomplexobj(spec):
        raise ValueError("istft needs a complex spectrogram (magnitude alone has no phase)")
    if spec.ndim != 2 or spec.shape[0] != N_BINS:
        raise ValueError(f"expected shape ({N_BINS}, frames), got {spec.shape}")
    n_frames = spec.shape[1]
    win = hann_periodic(cfg.frame_len)
    frames = np.fft.irfft(spec.T, n=cfg.fft_size)[:, : cfg.frame_len] * win
    out_len = (n_frames - 1) * cfg.hop + cfg.frame_len
    y = np.zeros(out_len)
    wsum = np.zeros(out_len)
    wsq = win * win
    for f in range(n_frames):
        start = f * cfg.hop
        y[start : start + cfg.frame_len] += frames[f]
        wsum[start : start + cfg.frame_len] += wsq
    return y / np.maximum(wsum, 1e-2)


def convolve(signal, rir) -> np.ndarray:
    """Full linear convolution, output length len(signal) + len(rir) - 1."""
    x = np.asarray(signal, dtype=np.float64)
    h = np.asarray(rir, dtype=np.float64)
    if x.size == 0 or h.size == 0:
        raise ValueError("convolve requires non-empty operands")
    return _sp_convolve(x, h, mode="full")


def scale_noise_to_snr(target, noise, snr_db: float) -> np.ndarray:
    """Scale `noise` so that 10*log10(P_target / P_noise) equals `snr_db`.

    Powers are means of squares over the common overlap length. Returns the
    scaled copy of the full noise array.
    """
    t = np.asarray(target, dtype=np.float64)
    v = np.asarray(noise, dtype=np.float64)
    n = min(t.size, v.size)
    if n == 0:
        raise ValueError("empty overlap between target and noise")
    p_t = np.mean(t[:n] ** 2)
    p_v = np.mean(v[:n] ** 2)
    if p_t <= 0.0:
        raise ValueError("target has zero power, SNR is undefined")
    if p_v <= 0.0:
        raise ValueError("noise has zero power, cannot be scaled to a finite SNR")
    alpha = np.sqrt(p_t / (p_v * 10.0 ** (snr_db / 10.0)))
    return alpha * v


def reflect_pad_frames(spec, window_frames: int) -> np.ndarray:
    """Pad the frame axis by open-end reflection up to a multiple of `window_frames`.

    Open-end reflection mirrors about the last frame without duplicating it:
    98 frames padded to 160 append frames 96, 95, ..., 35.
    """
    spec = np.asarray(spec)
    if spec.ndim != 2:
        raise ValueError(f"expected (bins, frames), got shape {spec.shape}")
    n = spec.shape[1]
    if n == 0:
        raise ValueError("cannot pad an empty spectrogram")
    if window_frames <= 0:
        raise ValueError(f"window_frames must be positive, got {window_frames}")
    pad = (-n) % window_frames
    if pad == 0:
        return spec
    return np.pad(spec, ((0, 0), (0, pad)), mode="reflect")


def read_wav(path) -> np.ndarray:
    """Read a mono 16 kHz 16-bit PCM WAV as float64 in [-1, 1)."""
    rate, data = wavfile.read(path)
    if rate != SAMPLE_RATE:
        raise ValueError(f"{path}: expected {SAMPLE_RATE} Hz, got {rate} Hz")
    if data.dtype != np.int16:
        raise ValueError(f"{path}: expected 16-bit PCM samples, got dtype {data.dtype}")
    if data.ndim != 1:
        raise ValueError(f"{path}: expected mono, got {data.shape[1]} channels")
    return data.astype(np.float64) / 32768.0


def write_wav(path, samples) -> None:
    """Write float samples as mono 16 kHz 16-bit PCM (values clipped to range)."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a mono signal, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("refusing to write non-finite samples")
    q = np.clip(np.round(x * 32768.0), -32768, 32767).astype(np.int16)
    wavfile.write(path, SAMPLE_RATE, q)


def write_wav_float(path, samples, sample_rate: int = SAMPLE_RATE) -> None:
    """Write float32 WAV (used for impulse responses, which exceed PCM16 range)."""
    x = np.asarray(samples, dtype=np.float32)
    if x.ndim != 1:
        raise ValueError(f"expected a mono signal, got shape {x.shape}")
    wavfile.write(path, sample_rate, x)
