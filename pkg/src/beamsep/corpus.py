"""Synthetic clean-speech and noise stand-ins, plus a loader for user WAV corpora.

The bundled generator produces speech-shaped filtered noise (broad spectral
peak near 500 Hz, gentle rolloff toward both band edges) with two layers of
amplitude modulation: a syllabic layer at 3-5 Hz and a phrasal layer at
0.4-0.8 Hz. Babble noise is the sum of independent speech-shaped streams,
whose envelopes average out and flatten, as in real multi-talker recordings.
Any directory of 16 kHz mono PCM16 WAV files can be used instead.
"""

from __future__ import annotations

import os

import numpy as np

from .dsp import SAMPLE_RATE, read_wav

SYLLABIC_BAND = (3.0, 5.0)
PHRASAL_BAND = (0.4, 0.8)
SYLLABIC_DEPTH = 0.85
PHRASAL_DEPTH = 0.5
BABBLE_STREAMS = 8

# Spectral envelope knobs: first-order bandpass peaked at _PEAK_HZ with an
# extra lowpass knee at _KNEE_HZ so the high end falls off faster, roughly
# like long-term average speech.
_PEAK_HZ = 500.0
_KNEE_HZ = 4000.0


def band_noise(num_samples: int, lo_hz: float, hi_hz: float, rng,
               sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Gaussian noise confined to [lo_hz, hi_hz], unit RMS.

    Built in the frequency domain: complex Gaussian bins inside the band,
    zeros outside. If the signal is too short to resolve the band, the single
    nearest bin is used so the output is still a slow oscillation.
    """
    if num_samples <= 0:
        raise ValueError("num_samples must be positive")
    if not (0.0 <= lo_hz < hi_hz <= sample_rate / 2):
        raise ValueError(f"bad band [{lo_hz}, {hi_hz}] at fs={sample_rate}")
    rng = np.random.default_rng(rng)
    freqs = np.fft.rfftfreq(num_samples, 1.0 / sample_rate)
    mask = (freqs >= lo_hz) & (freqs <= hi_hz)
    if not mask.any():
        mask[np.argmin(np.abs(freqs - 0.5 * (lo_hz + hi_hz)))] = True
    spectrum = np.zeros(freqs.shape, dtype=complex)
    n_band = int(mask.sum())
    spectrum[mask] = rng.normal(size=n_band) + 1j * rng.normal(size=n_band)
    x = np.fft.irfft(spectrum, n=num_samples)
    rms = np.sqrt(np.mean(x ** 2))
    if rms < 1e-30:
        raise ValueError("degenerate band noise (zero power)")
    return x / rms


def speech_shaped_noise(num_samples: int, rng,
                        sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Stationary noise with a speech-like long-term spectrum, unit RMS."""
    if num_samples <= 0:
        raise ValueError("num_samples must be positive")
    rng = np.random.default_rng(rng)
    white = rng.normal(size=num_samples)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(num_samples, 1.0 / sample_rate)
    envelope = freqs / (freqs ** 2 + _PEAK_HZ ** 2)
    envelope /= np.sqrt(1.0 + (freqs / _KNEE_HZ) ** 2)
    x = np.fft.irfft(spectrum * envelope, n=num_samples)
    return x / np.sqrt(np.mean(x ** 2))


def synth_utterance(num_samples: int, rng,
                    sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """One synthetic 'utterance': shaped noise under syllabic + phrasal AM.

    Unit RMS. The modulators are band-limited Gaussian gains clipped at zero,
    so the output has genuine pauses where the syllabic gain swings negative.
    """
    rng = np.random.default_rng(rng)
    carrier = speech_shaped_noise(num_samples, rng, sample_rate)
    syllabic = band_noise(num_samples, *SYLLABIC_BAND, rng, sample_rate)
    phrasal = band_noise(num_samples, *PHRASAL_BAND, rng, sample_rate)
    gain = np.clip(1.0 + SYLLABIC_DEPTH * syllabic, 0.0, None)
    gain *= np.clip(1.0 + PHRASAL_DEPTH * phrasal, 0.0, None)
    x = carrier * gain
    rms = np.sqrt(np.mean(x ** 2))
    if rms < 1e-30:
        raise ValueError("degenerate utterance (modulator silenced everything)")
    return x / rms


def synth_babble(num_samples: int, rng, num_streams: int = BABBLE_STREAMS,
                 sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Multi-talker babble: sum of independent synthetic utterances, unit RMS."""
    if num_streams < 1:
        raise ValueError("num_streams must be >= 1")
    rng = np.random.default_rng(rng)
    total = np.zeros(num_samples)
    for _ in range(num_streams):
        total += synth_utterance(num_samples, rng, sample_rate)
    return total / np.sqrt(np.mean(total ** 2))


def list_corpus(corpus_dir) -> list:
    """All .wav files under corpus_dir, sorted by filename.

    Sorting makes downstream split assignment and manifests deterministic for
    a given directory content. Raises FileNotFoundError when the directory is
    missing or holds no WAV files.
    """
    if not os.path.isdir(corpus_dir):
        raise FileNotFoundError(f"corpus directory not found: {corpus_dir}")
    names = sorted(n for n in os.listdir(corpus_dir) if n.lower().endswith(".wav"))
    if not names:
        raise FileNotFoundError(f"no .wav files in corpus directory: {corpus_dir}")
    return [os.path.join(corpus_dir, n) for n in names]


def split_corpus(paths, split: str) -> list:
    # Deterministic 8/1/1 round-robin over the sorted file list: index mod 10
    # in 0..7 -> train, 8 -> dev, 9 -> test. Independent of seed so the same
    # directory always yields the same partition.
    buckets = {"train": tuple(range(8)), "dev": (8,), "test": (9,)}
    if split not in buckets:
        raise ValueError(f"split must be train/dev/test, got {split!r}")
    keep = buckets[split]
    out = [p for i, p in enumerate(paths) if i % 10 in keep]
    if not out:
        raise FileNotFoundError(f"corpus too small: no files land in split {split!r}")
    return out


def load_utterance(path) -> np.ndarray:
    """Read one corpus WAV as float64 in [-1, 1)."""
    return read_wav(path)
