"""Utterance enhancement: beamformed waveforms in, estimated clean waveform out.

Chain: complex STFT of both beams, optional per-bin dereverberation, magnitude
windows through the network, window outputs concatenated with the padding
trimmed (windows are independent units, no cross-window overlap-add), clamped
at zero, recombined with the phase of the speech-look beam, inverse STFT.
"""

from __future__ import annotations

import numpy as np

from .datagen import WINDOW_SIZES
from .dsp import DEFAULT_STFT, StftConfig, istft, reflect_pad_frames, stft
from .wpe import WpeConfig, wpe_pair


def _cut_windows(mag: np.ndarray, window_frames: int) -> np.ndarray:
    padded = reflect_pad_frames(mag, window_frames)
    num = padded.shape[1] // window_frames
    return padded.reshape(padded.shape[0], num, window_frames).transpose(1, 0, 2)


def estimate_magnitude(model, mag0, mag1, window_frames: int,
                       batch_size: int = 8,
                       log_features: bool = False) -> np.ndarray:
    """Run the network over consecutive windows and reassemble the utterance.

    mag0/mag1: (bins, frames) magnitude spectrograms. Returns the estimated
    clean magnitude map trimmed to the input frame count, clamped at zero.
    With log_features the network sees log1p-compressed magnitudes and its
    output is expanded back through expm1; this must match how the model
    was trained.
    """
    if window_frames not in WINDOW_SIZES:
        raise ValueError(f"window_frames must be one of {WINDOW_SIZES}, got {window_frames}")
    # single-branch models leave the other side None
    lead = mag0 if mag0 is not None else mag1
    frames = lead.shape[1]
    wins0 = wins1 = None
    if mag0 is not None:
        feats0 = np.log1p(mag0) if log_features else mag0
        wins0 = _cut_windows(feats0.astype(model.dtype, copy=False), window_frames)
    if mag1 is not None:
        feats1 = np.log1p(mag1) if log_features else mag1
        wins1 = _cut_windows(feats1.astype(model.dtype, copy=False), window_frames)
    num = (wins0 if wins0 is not None else wins1).shape[0]
    outs = []
    for start in range(0, num, batch_size):
        sl = slice(start, start + batch_size)
        outs.append(model.forward(None if wins0 is None else wins0[sl],
                                  None if wins1 is None else wins1[sl],
                                  training=False))
    est = np.concatenate(outs, axis=0).transpose(1, 0, 2).reshape(lead.shape[0], -1)
    if log_features:
        est = np.expm1(est)
    return np.maximum(est[:, :frames], 0.0)


def enhance_pair(b0, b1, model, window_frames: int,
                 cfg: StftConfig = DEFAULT_STFT, use_wpe: bool = False,
                 wpe_cfg: WpeConfig | None = None,
                 batch_size: int = 8, log_features: bool = False) -> np.ndarray:
    """Estimate the clean waveform from the two beamformed waveforms.

    The estimated magnitudes take the phase of the speech-look beam (after
    dereverberation when that stage is enabled, so magnitude and phase stay
    consistent). The output is at most one hop shorter than the input.
    """
    b0 = np.asarray(b0, dtype=np.float64)
    b1 = np.asarray(b1, dtype=np.float64)
    if b0.shape != b1.shape or b0.ndim != 1:
        raise ValueError("b0 and b1 must be 1-D arrays of equal length")
    spec0 = stft(b0, cfg)
    spec1 = stft(b1, cfg)
    if use_wpe:
        spec0, spec1 = wpe_pair(spec0, spec1, wpe_cfg or WpeConfig())
    est = estimate_magnitude(model, np.abs(spec0), np.abs(spec1),
                             window_frames, batch_size, log_features)
    phase = np.exp(1j * np.angle(spec0))
    return istft(est.astype(np.float64) * phase, cfg)
