"""Weighted prediction error dereverberation in the STFT domain.

Each frequency bin is treated as an independent time series. Late
reverberation is modelled as a linear combination of delayed past frames
(delay D, K taps); subtracting the prediction leaves the direct-ish signal.
The prediction filter is re-estimated a fixed number of iterations, each time
weighting frames by the current estimate's power so loud frames don't
dominate the fit.
"""

from __future__ import annotations

import dataclasses

import numpy as np


@dataclasses.dataclass(frozen=True)
class WpeConfig:
    taps: int = 10
    delay: int = 3
    iterations: int = 3
    power_floor: float = 1e-10

    def __post_init__(self):
        if self.taps < 1:
            raise ValueError("taps must be >= 1")
        if self.delay < 1:
            raise ValueError("delay must be >= 1 (predicting the current frame is cheating)")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.power_floor <= 0:
            raise ValueError("power_floor must be positive")


def delayed_stack(spec: np.ndarray, taps: int, delay: int) -> np.ndarray:
    """Past-frame stack: out[b, k, f] = spec[b, f - delay - k], zero before t=0."""
    bins_, frames = spec.shape
    out = np.zeros((bins_, taps, frames), dtype=spec.dtype)
    for k in range(taps):
        shift = delay + k
        if shift < frames:
            out[:, k, shift:] = spec[:, : frames - shift]
    return out


def wpe_single(spec, cfg: WpeConfig = WpeConfig()) -> np.ndarray:
    """Dereverberate one complex spectrogram (bins, frames)."""
    x = np.asarray(spec)
    if not np.iscomplexobj(x) or x.ndim != 2:
        raise ValueError(f"expected a complex (bins, frames) spectrogram, got {x.shape}")
    x = x.astype(np.complex128, copy=False)
    frames = x.shape[1]
    if frames <= cfg.delay + cfg.taps:
        raise ValueError(
            f"{frames} frames is too short for delay {cfg.delay} + {cfg.taps} taps"
        )
    taps = cfg.taps
    stack = delayed_stack(x, taps, cfg.delay)
    eye = np.eye(taps)[None, :, :]
    d = x.copy()
    for _ in range(cfg.iterations):
        lam = np.maximum(np.abs(d) ** 2, cfg.power_floor)
        weighted = stack / lam[:, None, :]
        r = np.einsum("bkf,blf->bkl", weighted, np.conj(stack))
        p = np.einsum("bkf,bf->bk", weighted, np.conj(x))
        # Floored near-silent frames get weights up to 1/power_floor, which
        # inflates trace(r) by orders of magnitude; the load constant must be
        # small enough that the loading stays below the eigenvalues carrying
        # the prediction directions, or the filter collapses toward zero.
        load = np.maximum(1e-12 * np.einsum("bkk->b", r).real / taps, 1e-30)
        g = np.linalg.solve(r + load[:, None, None] * eye, p[:, :, None])[:, :, 0]
        d = x - np.einsum("bk,bkf->bf", np.conj(g), stack)
    return d


def wpe_pair(spec0, spec1, cfg: WpeConfig = WpeConfig()):
    """Dereverberate the two beamformed channels independently."""
    return wpe_single(spec0, cfg), wpe_single(spec1, cfg)
