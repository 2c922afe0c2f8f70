"""Count-sketch projections and compact bilinear pooling.

A count sketch hashes each input coordinate i to bucket h[i] with sign s[i]:
out[k] = sum over i with h[i] == k of s[i] * v[i]. The sketch of an outer
product u (x) w factorizes as the circular convolution of the two vector
sketches, which is what makes bilinear pooling affordable: the d_u * d_w
outer product never gets materialized.
"""

from __future__ import annotations

import dataclasses

import numpy as np


@dataclasses.dataclass(frozen=True)
class SketchParams:
    h: np.ndarray  # bucket index per input coordinate, values in [0, d_out)
    s: np.ndarray  # sign per input coordinate, +/-1
    d_out: int

    def __post_init__(self):
        h = np.asarray(self.h)
        s = np.asarray(self.s)
        if h.ndim != 1 or h.shape != s.shape:
            raise ValueError("h and s must be 1-D arrays of equal length")
        if self.d_out < 1:
            raise ValueError("d_out must be >= 1")
        if h.size == 0:
            raise ValueError("empty sketch")
        if h.min() < 0 or h.max() >= self.d_out:
            raise ValueError("bucket indices out of range")
        if not np.all(np.abs(s) == 1.0):
            raise ValueError("signs must be +/-1")

    @property
    def d_in(self) -> int:
        return self.h.size


def make_sketch_params(d_in: int, d_out: int, rng) -> SketchParams:
    """Draw hash buckets and signs uniformly. Both stay fixed for a model's life."""
    if d_in < 1 or d_out < 1:
        raise ValueError("d_in and d_out must be >= 1")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    h = rng.integers(0, d_out, size=d_in)
    s = rng.integers(0, 2, size=d_in).astype(np.float64) * 2.0 - 1.0
    return SketchParams(h=h, s=s, d_out=d_out)


def sketch_matrix(params: SketchParams, dtype=np.float64) -> np.ndarray:
    """Dense (d_out, d_in) projection equivalent: out = M @ v."""
    m = np.zeros((params.d_out, params.d_in), dtype=dtype)
    m[np.asarray(params.h), np.arange(params.d_in)] = params.s
    return m


def count_sketch(v, params: SketchParams) -> np.ndarray:
    """Sketch along the last axis: (..., d_in) -> (..., d_out)."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != params.d_in:
        raise ValueError(f"last axis {v.shape[-1]} != sketch d_in {params.d_in}")
    if v.ndim == 1:
        return np.bincount(
            np.asarray(params.h), weights=np.asarray(params.s) * v, minlength=params.d_out
        )
    return v @ sketch_matrix(params).T


def compact_bilinear(u, w, pu: SketchParams, pw: SketchParams) -> np.ndarray:
    """Sketched outer product of two vectors via circular convolution.

    Equals count_sketch(outer(u, w)) under the induced hash
    (pu.h[i] + pw.h[j]) mod d_out with sign pu.s[i] * pw.s[j].
    """
    if pu.d_out != pw.d_out:
        raise ValueError(f"sketches disagree on d_out: {pu.d_out} vs {pw.d_out}")
    su = count_sketch(u, pu)
    sw = count_sketch(w, pw)
    return np.fft.irfft(np.fft.rfft(su) * np.fft.rfft(sw), n=pu.d_out)


def cbp_framewise(u, w, pu: SketchParams, pw: SketchParams) -> np.ndarray:
    """Per-frame compact bilinear pooling of channel maps.

    Args:
        u, w: arrays shaped (channels, frames) or (batch, channels, frames).
        pu, pw: the two independent sketch draws.

    Returns:
        Same layout with the channel axis replaced by d_out.
    """
    u = np.asarray(u, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if u.shape != w.shape:
        raise ValueError(f"operand shapes differ: {u.shape} vs {w.shape}")
    if u.ndim not in (2, 3):
        raise ValueError("expected (channels, frames) or (batch, channels, frames)")
    if pu.d_out != pw.d_out:
        raise ValueError(f"sketches disagree on d_out: {pu.d_out} vs {pw.d_out}")
    moved = u.ndim == 3
    if not moved:
        u, w = u[None], w[None]
    mu = sketch_matrix(pu)
    mw = sketch_matrix(pw)
    su = np.moveaxis(np.tensordot(mu, u, axes=([1], [1])), 0, 1)
    sw = np.moveaxis(np.tensordot(mw, w, axes=([1], [1])), 0, 1)
    out = np.fft.irfft(
        np.fft.rfft(su, axis=1) * np.fft.rfft(sw, axis=1), n=pu.d_out, axis=1
    )
    return out if moved else out[0]
