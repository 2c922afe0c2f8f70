"""Delay-and-sum beamforming for a linear array.

Angles of incidence are measured from broadside (the array normal) in the
horizontal plane, positive toward the positive end of the mic-offset axis.
A plane wave from angle phi reaches the mic at offset d ahead of the array
center by d*sin(phi)/c seconds, so delaying channel m by tau_m = d_m*sin(phi)/c
aligns all channels for that look direction. The beamformer output is the
bare sum of the aligned channels (no 1/M).
"""

from __future__ import annotations

import dataclasses
from typing import NamedTuple, Sequence

import numpy as np

from .dsp import SAMPLE_RATE

SPEED_OF_SOUND = 343.0

# four-capsule linear array, offsets in meters from the reference point
KINECT_OFFSETS = (-0.113, 0.036, 0.076, 0.113)


@dataclasses.dataclass(frozen=True)
class BeamformerConfig:
    mic_offsets: tuple = KINECT_OFFSETS
    look_aoi: float = 0.0  # radians from broadside
    speed_of_sound: float = SPEED_OF_SOUND
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        offs = np.asarray(self.mic_offsets, dtype=np.float64)
        if offs.ndim != 1 or offs.size < 2:
            raise ValueError("need at least two mic offsets")
        if not np.all(np.isfinite(offs)):
            raise ValueError("mic offsets must be finite")
        if not abs(self.look_aoi) <= np.pi / 2:
            raise ValueError(f"look angle {self.look_aoi} rad outside [-pi/2, pi/2]")
        if self.speed_of_sound <= 0:
            raise ValueError("speed of sound must be positive")


class SteeringDelays(NamedTuple):
    seconds: np.ndarray
    samples: np.ndarray


def steering_delays(cfg: BeamformerConfig) -> SteeringDelays:
    """Per-channel steering delays tau_m = d_m * sin(look) / c.

    Returns exact delays in seconds and their nearest-sample quantization.
    """
    offs = np.asarray(cfg.mic_offsets, dtype=np.float64)
    tau = offs * np.sin(cfg.look_aoi) / cfg.speed_of_sound
    samples = np.round(tau * cfg.sample_rate).astype(np.int64)
    return SteeringDelays(tau, samples)


def delay_and_sum(channels, delay_samples) -> np.ndarray:
    """Sum channels with per-channel integer delays: out[t] = sum_m x_m[t - tau_m].

    Samples shifted past either end of the output are dropped; out-of-range
    reads contribute zero. Output length equals the channel length.
    """
    x = np.asarray(channels, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected (channels, samples), got shape {x.shape}")
    d = np.asarray(delay_samples, dtype=np.int64)
    if d.shape != (x.shape[0],):
        raise ValueError(
            f"got {d.size} delays for {x.shape[0]} channels"
        )
    n = x.shape[1]
    out = np.zeros(n)
    for ch, k in zip(x, d):
        if k >= n or k <= -n:
            continue
        if k >= 0:
            out[k:] += ch[: n - k]
        else:
            out[: n + k] += ch[-k:]
    return out


def narrowband_gain(cfg: BeamformerConfig, source_aoi: float, freq_hz: float) -> float:
    """Array magnitude response toward a source angle at one frequency.

    Uses continuous (unquantized) delays:
    gain = |sum_m exp(j*2*pi*f*(tau_m(source) - tau_m(look)))| / M,
    so gain == 1.0 exactly when source_aoi == look_aoi.
    """
    if not 0.0 < freq_hz < cfg.sample_rate / 2:
        raise ValueError(
            f"frequency {freq_hz} Hz outside (0, {cfg.sample_rate / 2}) Hz"
        )
    if not abs(source_aoi) <= np.pi / 2:
        raise ValueError(f"source angle {source_aoi} rad outside [-pi/2, pi/2]")
    offs = np.asarray(cfg.mic_offsets, dtype=np.float64)
    dtau = offs * (np.sin(source_aoi) - np.sin(cfg.look_aoi)) / cfg.speed_of_sound
    phase = 2.0 * np.pi * freq_hz * dtau
    return float(np.abs(np.exp(1j * phase).sum()) / offs.size)


def beampattern_table(
    cfg: BeamformerConfig,
    angles_deg: Sequence[float],
    freqs_hz: Sequence[float],
) -> list[tuple[float, float, float]]:
    """Gain grid as (angle_deg, freq_hz, gain) rows, angle-major order."""
    rows = []
    for a in angles_deg:
        for f in freqs_hz:
            g = narrowband_gain(cfg, np.deg2rad(a), f)
            rows.append((float(a), float(f), g))
    return rows
