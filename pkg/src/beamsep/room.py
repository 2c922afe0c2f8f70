"""Shoebox room acoustics: image-source impulse responses and scene sampling.

Coordinates are (x, y, z) with the room spanning [0, width] x [0, depth] x
[0, height]. The mic array is a horizontal line; angles of incidence are
measured from its broadside normal in the horizontal plane, matching the
beamforming convention.
"""

from __future__ import annotations

import dataclasses
from typing import Optional

import numpy as np

from .beamforming import KINECT_OFFSETS, SPEED_OF_SOUND, BeamformerConfig, steering_delays
from .dsp import SAMPLE_RATE


@dataclasses.dataclass(frozen=True)
class RoomSpec:
    height: float = 2.5
    width: float = 6.0
    depth: float = 6.0
    absorption: float = 0.35
    max_order: int = 10

    def __post_init__(self):
        if min(self.height, self.width, self.depth) <= 0:
            raise ValueError("room dimensions must be positive")
        if not 0.0 < self.absorption <= 1.0:
            raise ValueError(f"absorption {self.absorption} outside (0, 1]")
        if self.max_order < 0:
            raise ValueError("max_order must be >= 0")

    @property
    def dims(self) -> np.ndarray:
        # axis order (x, y, z) = (width, depth, height)
        return np.array([self.width, self.depth, self.height])


@dataclasses.dataclass(frozen=True)
class ArrayGeometry:
    center: tuple
    orientation: float = 0.0  # azimuth of the mic axis, radians
    mic_offsets: tuple = KINECT_OFFSETS

    def axis(self) -> np.ndarray:
        return np.array([np.cos(self.orientation), np.sin(self.orientation), 0.0])

    def normal(self) -> np.ndarray:
        # broadside direction (horizontal, 90 degrees left of the axis)
        return np.array([-np.sin(self.orientation), np.cos(self.orientation), 0.0])

    def mic_positions(self) -> np.ndarray:
        c = np.asarray(self.center, dtype=np.float64)
        offs = np.asarray(self.mic_offsets, dtype=np.float64)
        return c[None, :] + offs[:, None] * self.axis()[None, :]


@dataclasses.dataclass(frozen=True)
class SceneGeometry:
    room: RoomSpec
    array: ArrayGeometry
    src_speech: tuple
    src_noise: tuple
    aoi_speech: float  # radians from broadside
    aoi_noise: float
    dist_speech: float
    dist_noise: float

    def to_dict(self) -> dict:
        return {
            "room": {
                "height": self.room.height,
                "width": self.room.width,
                "depth": self.room.depth,
                "absorption": self.room.absorption,
                "max_order": self.room.max_order,
            },
            "array": {
                "center": list(self.array.center),
                "orientation": self.array.orientation,
                "mic_offsets": list(self.array.mic_offsets),
            },
            "src_speech": list(self.src_speech),
            "src_noise": list(self.src_noise),
            "aoi_speech_deg": float(np.rad2deg(self.aoi_speech)),
            "aoi_noise_deg": float(np.rad2deg(self.aoi_noise)),
            "dist_speech": self.dist_speech,
            "dist_noise": self.dist_noise,
        }


@dataclasses.dataclass(frozen=True)
class ScenePriors:
    nominal_height: float = 2.5
    nominal_width: float = 6.0
    nominal_depth: float = 6.0
    dim_jitter: float = 0.2  # uniform +/- fraction on every dimension
    speech_aoi_deg: float = 45.0
    noise_aoi_deg: float = -45.0
    aoi_jitter_deg: float = 30.0
    elev_jitter_deg: float = 10.0
    dist_min: float = 1.6
    dist_max: float = 2.4
    clearance: float = 1.0
    absorption: float = 0.35
    max_order: int = 10
    mic_offsets: tuple = KINECT_OFFSETS
    max_rejects: int = 10000


def _axis_images(length: float, coord: float, max_order: int):
    """1-D image positions along one axis and their reflection counts.

    Even-parity images sit at 2*n*length + coord with |2n| reflections,
    odd-parity images at 2*n*length - coord with |2n - 1| reflections.
    """
    n = np.arange(-(max_order // 2 + 1), max_order // 2 + 2)
    even_pos = 2.0 * n * length + coord
    even_cnt = np.abs(2 * n)
    odd_pos = 2.0 * n * length - coord
    odd_cnt = np.abs(2 * n - 1)
    pos = np.concatenate([even_pos, odd_pos])
    cnt = np.concatenate([even_cnt, odd_cnt])
    keep = cnt <= max_order
    return pos[keep], cnt[keep]


def enumerate_images(room: RoomSpec, src) -> tuple[np.ndarray, np.ndarray]:
    """All image-source positions up to room.max_order total reflections.

    Returns (positions (K, 3), reflection_counts (K,)). The direct source
    (zero reflections) is always included.
    """
    src = np.asarray(src, dtype=np.float64)
    dims = room.dims
    px, cx = _axis_images(dims[0], src[0], room.max_order)
    py, cy = _axis_images(dims[1], src[1], room.max_order)
    pz, cz = _axis_images(dims[2], src[2], room.max_order)
    cnt = cx[:, None, None] + cy[None, :, None] + cz[None, None, :]
    keep = cnt <= room.max_order
    gx, gy, gz = np.meshgrid(px, py, pz, indexing="ij")
    positions = np.stack([gx[keep], gy[keep], gz[keep]], axis=1)
    return positions, cnt[keep]


def image_source_rir(
    room: RoomSpec,
    src,
    mic,
    sample_rate: int = SAMPLE_RATE,
    speed_of_sound: float = SPEED_OF_SOUND,
) -> np.ndarray:
    """Image-source room impulse response from a point source to one mic.

    Each image at distance d with r total reflections contributes an impulse
    of amplitude (1 - absorption)^(r/2) / (4*pi*d) at tap round(d/c * fs).
    Images landing on the same tap accumulate.
    """
    src = np.asarray(src, dtype=np.float64)
    mic = np.asarray(mic, dtype=np.float64)
    dims = room.dims
    for p, name in [(src, "source"), (mic, "mic")]:
        if p.shape != (3,):
            raise ValueError(f"{name} must be a 3-D point, got shape {p.shape}")
        if np.any(p <= 0.0) or np.any(p >= dims):
            raise ValueError(f"{name} at {p.tolist()} is not strictly inside the room")
    if np.array_equal(src, mic):
        raise ValueError("source and mic coincide")

    positions, counts = enumerate_images(room, src)
    dists = np.linalg.norm(positions - mic[None, :], axis=1)
    amps = (1.0 - room.absorption) ** (counts / 2.0) / (4.0 * np.pi * dists)
    delays = np.round(dists / speed_of_sound * sample_rate).astype(np.int64)
    return np.bincount(delays, weights=amps, minlength=int(delays.max()) + 1)


@dataclasses.dataclass(frozen=True)
class RirQuadruple:
    """Beamformed impulse responses h_pq: look direction p, source q.

    Index 0 is the speech side, 1 the noise side: h00 steers at the speech
    source and filters speech, h01 steers at speech but filters noise, etc.
    """

    h00: np.ndarray
    h01: np.ndarray
    h10: np.ndarray
    h11: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        for name in ("h00", "h01", "h10", "h11"):
            h = getattr(self, name)
            if h.ndim != 1 or h.size == 0 or not np.any(h):
                raise ValueError(f"{name} must be 1-D with at least one nonzero tap")


def shift_sum(rirs: np.ndarray, delay_samples) -> np.ndarray:
    """Sum per-mic responses after integer delays, extending the tail as needed."""
    rirs = np.asarray(rirs, dtype=np.float64)
    d = np.asarray(delay_samples, dtype=np.int64)
    length = rirs.shape[1]
    out = np.zeros(length + max(0, int(d.max())))
    for h, k in zip(rirs, d):
        if k >= 0:
            out[k : k + length] += h
        else:
            out[: length + k] += h[-k:]
    return out


def render_quadruple(
    scene: SceneGeometry,
    sample_rate: int = SAMPLE_RATE,
    speed_of_sound: float = SPEED_OF_SOUND,
) -> RirQuadruple:
    """Render the four beamformed RIRs for a two-source scene.

    For each source, per-mic image-source responses are steered by the
    delay-and-sum delays of each look direction (computed from the true
    angles of incidence) and summed.
    """
    mics = scene.array.mic_positions()
    per_source = []
    for src in (scene.src_speech, scene.src_noise):
        hs = [
            image_source_rir(scene.room, src, mic, sample_rate, speed_of_sound)
            for mic in mics
        ]
        length = max(h.size for h in hs)
        stacked = np.zeros((len(hs), length))
        for m, h in enumerate(hs):
            stacked[m, : h.size] = h
        per_source.append(stacked)

    looks = []
    for aoi in (scene.aoi_speech, scene.aoi_noise):
        cfg = BeamformerConfig(
            mic_offsets=tuple(scene.array.mic_offsets),
            look_aoi=aoi,
            speed_of_sound=speed_of_sound,
            sample_rate=sample_rate,
        )
        looks.append(steering_delays(cfg).samples)

    h = [[shift_sum(per_source[q], looks[p]) for q in (0, 1)] for p in (0, 1)]
    return RirQuadruple(
        h00=h[0][0], h01=h[0][1], h10=h[1][0], h11=h[1][1], sample_rate=sample_rate
    )


def _build_scene(
    dims: np.ndarray,
    center: np.ndarray,
    orientation: float,
    aois_deg: tuple,
    elevs_deg: tuple,
    dists: tuple,
    priors: ScenePriors,
) -> Optional[SceneGeometry]:
    """Assemble and clearance-check one candidate scene; None if rejected."""
    room = RoomSpec(
        height=float(dims[2]),
        width=float(dims[0]),
        depth=float(dims[1]),
        absorption=priors.absorption,
        max_order=priors.max_order,
    )
    array = ArrayGeometry(
        center=tuple(center), orientation=orientation, mic_offsets=priors.mic_offsets
    )
    mics = array.mic_positions()
    if np.any(mics < priors.clearance) or np.any(mics > dims[None, :] - priors.clearance):
        return None

    axis, normal = array.axis(), array.normal()
    srcs = []
    for aoi_deg, elev_deg, dist in zip(aois_deg, elevs_deg, dists):
        aoi = np.deg2rad(aoi_deg)
        elev = np.deg2rad(elev_deg)
        direction = np.cos(elev) * (
            np.cos(aoi) * normal + np.sin(aoi) * axis
        ) + np.sin(elev) * np.array([0.0, 0.0, 1.0])
        pos = center + dist * direction
        if np.any(pos < priors.clearance) or np.any(pos > dims - priors.clearance):
            return None
        srcs.append(pos)

    return SceneGeometry(
        room=room,
        array=array,
        src_speech=tuple(srcs[0]),
        src_noise=tuple(srcs[1]),
        aoi_speech=np.deg2rad(aois_deg[0]),
        aoi_noise=np.deg2rad(aois_deg[1]),
        dist_speech=float(dists[0]),
        dist_noise=float(dists[1]),
    )


def mean_scene(priors: ScenePriors = ScenePriors()) -> SceneGeometry:
    """The zero-jitter scene: every sampled quantity at its distribution mean."""
    dims = np.array([priors.nominal_width, priors.nominal_depth, priors.nominal_height])
    mean_dist = 0.5 * (priors.dist_min + priors.dist_max)
    scene = _build_scene(
        dims,
        dims / 2.0,
        0.0,
        (priors.speech_aoi_deg, priors.noise_aoi_deg),
        (0.0, 0.0),
        (mean_dist, mean_dist),
        priors,
    )
    if scene is None:
        raise ValueError("mean scene violates clearance constraints for these priors")
    return scene


def sample_scene(rng, priors: ScenePriors = ScenePriors()) -> SceneGeometry:
    """Draw one random scene by rejection sampling.

    Room dimensions get independent uniform +/- dim_jitter scaling; the array
    center, orientation, source angles (nominal +/- jitter), elevations, and
    distances are uniform. Candidates violating the wall clearance are
    rejected; more than priors.max_rejects rejections raise RuntimeError.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    nominal = np.array([priors.nominal_width, priors.nominal_depth, priors.nominal_height])
    for _ in range(priors.max_rejects + 1):
        dims = nominal * (1.0 + rng.uniform(-priors.dim_jitter, priors.dim_jitter, 3))
        lo, hi = priors.clearance, dims - priors.clearance
        if np.any(hi < lo):
            continue
        center = rng.uniform(lo, hi)
        orientation = rng.uniform(0.0, 2.0 * np.pi)
        aois = (
            priors.speech_aoi_deg + rng.uniform(-priors.aoi_jitter_deg, priors.aoi_jitter_deg),
            priors.noise_aoi_deg + rng.uniform(-priors.aoi_jitter_deg, priors.aoi_jitter_deg),
        )
        elevs = tuple(rng.uniform(-priors.elev_jitter_deg, priors.elev_jitter_deg, 2))
        dists = tuple(rng.uniform(priors.dist_min, priors.dist_max, 2))
        scene = _build_scene(dims, center, orientation, aois, elevs, dists, priors)
        if scene is not None:
            return scene
    raise RuntimeError(
        f"scene sampling exceeded {priors.max_rejects} rejections; "
        "constraints are too tight for the room"
    )
