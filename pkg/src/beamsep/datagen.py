"""Two-source scene synthesis: mixing, moving-source gain, windowing, datasets.

Builds the four experimental conditions as (b0, b1, s0) triples: NoReverb
(additive mixing only), RirMatched (one shared room response for every
utterance), RirMulticondition (a fresh room per utterance), and
TimeVaryingSnr (a moving target source approximated by a per-sample 1/x^2
gain on the speech component). b0 is the beamformer output steered at the
target speech, b1 the output steered at the noise source, s0 the dry clean
reference.
"""

from __future__ import annotations

import dataclasses
import json
import os

import numpy as np

from . import corpus
from .dsp import (
    DEFAULT_STFT,
    SAMPLE_RATE,
    StftConfig,
    convolve,
    read_wav,
    reflect_pad_frames,
    scale_noise_to_snr,
    stft,
    write_wav,
    write_wav_float,
)
from .room import (
    RirQuadruple,
    ScenePriors,
    mean_scene,
    render_quadruple,
    sample_scene,
)

CONDITIONS = ("NoReverb", "RirMatched", "RirMulticondition", "TimeVaryingSnr")
WINDOW_SIZES = (160, 320, 640)
SNR_RANGE = (0.0, 15.0)
B1_SNR_OFFSET = -3.0
DEFAULT_COUNTS = {"train": 100, "dev": 20, "test": 20}
_SPLIT_STREAM = {"train": 0, "dev": 1, "test": 2}
MANIFEST_VERSION = 1


@dataclasses.dataclass(frozen=True)
class MixSpec:
    snr_b0: float
    condition: str
    seed: int = 0
    snr_offset_b1: float = B1_SNR_OFFSET

    def __post_init__(self):
        if not (SNR_RANGE[0] <= self.snr_b0 <= SNR_RANGE[1]):
            raise ValueError(f"snr_b0 must lie in {SNR_RANGE}, got {self.snr_b0}")
        if self.condition not in CONDITIONS:
            raise ValueError(f"condition must be one of {CONDITIONS}, got {self.condition!r}")
        if self.snr_offset_b1 != B1_SNR_OFFSET:
            raise ValueError(f"snr_offset_b1 is fixed at {B1_SNR_OFFSET} dB")

    @property
    def snr_b1(self) -> float:
        return self.snr_b0 + self.snr_offset_b1


@dataclasses.dataclass(frozen=True)
class Trajectory:
    """Linear back-and-forth walk; position folds at the endpoints."""

    start_dist: float = 1.0
    end_dist: float = 3.0
    speed_kmh: float = 5.0
    ref_dist: float = 2.0

    def __post_init__(self):
        if min(self.start_dist, self.end_dist, self.ref_dist) <= 0.0:
            raise ValueError("all trajectory distances must be positive")
        if self.speed_kmh <= 0.0:
            raise ValueError("speed must be positive")
        lo = min(self.start_dist, self.end_dist)
        hi = max(self.start_dist, self.end_dist)
        if not (lo <= self.ref_dist <= hi):
            raise ValueError("ref_dist must lie between start_dist and end_dist")

    def distances(self, num_samples: int, sample_rate: int = SAMPLE_RATE) -> np.ndarray:
        """Source-to-array distance at each sample index (triangle fold)."""
        if num_samples <= 0:
            raise ValueError("num_samples must be positive")
        step = self.speed_kmh / 3.6 / sample_rate  # meters per sample
        traveled = np.arange(num_samples) * step
        lo = min(self.start_dist, self.end_dist)
        span = abs(self.end_dist - self.start_dist)
        if span == 0.0:
            return np.full(num_samples, self.start_dist)
        sign = 1.0 if self.end_dist >= self.start_dist else -1.0
        wrapped = np.mod(sign * traveled + (self.start_dist - lo), 2.0 * span)
        return lo + span - np.abs(wrapped - span)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def apply_moving_gain(signal, traj: Trajectory,
                      sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Scale sample t by (ref_dist / x(t))^2; unity gain at the reference distance."""
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("signal must be a non-empty 1-D array")
    dist = traj.distances(x.size, sample_rate)
    return x * (traj.ref_dist / dist) ** 2


@dataclasses.dataclass
class UtterancePair:
    b0: np.ndarray
    b1: np.ndarray
    s0_ref: np.ndarray
    meta: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        for name in ("b0", "b1", "s0_ref"):
            v = getattr(self, name)
            if v.ndim != 1 or v.size == 0:
                raise ValueError(f"{name} must be a non-empty 1-D array")
        if self.b0.size != self.b1.size:
            raise ValueError("b0 and b1 must have equal length")


def _noise_segment(clean, noise):
    clean = np.asarray(clean, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if clean.ndim != 1 or noise.ndim != 1:
        raise ValueError("clean and noise must be 1-D")
    if noise.size < clean.size:
        raise ValueError(f"noise ({noise.size}) is shorter than clean ({clean.size})")
    return clean, noise[: clean.size]


def mix_no_reverb(clean, noise, spec: MixSpec) -> UtterancePair:
    """Additive two-beam mixture; the same noise segment lands in both beams."""
    clean, noise = _noise_segment(clean, noise)
    b0 = clean + scale_noise_to_snr(clean, noise, spec.snr_b0)
    b1 = clean + scale_noise_to_snr(clean, noise, spec.snr_b1)
    return UtterancePair(b0=b0, b1=b1, s0_ref=clean.copy(),
                         meta={"snr_b0": spec.snr_b0, "condition": spec.condition})


def _reverberant_components(clean, noise, quad: RirQuadruple):
    # All four convolutions truncated to a common length so b0 and b1 stay
    # sample-aligned regardless of per-look tail differences.
    length = clean.size + min(h.size for h in (quad.h00, quad.h01, quad.h10, quad.h11)) - 1
    rs0 = convolve(clean, quad.h00)[:length]
    rn0 = convolve(noise, quad.h01)[:length]
    rs1 = convolve(clean, quad.h10)[:length]
    rn1 = convolve(noise, quad.h11)[:length]
    return rs0, rn0, rs1, rn1


def mix_reverberant(clean, noise, quad: RirQuadruple, spec: MixSpec) -> UtterancePair:
    """Convolve both sources with the beamformed room responses, then mix by SNR.

    SNRs are set between the convolved speech and convolved noise components,
    so the stated values hold at the beamformer outputs. The reference stays
    the dry clean utterance.
    """
    clean, noise = _noise_segment(clean, noise)
    rs0, rn0, rs1, rn1 = _reverberant_components(clean, noise, quad)
    b0 = rs0 + scale_noise_to_snr(rs0, rn0, spec.snr_b0)
    b1 = rs1 + scale_noise_to_snr(rs1, rn1, spec.snr_b1)
    return UtterancePair(b0=b0, b1=b1, s0_ref=clean.copy(),
                         meta={"snr_b0": spec.snr_b0, "condition": spec.condition})


def mix_time_varying(clean, noise, quad: RirQuadruple, spec: MixSpec,
                     traj: Trajectory) -> UtterancePair:
    """Reverberant mixture with the 1/x^2 walking gain on the speech component.

    The noise scale is computed against the unmodulated speech power, so the
    drawn SNR holds exactly where the walker crosses the reference distance.
    """
    clean, noise = _noise_segment(clean, noise)
    rs0, rn0, rs1, rn1 = _reverberant_components(clean, noise, quad)
    b0 = apply_moving_gain(rs0, traj) + scale_noise_to_snr(rs0, rn0, spec.snr_b0)
    b1 = apply_moving_gain(rs1, traj) + scale_noise_to_snr(rs1, rn1, spec.snr_b1)
    meta = {"snr_b0": spec.snr_b0, "condition": spec.condition,
            "trajectory": traj.to_dict()}
    return UtterancePair(b0=b0, b1=b1, s0_ref=clean.copy(), meta=meta)


@dataclasses.dataclass
class AnalysisWindow:
    spec_b0: np.ndarray
    spec_b1: np.ndarray
    spec_target: np.ndarray

    def __post_init__(self):
        shapes = {self.spec_b0.shape, self.spec_b1.shape, self.spec_target.shape}
        if len(shapes) != 1:
            raise ValueError(f"window spectrograms must share one shape, got {shapes}")
        if self.spec_b0.ndim != 2:
            raise ValueError("window spectrograms must be 2-D (bins, frames)")


def segment_windows(pair: UtterancePair, window_frames: int,
                    cfg: StftConfig = DEFAULT_STFT) -> list:
    """Cut the pair's magnitude spectrograms into fixed-size analysis windows.

    The dry reference is zero-padded to the beam length before analysis so
    all three spectrograms share frame timing; the last window is filled by
    open-end reflection.
    """
    if window_frames not in WINDOW_SIZES:
        raise ValueError(f"window_frames must be one of {WINDOW_SIZES}, got {window_frames}")
    s0 = pair.s0_ref
    if s0.size < pair.b0.size:
        s0 = np.concatenate([s0, np.zeros(pair.b0.size - s0.size)])
    elif s0.size > pair.b0.size:
        raise ValueError("reference is longer than the beamformed signals")
    mags = [np.abs(stft(x, cfg)) for x in (pair.b0, pair.b1, s0)]
    padded = [reflect_pad_frames(m, window_frames) for m in mags]
    total = padded[0].shape[1]
    windows = []
    for start in range(0, total, window_frames):
        sl = slice(start, start + window_frames)
        windows.append(AnalysisWindow(spec_b0=padded[0][:, sl],
                                      spec_b1=padded[1][:, sl],
                                      spec_target=padded[2][:, sl]))
    return windows


def _synth_clean(rng, sample_rate):
    num = int(round(rng.uniform(2.5, 3.5) * sample_rate))
    return corpus.synth_utterance(num, rng, sample_rate)


def _noise_for(rng, num_samples, noise_bank, sample_rate):
    if noise_bank is None:
        return corpus.synth_babble(num_samples, rng, sample_rate=sample_rate)
    if noise_bank.size < num_samples:
        raise ValueError(
            f"noise file ({noise_bank.size} samples) is shorter than the "
            f"utterance ({num_samples} samples)")
    start = int(rng.integers(0, noise_bank.size - num_samples + 1))
    return noise_bank[start : start + num_samples]


def _write_rir_files(out_dir, tag, quad: RirQuadruple) -> dict:
    refs = {}
    for name in ("h00", "h01", "h10", "h11"):
        rel = f"rirs/{tag}_{name}.wav"
        write_wav_float(os.path.join(out_dir, rel), getattr(quad, name))
        refs[name] = rel
    return refs


def build_dataset(out_dir, condition: str, split: str, seed: int,
                  count: int | None = None, corpus_dir=None, noise_path=None,
                  priors: ScenePriors = ScenePriors(),
                  cfg: StftConfig = DEFAULT_STFT,
                  sample_rate: int = SAMPLE_RATE) -> dict:
    """Generate one split of one condition and write WAVs plus a manifest.

    Everything is a pure function of (seed, condition, split, corpus bytes):
    per-utterance generator seeds are drawn from a root stream keyed by the
    dataset seed and the split, then recorded in the manifest. Returns the
    manifest dict; manifest paths are relative to out_dir.
    """
    if condition not in CONDITIONS:
        raise ValueError(f"condition must be one of {CONDITIONS}, got {condition!r}")
    if split not in _SPLIT_STREAM:
        raise ValueError(f"split must be one of {tuple(_SPLIT_STREAM)}, got {split!r}")

    clean_files = None
    if corpus_dir is not None:
        clean_files = corpus.split_corpus(corpus.list_corpus(corpus_dir), split)
    noise_bank = None
    if noise_path is not None:
        if not os.path.isfile(noise_path):
            raise FileNotFoundError(f"noise file not found: {noise_path}")
        noise_bank = read_wav(noise_path)
    if count is None:
        count = len(clean_files) if clean_files is not None else DEFAULT_COUNTS[split]
    if count < 1:
        raise ValueError("count must be >= 1")

    os.makedirs(os.path.join(out_dir, "audio"), exist_ok=True)
    root = np.random.default_rng([seed, _SPLIT_STREAM[split]])
    utt_seeds = [int(s) for s in root.integers(0, 2**31 - 1, size=count)]

    shared_quad = None
    shared_scene = None
    shared_refs = None
    if condition == "RirMatched":
        os.makedirs(os.path.join(out_dir, "rirs"), exist_ok=True)
        shared_scene = mean_scene(priors)
        shared_quad = render_quadruple(shared_scene, sample_rate)
        shared_refs = _write_rir_files(out_dir, "matched", shared_quad)
    elif condition in ("RirMulticondition", "TimeVaryingSnr"):
        os.makedirs(os.path.join(out_dir, "rirs"), exist_ok=True)

    entries = []
    for i, utt_seed in enumerate(utt_seeds):
        uid = f"{split}_{i:04d}"
        rng = np.random.default_rng(utt_seed)
        # Draw order is part of the format: duration, clean, noise, SNR,
        # then scene and trajectory as the condition requires.
        if clean_files is None:
            clean = _synth_clean(rng, sample_rate)
        else:
            clean = read_wav(clean_files[i % len(clean_files)])
        noise = _noise_for(rng, clean.size, noise_bank, sample_rate)
        spec = MixSpec(snr_b0=float(rng.uniform(*SNR_RANGE)),
                       condition=condition, seed=utt_seed)

        scene = None
        rir_refs = None
        traj = None
        if condition == "NoReverb":
            pair = mix_no_reverb(clean, noise, spec)
        elif condition == "RirMatched":
            scene, rir_refs = shared_scene, shared_refs
            pair = mix_reverberant(clean, noise, shared_quad, spec)
        else:
            scene = sample_scene(rng, priors)
            quad = render_quadruple(scene, sample_rate)
            rir_refs = _write_rir_files(out_dir, uid, quad)
            if condition == "TimeVaryingSnr":
                forward = bool(rng.integers(0, 2))
                traj = Trajectory() if forward else Trajectory(start_dist=3.0, end_dist=1.0)
                pair = mix_time_varying(clean, noise, quad, spec, traj)
            else:
                pair = mix_reverberant(clean, noise, quad, spec)

        peak = max(np.max(np.abs(pair.b0)), np.max(np.abs(pair.b1)),
                   np.max(np.abs(pair.s0_ref)))
        gain = 0.9 / peak
        files = {}
        for name, sig in (("b0", pair.b0), ("b1", pair.b1), ("s0", pair.s0_ref)):
            rel = f"audio/{uid}_{name}.wav"
            write_wav(os.path.join(out_dir, rel), gain * sig)
            files[name] = rel

        entries.append({
            "id": uid,
            "seed": utt_seed,
            "snr_db": spec.snr_b0,
            "gain": gain,
            "num_samples": int(pair.b0.size),
            "files": files,
            "scene": scene.to_dict() if scene is not None else None,
            "rirs": rir_refs,
            "trajectory": traj.to_dict() if traj is not None else None,
        })

    manifest = {
        "version": MANIFEST_VERSION,
        "condition": condition,
        "split": split,
        "seed": seed,
        "sample_rate": sample_rate,
        "stft": {"frame_len": cfg.frame_len, "hop": cfg.hop, "fft_size": cfg.fft_size},
        "entries": entries,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def load_manifest(dataset_dir) -> dict:
    path = os.path.join(dataset_dir, "manifest.json")
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no manifest.json under {dataset_dir}")
    with open(path) as fh:
        return json.load(fh)


def load_entry_audio(dataset_dir, entry) -> tuple:
    """Read one manifest entry's (b0, b1, s0) triple as float arrays."""
    out = []
    missing = [rel for rel in entry["files"].values()
               if not os.path.isfile(os.path.join(dataset_dir, rel))]
    if missing:
        raise FileNotFoundError(f"missing audio files: {missing}")
    for name in ("b0", "b1", "s0"):
        out.append(read_wav(os.path.join(dataset_dir, entry["files"][name])))
    return tuple(out)


def load_windows(dataset_dir, window_frames: int,
                 cfg: StftConfig = DEFAULT_STFT) -> tuple:
    """Stack every utterance's analysis windows into (B, bins, W) arrays.

    Returns float32 (b0, b1, target) magnitude batches ready for training.
    """
    manifest = load_manifest(dataset_dir)
    b0s, b1s, tgts = [], [], []
    for entry in manifest["entries"]:
        b0, b1, s0 = load_entry_audio(dataset_dir, entry)
        pair = UtterancePair(b0=b0, b1=b1, s0_ref=s0)
        for win in segment_windows(pair, window_frames, cfg):
            b0s.append(win.spec_b0)
            b1s.append(win.spec_b1)
            tgts.append(win.spec_target)
    return (np.stack(b0s).astype(np.float32),
            np.stack(b1s).astype(np.float32),
            np.stack(tgts).astype(np.float32))
