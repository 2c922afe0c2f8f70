"""Signal-level evaluation: spectral log-MSE, SI-SDR, segmental SNR, reports.

Word error rate is out of scope (no ASR stack ships here), so enhancement
quality is scored directly on signals: a log-compressed spectral distance,
scale-invariant SDR, and segmental SNR, each computed for the enhanced
estimate and for the unenhanced speech-look beam as the baseline. The report
keeps a reserved null `wer` field for downstream tooling.
"""

from __future__ import annotations

import json
import os

import numpy as np
from scipy.signal import correlate as _sp_correlate

from .datagen import load_entry_audio, load_manifest
from .dsp import DEFAULT_STFT, SAMPLE_RATE, StftConfig, stft
from .enhance import enhance_pair
from .wpe import WpeConfig

SEG_LEN = 480  # 30 ms at 16 kHz
SEG_SNR_MIN = -10.0
SEG_SNR_MAX = 35.0
SI_SDR_MIN = -60.0
SI_SDR_MAX = 60.0
LOG_MSE_EPS = 1e-12
DEFAULT_MAX_LAG = 800
REPORT_VERSION = 1


def _check_equal_shape(est, ref):
    est = np.asarray(est, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if est.shape != ref.shape:
        raise ValueError(f"shape mismatch: est {est.shape} vs ref {ref.shape}")
    return est, ref


def log_mse_linear(est, ref) -> float:
    """Mean squared log(1+x) distance between two magnitude spectrograms."""
    est, ref = _check_equal_shape(est, ref)
    return float(np.mean((np.log1p(est) - np.log1p(ref)) ** 2))


def spectral_log_mse(est, ref) -> float:
    """log_mse_linear in dB; identical inputs hit the -120 dB floor."""
    return float(10.0 * np.log10(log_mse_linear(est, ref) + LOG_MSE_EPS))


def si_sdr(est, ref) -> float:
    """Scale-invariant SDR in dB, clipped to [-60, 60]."""
    est, ref = _check_equal_shape(est, ref)
    if est.ndim != 1:
        raise ValueError("si_sdr expects 1-D waveforms")
    ref_power = float(np.dot(ref, ref))
    if ref_power <= 0.0:
        raise ValueError("reference has zero power")
    alpha = float(np.dot(est, ref)) / ref_power
    target = alpha * ref
    num = float(np.dot(target, target))
    den = float(np.sum((target - est) ** 2))
    if den <= 0.0:
        return SI_SDR_MAX
    if num <= 0.0:
        return SI_SDR_MIN
    return float(np.clip(10.0 * np.log10(num / den), SI_SDR_MIN, SI_SDR_MAX))


def segmental_snr(est, ref, seg_len: int = SEG_LEN) -> float:
    """Mean per-segment SNR over 30 ms segments, each clamped to [-10, 35] dB.

    Segments where the reference is silent are skipped; a reference with no
    active segment is an error.
    """
    est, ref = _check_equal_shape(est, ref)
    if est.ndim != 1:
        raise ValueError("segmental_snr expects 1-D waveforms")
    if seg_len < 1:
        raise ValueError("seg_len must be positive")
    num_segs = est.size // seg_len
    if num_segs == 0:
        raise ValueError(f"signal shorter than one segment ({seg_len} samples)")
    vals = []
    for s in range(num_segs):
        sl = slice(s * seg_len, (s + 1) * seg_len)
        p_ref = float(np.mean(ref[sl] ** 2))
        if p_ref <= 0.0:
            continue
        p_err = float(np.mean((est[sl] - ref[sl]) ** 2))
        snr = SEG_SNR_MAX if p_err <= 0.0 else 10.0 * np.log10(p_ref / p_err)
        vals.append(float(np.clip(snr, SEG_SNR_MIN, SEG_SNR_MAX)))
    if not vals:
        raise ValueError("reference is silent in every segment")
    return float(np.mean(vals))


def best_lag(delayed, ref, max_lag: int = DEFAULT_MAX_LAG) -> int:
    """Nonnegative integer lag of `delayed` relative to `ref` by peak correlation."""
    delayed = np.asarray(delayed, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if delayed.ndim != 1 or ref.ndim != 1 or delayed.size == 0 or ref.size == 0:
        raise ValueError("best_lag expects non-empty 1-D waveforms")
    corr = _sp_correlate(delayed, ref, mode="full", method="fft")
    zero = ref.size - 1
    hi = min(max_lag, delayed.size - 1)
    return int(np.argmax(corr[zero : zero + hi + 1]))


def _waveform_metrics(sig, ref, cfg: StftConfig) -> dict:
    n = min(sig.size, ref.size)
    s, r = sig[:n], ref[:n]
    linear = log_mse_linear(np.abs(stft(s, cfg)), np.abs(stft(r, cfg)))
    return {
        "si_sdr_db": si_sdr(s, r),
        "seg_snr_db": segmental_snr(s, r),
        "log_mse_db": float(10.0 * np.log10(linear + LOG_MSE_EPS)),
        "log_mse_linear": linear,
    }


def evaluate(dataset_dir, model=None, window_frames: int = 160,
             use_wpe: bool = False, wpe_cfg: WpeConfig | None = None,
             model_path=None, cfg: StftConfig = DEFAULT_STFT,
             max_lag: int = DEFAULT_MAX_LAG, log_features: bool = False) -> dict:
    """Score every manifest utterance, enhanced vs the b0 baseline.

    The dry reference is delayed by one cross-correlation lag per utterance
    (estimated from b0, which carries the propagation delay) and that same
    aligned reference scores both the baseline and the enhanced signal.
    `model=None` evaluates the pass-through baseline twice, which is handy
    for sanity checks. Returns a JSON-serializable report dict.
    """
    manifest = load_manifest(dataset_dir)
    digest = None
    if model_path is not None:
        from .net.serialize import model_digest

        digest = model_digest(model_path)

    utterances = []
    for entry in manifest["entries"]:
        b0, b1, s0 = load_entry_audio(dataset_dir, entry)
        if model is None:
            enhanced = b0.copy()
        else:
            enhanced = enhance_pair(b0, b1, model, window_frames, cfg,
                                    use_wpe=use_wpe, wpe_cfg=wpe_cfg,
                                    log_features=log_features)
        lag = best_lag(b0, s0, max_lag)
        ref = np.concatenate([np.zeros(lag), s0])
        utterances.append({
            "id": entry["id"],
            "lag": lag,
            "snr_db": entry["snr_db"],
            "baseline": _waveform_metrics(b0, ref, cfg),
            "enhanced": _waveform_metrics(enhanced, ref, cfg),
        })

    agg = {}
    for side in ("baseline", "enhanced"):
        for key in ("si_sdr_db", "seg_snr_db", "log_mse_db", "log_mse_linear"):
            agg[f"{side}_{key}"] = float(np.mean([u[side][key] for u in utterances]))
    agg["si_sdr_improvement_db"] = (agg["enhanced_si_sdr_db"]
                                    - agg["baseline_si_sdr_db"])
    agg["log_mse_ratio"] = (agg["enhanced_log_mse_linear"]
                            / max(agg["baseline_log_mse_linear"], LOG_MSE_EPS))

    return {
        "version": REPORT_VERSION,
        "condition": manifest["condition"],
        "split": manifest["split"],
        "count": len(utterances),
        "window_frames": window_frames,
        "fusion": getattr(model, "fusion_mode", None),
        "input_mode": getattr(model, "input_mode", None),
        "wpe": bool(use_wpe),
        "log_features": bool(log_features),
        "model_digest": digest,
        "wer": None,
        "aggregate": agg,
        "utterances": utterances,
    }


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def write_report(report: dict, path) -> None:
    with open(path, "w") as fh:
        fh.write(report_to_json(report))


def render_report_table(report: dict) -> str:
    """Aligned plain-text summary of the aggregate metrics."""
    agg = report["aggregate"]
    head = (f"condition={report['condition']} split={report['split']} "
            f"count={report['count']} window={report['window_frames']} "
            f"fusion={report['fusion']} input={report['input_mode']} "
            f"wpe={report['wpe']}")
    rows = [("metric", "baseline", "enhanced", "delta")]
    for key, label in (("si_sdr_db", "si-sdr [dB]"),
                       ("seg_snr_db", "seg-snr [dB]"),
                       ("log_mse_db", "log-mse [dB]")):
        base = agg[f"baseline_{key}"]
        enh = agg[f"enhanced_{key}"]
        rows.append((label, f"{base:.2f}", f"{enh:.2f}", f"{enh - base:+.2f}"))
    rows.append(("log-mse ratio", "1.000", f"{agg['log_mse_ratio']:.3f}", ""))
    widths = [max(len(r[c]) for r in rows) for c in range(4)]
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append("  ".join(v.rjust(w) for v, w in zip(r, widths)))
    return "\n".join(lines) + "\n"
