"""Command line driver for the beamformed-separation toolkit.

Subcommands:
  datagen      synthesize a beamformed two-source dataset
  train        fit the separation network on a generated dataset
  enhance      run a trained model over one beamformed utterance pair
  eval         score a model (or the pass-through baseline) on a dataset
  beampattern  tabulate the array's narrowband gain over angle and frequency
  rir          render one room impulse response quadruple

Heavy imports happen inside the command handlers so --threads can cap the
BLAS pool before numpy loads. Usage errors exit 2, runtime failures print a
single `error:` line and exit 1.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

_CONDITIONS = ("NoReverb", "RirMatched", "RirMulticondition", "TimeVaryingSnr")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _load_cfg(args) -> dict:
    from . import config as cfgmod

    overrides = cfgmod.parse_overrides(args.overrides)
    return cfgmod.load_config(args.config, overrides)


def _lock(cfg: dict, out_dir) -> None:
    from . import config as cfgmod

    cfgmod.write_config_lock(cfg, out_dir)


def _dump_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_datagen(args) -> int:
    from . import config as cfgmod
    from .datagen import build_dataset

    cfg = _load_cfg(args)
    splits = ("train", "dev", "test") if args.split == "all" else (args.split,)
    os.makedirs(args.out, exist_ok=True)
    _lock(cfg, args.out)
    for split in splits:
        count = args.count if args.count is not None else cfg[f"dataset.count_{split}"]
        split_dir = os.path.join(args.out, split)
        manifest = build_dataset(split_dir, args.condition, split, args.seed,
                                 count=count, corpus_dir=args.corpus,
                                 noise_path=args.noise,
                                 priors=cfgmod.scene_priors(cfg),
                                 cfg=cfgmod.stft_config(cfg),
                                 sample_rate=cfg["sample_rate"])
        print(f"wrote {len(manifest['entries'])} {split} utterances to {split_dir}")
    return 0


def _cmd_train(args) -> int:
    import shutil

    import numpy as np

    from . import config as cfgmod
    from .datagen import load_windows
    from .net.model import TcnModel
    from .net.serialize import save_model
    from .net.train import inference_loss, train

    cfg = _load_cfg(args)
    stft_cfg = cfgmod.stft_config(cfg)
    window_frames = cfg["train.window_frames"]
    train_data = load_windows(os.path.join(args.data, "train"), window_frames, stft_cfg)
    dev_data = load_windows(os.path.join(args.data, "dev"), window_frames, stft_cfg)
    if cfg["train.log_features"]:
        train_data = tuple(np.log1p(a) for a in train_data)
        dev_data = tuple(np.log1p(a) for a in dev_data)
    os.makedirs(args.out, exist_ok=True)
    _lock(cfg, args.out)

    runs = []
    for seed in range(args.seed, args.seed + args.repeats):
        model = TcnModel(**cfgmod.model_kwargs(cfg, seed))
        history = train(model, train_data, dev_data, cfgmod.train_config(cfg, seed))
        if history:
            dev_loss = min(h["dev_loss"] for h in history)
        else:
            dev_loss = inference_loss(model, dev_data)
        save_model(model, os.path.join(args.out, f"model_seed{seed}.bin"))
        _dump_json(history, os.path.join(args.out, f"history_seed{seed}.json"))
        runs.append({"seed": seed, "dev_loss": float(dev_loss)})
        print(f"seed {seed}: dev loss {dev_loss:.6f} after {len(history)} epochs")

    best = min(runs, key=lambda r: r["dev_loss"])
    shutil.copyfile(os.path.join(args.out, f"model_seed{best['seed']}.bin"),
                    os.path.join(args.out, "model.bin"))
    _dump_json({"runs": runs, "best_seed": best["seed"],
                "mean_dev_loss": float(np.mean([r["dev_loss"] for r in runs])),
                "window_frames": window_frames,
                "log_features": cfg["train.log_features"]},
               os.path.join(args.out, "training_summary.json"))
    print(f"best seed {best['seed']} -> {os.path.join(args.out, 'model.bin')}")
    return 0


def _cmd_enhance(args) -> int:
    from . import config as cfgmod
    from .dsp import read_wav, write_wav
    from .enhance import enhance_pair
    from .net.serialize import load_model

    cfg = _load_cfg(args)
    model = load_model(args.model)
    b0 = read_wav(args.b0)
    b1 = read_wav(args.b1)
    enhanced = enhance_pair(b0, b1, model, cfg["train.window_frames"],
                            cfg=cfgmod.stft_config(cfg), use_wpe=args.wpe,
                            wpe_cfg=cfgmod.wpe_config(cfg),
                            log_features=cfg["train.log_features"])
    os.makedirs(args.out, exist_ok=True)
    _lock(cfg, args.out)
    out_path = os.path.join(args.out, "enhanced.wav")
    write_wav(out_path, enhanced)
    print(f"wrote {enhanced.size} samples to {out_path}")
    return 0


def _cmd_eval(args) -> int:
    from . import config as cfgmod
    from .metrics import evaluate, render_report_table, write_report
    from .net.serialize import load_model

    cfg = _load_cfg(args)
    model = None
    if args.model is not None:
        model = load_model(args.model)
    report = evaluate(args.data, model=model,
                      window_frames=cfg["train.window_frames"],
                      use_wpe=args.wpe, wpe_cfg=cfgmod.wpe_config(cfg),
                      model_path=args.model, cfg=cfgmod.stft_config(cfg),
                      max_lag=cfg["eval.max_lag"],
                      log_features=cfg["train.log_features"])
    os.makedirs(args.out, exist_ok=True)
    _lock(cfg, args.out)
    write_report(report, os.path.join(args.out, "report.json"))
    table = render_report_table(report)
    with open(os.path.join(args.out, "report.txt"), "w") as fh:
        fh.write(table)
    print(table, end="")
    return 0


def _cmd_beampattern(args) -> int:
    import numpy as np

    from .beamforming import BeamformerConfig, beampattern_table

    cfg = _load_cfg(args)
    bf = BeamformerConfig(mic_offsets=tuple(cfg["beam.mic_offsets"]),
                          look_aoi=float(np.deg2rad(args.look)),
                          sample_rate=cfg["sample_rate"])
    angles = np.arange(-90.0, 90.0 + 1e-9, args.angle_step)
    freqs = [float(f) for f in args.freqs.split(",")]
    rows = beampattern_table(bf, angles, freqs)
    os.makedirs(args.out, exist_ok=True)
    _lock(cfg, args.out)
    path = os.path.join(args.out, "beampattern.csv")
    with open(path, "w") as fh:
        fh.write("angle_deg,freq_hz,gain\n")
        for angle, freq, gain in rows:
            fh.write(f"{angle:.2f},{freq:.1f},{gain:.8f}\n")
    print(f"wrote {len(rows)} rows to {path}")
    return 0


def _cmd_rir(args) -> int:
    import numpy as np

    from . import config as cfgmod
    from .dsp import write_wav_float
    from .room import mean_scene, render_quadruple, sample_scene

    cfg = _load_cfg(args)
    priors = cfgmod.scene_priors(cfg)
    if args.mean:
        scene = mean_scene(priors)
    else:
        scene = sample_scene(np.random.default_rng(args.seed), priors)
    quad = render_quadruple(scene, sample_rate=cfg["sample_rate"])
    os.makedirs(args.out, exist_ok=True)
    _lock(cfg, args.out)
    for name in ("h00", "h01", "h10", "h11"):
        write_wav_float(os.path.join(args.out, f"{name}.wav"),
                        getattr(quad, name), cfg["sample_rate"])
    _dump_json(scene.to_dict(), os.path.join(args.out, "scene.json"))
    print(f"wrote RIR quadruple and scene.json to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, metavar="FILE",
                        help="JSON config merged over the built-in defaults")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE",
                        help="override one config key (value parsed as JSON); repeatable")
    common.add_argument("--threads", type=_positive_int, default=None,
                        help="cap BLAS/OpenMP threads (set before numpy loads)")

    parser = argparse.ArgumentParser(
        prog="beamsep",
        description="Synthesize, train, and evaluate two-beam speech separation.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("datagen", parents=[common],
                       help="synthesize a beamformed two-source dataset")
    p.add_argument("--out", required=True, help="dataset root directory")
    p.add_argument("--condition", required=True, choices=_CONDITIONS)
    p.add_argument("--split", default="all",
                   choices=("train", "dev", "test", "all"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=_positive_int, default=None,
                   help="utterances per split (default: dataset.count_* config)")
    p.add_argument("--corpus", default=None,
                   help="directory of 16 kHz mono WAVs (default: synthetic speech)")
    p.add_argument("--noise", default=None,
                   help="noise WAV (default: synthetic babble)")
    p.set_defaults(func=_cmd_datagen)

    p = sub.add_parser("train", parents=[common],
                       help="fit the separation network on a generated dataset")
    p.add_argument("--data", required=True,
                   help="dataset root holding train/ and dev/ splits")
    p.add_argument("--out", required=True, help="output directory for models")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=_positive_int, default=1,
                   help="train this many seeds (seed..seed+N-1), keep the best")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("enhance", parents=[common],
                       help="run a trained model over one beamformed pair")
    p.add_argument("--model", required=True, help="trained model file")
    p.add_argument("--b0", required=True, help="speech-look beam WAV")
    p.add_argument("--b1", required=True, help="noise-look beam WAV")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--wpe", action="store_true",
                   help="dereverberate both beams before the network")
    p.set_defaults(func=_cmd_enhance)

    p = sub.add_parser("eval", parents=[common],
                       help="score a model or the pass-through baseline")
    p.add_argument("--data", required=True, help="one dataset split directory")
    p.add_argument("--out", required=True, help="output directory for reports")
    p.add_argument("--model", default=None,
                   help="trained model file (omit for the baseline)")
    p.add_argument("--wpe", action="store_true",
                   help="dereverberate both beams before the network")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("beampattern", parents=[common],
                       help="tabulate narrowband array gain to CSV")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--look", type=float, default=0.0,
                   help="look angle in degrees from broadside")
    p.add_argument("--angle-step", type=float, default=5.0,
                   help="source angle grid step in degrees")
    p.add_argument("--freqs", default="500,1000,2000,4000",
                   help="comma-separated frequencies in Hz")
    p.set_defaults(func=_cmd_beampattern)

    p = sub.add_parser("rir", parents=[common],
                       help="render one room impulse response quadruple")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mean", action="store_true",
                   help="render the prior-mean scene instead of sampling one")
    p.set_defaults(func=_cmd_rir)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
