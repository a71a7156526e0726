"""
windpr command line.

    windpr theory --preset fig1a -o fig1a.csv
    windpr synth --out seq.wav --labels seq_labels.csv --seed 3
    windpr detect seq.wav -o scores.csv
    windpr roc --speech-dir speech/ --out-csv roc.csv --out-json roc.json

Exit codes: 0 success, 2 usage, 3 I/O, 4 numeric/contract.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import corcos, detector, evaluation, synthesis
from .spectral import StftConfig
from .wavio import UnsupportedEncoding, read_wav, write_wav

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4

PRESETS = {
    # d [m], wind DOA [deg], U [m/s], speech DOA [deg]
    "fig1a": (0.004, 90.0, 1.8, 0.0),
    "fig1b": (0.020, 0.0, 2.8, 0.0),
}


class UsageError(Exception):
    pass


def _band(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"band must look like LO:HI, got {text!r}")
    return lo, hi


def _add_geometry(p, wind=True, speech=True):
    p.add_argument("--mic-distance-m", type=float, default=0.004)
    if wind:
        p.add_argument("--wind-doa-deg", type=float, default=0.0)
        p.add_argument("--wind-speed-ms", type=float, default=1.8)
        p.add_argument("--alpha1", type=float, default=corcos.ALPHA1)
        p.add_argument("--alpha2", type=float, default=corcos.ALPHA2)
    if speech:
        p.add_argument("--speech-doa-deg", type=float, default=90.0)
        p.add_argument("--speed-of-sound", type=float, default=corcos.SPEED_OF_SOUND)


def _add_stft(p):
    p.add_argument("--sample-rate", type=int, default=16000)
    p.add_argument("--frame-ms", type=float, default=128.0)
    p.add_argument("--overlap", type=float, default=0.75)
    p.add_argument("--smoothing", type=float, default=0.5)


def _add_detector(p):
    p.add_argument("--band-hz", type=_band, default=(0.0, 500.0))
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--no-clamp", action="store_true",
                   help="average raw per-bin power ratios instead of clipping to [0, 1]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="windpr", description="Dual-microphone wind noise power ratio toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory", help="theoretical wind/speech power ratio curves")
    p.add_argument("--preset", choices=sorted(PRESETS))
    _add_geometry(p)
    p.add_argument("--f-min", type=float, default=0.0)
    p.add_argument("--f-max", type=float, default=8000.0)
    p.add_argument("--f-step", type=float, default=10.0)
    p.add_argument("-o", "--output", type=Path)

    p = sub.add_parser("synth", help="synthesise a labelled sequence or wind noise")
    p.add_argument("--kind", choices=("sequence", "noise"), default="sequence")
    p.add_argument("--duration", type=float, default=10.0, help="noise length [s]")
    p.add_argument("--segment-s", type=float, default=2.0,
                   help="length of each of the five sequence segments [s]")
    p.add_argument("--speech", type=Path, help="mono speech WAV (default: pseudo-speech)")
    p.add_argument("--isnr-db", type=float, default=-5.0)
    _add_geometry(p)
    _add_stft(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("pcm16", "float32"), default="float32")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--labels", type=Path)

    p = sub.add_parser("detect", help="frame-wise wind detection on a stereo WAV")
    p.add_argument("input", type=Path)
    _add_stft(p)
    _add_detector(p)
    p.add_argument("-o", "--output", type=Path)

    p = sub.add_parser("roc", help="ROC comparison of the PR and MSC detectors")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--speech-dir", type=Path, help="directory of mono speech WAVs")
    src.add_argument("--synthetic-speech", action="store_true",
                     help="use the built-in pseudo-speech generator")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--isnr-db", type=float, default=-5.0)
    p.add_argument("--segment-s", type=float, default=2.0)
    p.add_argument("--mic-distance-m", type=float, default=0.004)
    p.add_argument("--speech-doa-deg", type=float, default=90.0)
    p.add_argument("--wind-doa-deg-range", type=_band, default=(0.0, 180.0))
    p.add_argument("--wind-speed-range", type=_band, default=(1.0, 3.0))
    p.add_argument("--thresholds", type=int, default=20, choices=(20, 21),
                   help="20: theta in 0..0.95, 21: theta in 0..1")
    _add_stft(p)
    _add_detector(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-csv", type=Path, required=True)
    p.add_argument("--out-json", type=Path, required=True)
    return parser


_OUTPUT_KEYS = {"output", "out", "labels", "out_csv", "out_json"}


def _echo(args) -> str:
    # output locations excluded so reruns into other files stay byte-identical
    cfg = {k: (str(v) if isinstance(v, Path) else v)
           for k, v in sorted(vars(args).items()) if k not in _OUTPUT_KEYS}
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"))


def _emit(text: str, path: Path | None):
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def _stft_config(args) -> StftConfig:
    return StftConfig.from_ms(args.sample_rate, args.frame_ms, args.overlap)


def _corcos(args) -> corcos.CorcosParams:
    return corcos.CorcosParams(args.mic_distance_m, np.deg2rad(args.wind_doa_deg),
                               args.wind_speed_ms, args.alpha1, args.alpha2)


def _speech_geom(args) -> corcos.SpeechGeometry:
    return corcos.SpeechGeometry(args.mic_distance_m, np.deg2rad(args.speech_doa_deg),
                                 args.speed_of_sound)


def _detector_config(args) -> detector.DetectorConfig:
    return detector.DetectorConfig(tuple(args.band_hz), args.threshold, not args.no_clamp)


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------


def cmd_theory(args) -> int:
    if args.preset:
        d, wdoa, u, sdoa = PRESETS[args.preset]
        args.mic_distance_m, args.wind_doa_deg = d, wdoa
        args.wind_speed_ms, args.speech_doa_deg = u, sdoa
    try:
        params = _corcos(args)
        geom = _speech_geom(args)
    except ValueError as exc:
        raise UsageError(str(exc))
    if args.f_step <= 0 or args.f_min < 0 or args.f_max < args.f_min:
        raise UsageError("frequency grid must satisfy 0 <= f-min <= f-max, f-step > 0")
    n = int(np.floor((args.f_max - args.f_min) / args.f_step + 1e-9)) + 1
    freqs = args.f_min + args.f_step * np.arange(n)
    if freqs.size == 0:
        raise UsageError("empty frequency grid")
    omega = 2 * np.pi * freqs
    pw = np.atleast_1d(corcos.pr_wind(params, omega))
    ps = np.atleast_1d(corcos.pr_speech(geom, omega))

    buf = io.StringIO()
    buf.write(f"# {_echo(args)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["frequency_hz", "pr_wind", "pr_speech"])
    for f, a, b in zip(freqs, pw, ps):
        w.writerow([_fmt(f), _fmt(a), _fmt(b)])
    _emit(buf.getvalue(), args.output)
    return EXIT_OK


def _load_mono(path: Path) -> tuple[int, np.ndarray]:
    rate, x = read_wav(path)
    if x.ndim == 2:
        x = x.mean(axis=1)
    return rate, x


def cmd_synth(args) -> int:
    try:
        stft = _stft_config(args)
        params = _corcos(args)
        geom = _speech_geom(args)
        if args.kind == "noise":
            spec = synthesis.NoiseSpec(params, args.duration, seed=args.seed)
        else:
            if not args.segment_s > 0:
                raise ValueError("segment length must be positive")
            plan = tuple((k, args.segment_s) for k, _ in synthesis.DEFAULT_PLAN)
            spec = synthesis.SequenceSpec(plan, args.isnr_db, geom, params, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc))

    labels = None
    if args.kind == "noise":
        x = synthesis.gen_coherent_noise(spec, stft) * 0.1
    else:
        n = int(round(spec.speech_seconds() * stft.sample_rate))
        if args.speech is not None:
            rate, mono = _load_mono(args.speech)
            if rate != stft.sample_rate:
                raise UsageError(f"speech rate {rate} Hz differs from --sample-rate")
        else:
            mono = synthesis.pseudo_speech(n / stft.sample_rate, stft.sample_rate,
                                           np.random.default_rng(args.seed))
        try:
            x, labels = synthesis.build_sequence(spec, mono, stft)
        except ValueError as exc:
            raise UsageError(str(exc))

    gain = write_wav(args.out, stft.sample_rate, x, args.format)
    if labels is not None and args.labels is not None:
        buf = io.StringIO()
        buf.write(f"# {_echo(args)} output_gain={gain!r}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["frame_index", "label"])
        w.writerows(enumerate(labels.tolist()))
        args.labels.write_text(buf.getvalue())
    return EXIT_OK


def cmd_detect(args) -> int:
    try:
        stft = _stft_config(args)
        cfg = _detector_config(args)
        cfg.bins(stft)
        if not 0 <= args.smoothing < 1:
            raise ValueError("smoothing must be in [0, 1)")
    except ValueError as exc:
        raise UsageError(str(exc))
    rate, x = read_wav(args.input)
    if x.ndim != 2 or x.shape[1] < 2:
        raise UsageError(f"{args.input}: expected a stereo file")
    if x.shape[1] != 2:
        raise UsageError(f"{args.input}: expected 2 channels, got {x.shape[1]}")
    if rate != stft.sample_rate:
        stft = StftConfig.from_ms(rate, args.frame_ms, args.overlap)
        try:
            cfg.bins(stft)
        except ValueError as exc:
            raise UsageError(str(exc))
    scores = detector.detect(x.T, cfg, stft, args.smoothing)
    _emit(detector.scores_to_csv(scores, stft, header=_echo(args)), args.output)
    return EXIT_OK


def cmd_roc(args) -> int:
    try:
        stft = _stft_config(args)
        cfg = _detector_config(args)
        cfg.bins(stft)
        thresholds = tuple(np.round(np.arange(args.thresholds) * 0.05, 2))
        lo, hi = args.wind_doa_deg_range
        plan = tuple((k, args.segment_s) for k, _ in synthesis.DEFAULT_PLAN)
        protocol = evaluation.Protocol(
            n_trials=args.trials, isnr_db=args.isnr_db, mic_distance=args.mic_distance_m,
            speech_doa=float(np.deg2rad(args.speech_doa_deg)),
            wind_doa_range=(float(np.deg2rad(lo)), float(np.deg2rad(hi))),
            wind_speed_range=tuple(args.wind_speed_range), plan=plan, beta=args.smoothing,
            thresholds=thresholds, detector=cfg, stft=stft, seed=args.seed)
        synthesis.SequenceSpec(plan)
        if not 0 <= args.smoothing < 1:
            raise ValueError("smoothing must be in [0, 1)")
    except ValueError as exc:
        raise UsageError(str(exc))

    if args.synthetic_speech:
        source = evaluation.synthetic_speech_source(stft.sample_rate)
    else:
        if not args.speech_dir.is_dir():
            raise UsageError(f"{args.speech_dir} is not a directory")
        files = sorted(args.speech_dir.glob("*.wav"))
        if not files:
            raise UsageError(f"no WAV files in {args.speech_dir}")
        pool = []
        for f in files:
            rate, mono = _load_mono(f)
            if rate != stft.sample_rate:
                raise UsageError(f"{f}: rate {rate} Hz differs from --sample-rate")
            pool.append(mono)
        source = evaluation.pool_speech_source(pool)

    result = evaluation.run_trials(protocol, source)
    echo = _echo(args)

    buf = io.StringIO()
    buf.write(f"# {echo}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theta", "fpr_pr", "tpr_pr", "fpr_msc", "tpr_msc"])
    for row in evaluation.roc_table(result):
        w.writerow([_fmt(v) for v in row])
    args.out_csv.write_text(buf.getvalue())
    args.out_json.write_text(
        evaluation.summary_json(result, {"cli": json.loads(echo), "protocol": protocol.echo()}))
    return EXIT_OK


COMMANDS = {"theory": cmd_theory, "synth": cmd_synth, "detect": cmd_detect, "roc": cmd_roc}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"windpr {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnsupportedEncoding as exc:
        print(f"windpr {args.command}: unsupported encoding: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"windpr {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ArithmeticError, AssertionError) as exc:
        print(f"windpr {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
