"""Command-line entry point.

Settings are resolved as built-in defaults, then ``--config`` (a flat JSON
object), then explicit flags. Exit codes: 0 success, 2 usage or
configuration error, 3 data or I/O error, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import pipeline
from .errors import ConfigurationError, DataError, NumericError, SsvepError, StorageError
from .evaluation import itr
from .io import build_manifest, load_recordings, read_dataset, write_dataset, write_json, write_recording, write_table
from .regress import MODEL_FAMILIES

log = logging.getLogger("ssvepamp")


def _out_dir(path: str | None, create: bool) -> Path:
    if not path:
        raise ConfigurationError("--out is required")
    out = Path(path)
    if not out.exists():
        if not create:
            raise StorageError(f"{out}: output directory does not exist (pass --create to make it)")
        out.mkdir(parents=True)
    if not out.is_dir():
        raise StorageError(f"{out}: not a directory")
    return out


def _config(args) -> pipeline.RunConfig:
    overrides = {"seed": args.seed}
    if getattr(args, "grid", None):
        overrides["grid"] = args.grid
    return pipeline.load_config(args.config, overrides)


def _manifest(out: Path, command: str, cfg: pipeline.RunConfig, outputs) -> None:
    write_json(out / "manifest.json", build_manifest(command, cfg.to_dict(), cfg.seed, outputs))


def _load_preprocessed(args, cfg):
    if not args.data:
        raise ConfigurationError("--data is required")
    raw = load_recordings(args.data)
    fs = {x.fs for x in raw.values()}
    if fs != {cfg.fs}:
        raise ConfigurationError(f"recordings sampled at {sorted(fs)} Hz but config fs is {cfg.fs}")
    pipeline.require_complete(raw, cfg)
    raw = {k: v for k, v in raw.items() if k[1] in cfg.conditions}
    return pipeline.preprocess_all(raw, cfg)


# --------------------------------------------------------------------------- commands


def cmd_synth(args, cfg) -> int:
    out = _out_dir(args.out, args.create)
    cohort = pipeline.synthesize(cfg, noise_free=args.noise_free)
    names = []
    for (s, c), (x, scfg) in sorted(cohort.items()):
        p = write_recording(out, s, c, x, {"seed": cfg.seed, "config": scfg.to_dict()})
        names += [p.name, p.with_suffix(".json").name]
    _manifest(out, "synth", cfg, names)
    print(f"wrote {len(cohort)} recordings to {out}")
    return 0


def cmd_recognize(args, cfg) -> int:
    out = _out_dir(args.out, args.create)
    study = pipeline.run_recognition(_load_preprocessed(args, cfg), cfg)
    acc = study.accuracy[args.method]
    rows = [{"subject": s, **{f"cond_{c}": float(acc[i, j]) for j, c in enumerate(study.conditions)}}
            for i, s in enumerate(study.subjects)]
    name = f"accuracy_{args.method}.csv"
    write_table(out / name, rows)
    for j, c in enumerate(study.conditions):
        print(f"condition {c}: {args.method} mean accuracy {acc[:, j].mean():.4f}")
    _manifest(out, f"recognize --method {args.method}", cfg, [name])
    return 0


def cmd_window_study(args, cfg) -> int:
    out = _out_dir(args.out, args.create)
    study = pipeline.run_window_study(_load_preprocessed(args, cfg), cfg)
    write_table(out / "table_window_length.csv", study.table())
    write_json(out / "window_study.json", study.to_dict())
    for L, n in study.window_counts.items():
        print(f"{L:g} s windows: {n} per recording")
    _manifest(out, "window-study", cfg, ["table_window_length.csv", "window_study.json"])
    return 0


def cmd_amplitude(args, cfg) -> int:
    out = _out_dir(args.out, args.create)
    ds, signals, targets = pipeline.build_amplitude_dataset(_load_preprocessed(args, cfg), cfg)
    write_dataset(ds, out)
    rows = [{"subject": sig.subject, "condition": sig.condition, "window_index": i, "label": float(lab),
             "amplitude": float(a), "fitted": float(f)}
            for sig, fit in zip(signals, targets)
            for i, (lab, a, f) in enumerate(zip(sig.window_labels, sig.points, fit.fitted))]
    write_table(out / "amplitude_signals.csv", rows)
    print(f"{len(ds)} windows of {ds.windows.shape[1]} samples from {len(signals)} recordings")
    _manifest(out, "amplitude", cfg, ["windows_meta.csv", "windows.csv", "windows.json", "amplitude_signals.csv"])
    return 0


def _dataset(args, cfg):
    if args.data and (Path(args.data) / "windows.csv").exists():
        return read_dataset(args.data)
    return pipeline.build_amplitude_dataset(_load_preprocessed(args, cfg), cfg)[0]


def cmd_evaluate(args, cfg) -> int:
    out = _out_dir(args.out, args.create)
    ds = _dataset(args, cfg)
    results = pipeline.run_models(ds, cfg, [args.model])
    written = pipeline.write_full_report(out, cfg, results=results)
    for row in pipeline.mae_table(results):
        print(f"condition {row['condition']}: {args.model} MAE {row[f'{args.model}_mean']:.4f}")
    _manifest(out, f"evaluate --model {args.model}", cfg, written)
    return 0


def cmd_itr(args, cfg) -> int:
    print(f"{itr(args.accuracy, args.classes, args.seconds):.4f}")
    return 0


def cmd_report(args, cfg) -> int:
    out = _out_dir(args.out, args.create)
    if args.data:
        pre = _load_preprocessed(args, cfg)
    else:
        pre = pipeline.preprocess_all({k: x for k, (x, _) in pipeline.synthesize(cfg).items()}, cfg)
    recognition = pipeline.run_recognition(pre, cfg)
    windows = pipeline.run_window_study(pre, cfg)
    ds = pipeline.build_amplitude_dataset(pre, cfg)[0]
    results = pipeline.run_models(ds, cfg)
    written = pipeline.write_full_report(out, cfg, recognition, windows, results)
    _manifest(out, "report", cfg, written)
    print(f"wrote {', '.join(written)} to {out}")
    return 0


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON config file; flags override its values")
    common.add_argument("--seed", type=int, default=None, help="cohort and model seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--create", action="store_true", help="create the output directory if missing")
    common.add_argument("--data", help="directory of recordings (or a windowed dataset for evaluate)")
    common.add_argument("--dump-filters", metavar="PATH",
                        help="write the filter coefficients as JSON to PATH ('-' for stdout)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="ssvepamp", description="SSVEP recognition and amplitude regression")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="write a synthetic cohort as CSV + JSON sidecars")
    s.add_argument("--noise-free", action="store_true", help="omit alpha rhythm and noise")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("recognize", parents=[common], help="per-subject recognition accuracy")
    s.add_argument("--method", choices=("cca", "fbcca"), default="fbcca")
    s.set_defaults(func=cmd_recognize)

    s = sub.add_parser("window-study", parents=[common], help="accuracy versus window length")
    s.set_defaults(func=cmd_window_study)

    s = sub.add_parser("amplitude", parents=[common], help="build the windowed amplitude dataset")
    s.set_defaults(func=cmd_amplitude)

    s = sub.add_parser("evaluate", parents=[common], help="leave-one-subject-out evaluation of one model")
    s.add_argument("--model", choices=MODEL_FAMILIES, required=True)
    s.add_argument("--grid", help="'ci' (default) or 'full'")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("itr", parents=[common], help="information transfer rate in bits/min")
    s.add_argument("--accuracy", type=float, required=True)
    s.add_argument("--classes", type=int, default=2)
    s.add_argument("--seconds", type=float, default=1.0)
    s.set_defaults(func=cmd_itr)

    s = sub.add_parser("report", parents=[common], help="run every stage and write all tables")
    s.add_argument("--grid", help="'ci' (default) or 'full'")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        if args.dump_filters:
            designs = pipeline.filter_designs(cfg)
            if args.dump_filters == "-":
                json.dump(designs, sys.stdout, indent=2)
                print()
            else:
                write_json(args.dump_filters, designs)
        return args.func(args, cfg)
    except SsvepError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return DataError.exit_code
    except (FloatingPointError, np.linalg.LinAlgError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return NumericError.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
