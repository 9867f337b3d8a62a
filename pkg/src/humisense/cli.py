"""Command-line entry point orchestrating the full workflow.

Exit codes: 0 success, 1 usage error, 2 data error (the message names the
originating error). Every report echoes the seed and settings it was
produced with, so any command is reproducible from its own output.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import classify, csvio, evaluation, plots, synth, workflow
from .denoise import DenoiseConfig, EmptySeries, denoise_pipeline
from .features import MissingLabels, TooFewRows, build_dataset
from .ingest import CaptureError, parse_capture_file
from .labels import EmptyDataset, bin_humidity

_DATA_ERRORS = (CaptureError, EmptySeries, MissingLabels, TooFewRows,
                EmptyDataset, classify.BadK, classify.SolverNotConverged,
                classify.SchemaVersionMismatch, classify.CorruptFile,
                ValueError, OSError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="humisense",
                     description="WiFi-CSI humidity sensing toolkit")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic chamber capture")
    p.add_argument("--scenario", help="scenario file (key = value lines); "
                                      "defaults used when omitted")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--out", help="write the capture as pcap")
    p.add_argument("--csv", dest="series_csv", help="write the noisy series CSV")
    p.add_argument("--clean-csv", help="write the clean (oracle) series CSV")
    p.add_argument("--log", help="write the disturbance log JSON")

    p = sub.add_parser("parse", help="parse a pcap capture to a frames CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("denoise", help="run the de-noising pipeline on a series CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--downsample", type=int, default=8)
    p.add_argument("--hampel-window", type=int, default=30,
                   help="Hampel half-window in samples")
    p.add_argument("--hampel-k", type=float, default=3.0,
                   help="Hampel threshold in scaled-MAD units")
    p.add_argument("--ma", type=int, default=10, help="moving-average window")

    p = sub.add_parser("featurize", help="build a 249-wide feature dataset")
    p.add_argument("--in", dest="infile", required=True,
                   help="series CSV with a humidity column")
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train a classifier on a dataset CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--algo", required=True, choices=["knn", "lsvm", "qsvm"])
    p.add_argument("--resolution", type=int, default=5)
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--k", type=int, help="KNN neighbour count")
    p.add_argument("--C", type=float, help="SVM regularization")
    p.add_argument("--tol", type=float, help="SMO tolerance")

    p = sub.add_parser("predict", help="predict classes for a dataset CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="repeated-holdout evaluation")
    _add_eval_args(p)
    p.add_argument("--algo", required=True, choices=["knn", "lsvm", "qsvm"])
    p.add_argument("--resolution", type=int, default=5)
    p.add_argument("--confusion-csv", help="write the pooled confusion matrix CSV")

    p = sub.add_parser("sweep", help="evaluate a grid of algorithms and resolutions")
    _add_eval_args(p)
    p.add_argument("--algos", default="knn,lsvm,qsvm",
                   help="comma-separated algorithm list")
    p.add_argument("--resolutions", default="2,5,10",
                   help="comma-separated resolution list")
    return parser


def _add_eval_args(p) -> None:
    p.add_argument("--in", dest="infile",
                   help="dataset CSV; when omitted, the default synthetic "
                        "dataset is generated in-process")
    p.add_argument("--rounds", type=int, default=10)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--block-split", action="store_true",
                   help="hold out a contiguous time block instead of an "
                        "i.i.d. random half")
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--csv", dest="table_csv", help="tabular report CSV path")
    p.add_argument("--figures", help="directory for rendered figures")


def _load_eval_dataset(args):
    if args.infile:
        return csvio.read_dataset_csv(args.infile)
    return workflow.default_dataset()


def _write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _cmd_synth(args) -> int:
    outputs = [args.out, args.series_csv, args.clean_csv, args.log]
    if not any(outputs):
        raise ValueError("synth needs at least one of --out/--csv/--clean-csv/--log")
    cfg = synth.load_scenario(args.scenario) if args.scenario else synth.ScenarioConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    series, log, clean = synth.generate_series(cfg)
    if args.out:
        synth.write_capture(series, args.out)
    if args.series_csv:
        csvio.write_series_csv(series, args.series_csv)
    if args.clean_csv:
        csvio.write_series_csv(clean, args.clean_csv)
    if args.log:
        _write_json(args.log, {"scenario": asdict(cfg),
                               "disturbances": log.to_dict()})
    return 0


def _cmd_parse(args) -> int:
    result = parse_capture_file(args.infile)
    csvio.write_frames_csv(result.frames, args.out)
    print(f"parsed {len(result.frames)} frames, skipped {result.skipped}")
    return 0


def _cmd_denoise(args) -> int:
    series = csvio.read_series_csv(args.infile)
    cfg = DenoiseConfig(args.downsample, args.hampel_window, args.hampel_k, args.ma)
    csvio.write_series_csv(denoise_pipeline(series, cfg), args.out)
    return 0


def _cmd_featurize(args) -> int:
    series = csvio.read_series_csv(args.infile)
    csvio.write_dataset_csv(build_dataset(series), args.out)
    return 0


def _hyper_from_args(args) -> dict:
    hyper = {}
    if args.k is not None:
        hyper["k"] = args.k
    if args.C is not None:
        hyper["C"] = args.C
    if args.tol is not None:
        hyper["tol"] = args.tol
    return hyper


def _cmd_train(args) -> int:
    dataset = csvio.read_dataset_csv(args.infile)
    model = classify.fit_model(dataset, args.algo, args.resolution,
                               **_hyper_from_args(args))
    classify.save_model(model, args.out)
    return 0


def _cmd_predict(args) -> int:
    model = classify.load_model(args.model)
    dataset = csvio.read_dataset_csv(args.infile)
    pred = classify.predict_model(model, dataset.X)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "predicted", "humidity"])
        times = dataset.times
        for i in range(len(dataset)):
            writer.writerow([repr(float(times[i])), int(pred[i]),
                             repr(float(dataset.humidity[i]))])
    return 0


def _cmd_evaluate(args) -> int:
    dataset = _load_eval_dataset(args)
    report = evaluation.evaluate(
        dataset, args.algo, args.resolution, rounds=args.rounds, seed=args.seed,
        split_mode="block" if args.block_split else "random")
    if args.out:
        _write_json(args.out, report.to_dict())
    if args.confusion_csv:
        with open(args.confusion_csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["true\\pred"] + [str(c) for c in report.classes])
            for cls, row in zip(report.classes, report.confusion):
                writer.writerow([cls] + [int(v) for v in row])
    if args.table_csv:
        with open(args.table_csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["round", "accuracy"])
            for i, acc in enumerate(report.accuracy_per_round):
                writer.writerow([i, repr(acc)])
    if args.figures:
        figures = Path(args.figures)
        figures.mkdir(parents=True, exist_ok=True)
        stem = f"{report.algorithm.lower()}_res{report.resolution}"
        plots.plot_confusion(report, figures / f"confusion_{stem}.png")
        plots.plot_accuracy_rounds(report, figures / f"accuracy_{stem}.png")
    print(f"{report.algorithm} res={report.resolution}% "
          f"mean_accuracy={report.mean_accuracy:.4f} "
          f"span=({report.accuracy_span[0]:.4f}, {report.accuracy_span[1]:.4f})")
    return 0


def _cmd_sweep(args) -> int:
    dataset = _load_eval_dataset(args)
    algorithms = [a.strip() for a in args.algos.split(",") if a.strip()]
    resolutions = [int(r) for r in args.resolutions.split(",") if r.strip()]
    sweep = evaluation.resolution_sweep(
        dataset, algorithms, resolutions, rounds=args.rounds, seed=args.seed,
        split_mode="block" if args.block_split else "random")
    if args.out:
        _write_json(args.out, sweep.to_dict())
    if args.table_csv:
        header, rows = sweep.table()
        with open(args.table_csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow(row)
    if args.figures:
        figures = Path(args.figures)
        figures.mkdir(parents=True, exist_ok=True)
        plots.plot_resolution_sweep(sweep, figures / "resolution_sweep.png")
        for resolution in resolutions:
            group = [sweep.find(a, resolution) for a in algorithms]
            plots.plot_algorithm_spread(
                group, figures / f"algorithm_spread_res{resolution}.png")
    for report in sweep.reports:
        print(f"{report.algorithm} res={report.resolution}% "
              f"mean_accuracy={report.mean_accuracy:.4f}")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "parse": _cmd_parse,
    "denoise": _cmd_denoise,
    "featurize": _cmd_featurize,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _DATA_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
