"""Command-line interface.

Subcommands
-----------
calibrate  fit a calibrator on a recalibration set and save it
evaluate   score a saved calibrator on a test set and write a report
kfold      stratified k-fold fit/evaluate protocol
simulate   write a synthetic two-Gaussian similarity dataset

Exit codes
----------
0 success (a complete output was written), 1 unexpected error, 2 usage
error, 3 I/O error, 4 invalid input data, 5 calibration failure (single
class, degenerate threshold, too few pairs per fold), 6 unsupported model
file version or kind.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__, asc, baselines, metrics, pipeline
from .data import (
    SyntheticSpec,
    folds_from_dataset,
    generate,
    load_embeddings,
    load_model,
    load_pairs,
    save_model,
    save_pairs,
    stratified_folds,
    write_text_atomic,
)
from .errors import CalibrationError, DataError, VersionMismatch

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DATA = 4
EXIT_CALIBRATION = 5
EXIT_VERSION = 6


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load_input(args):
    loader = load_embeddings if args.embeddings else load_pairs
    return loader(args.input, args.format)


def _add_input(p):
    p.add_argument("--input", required=True, help="CSV or JSONL dataset")
    p.add_argument("--format", choices=("csv", "jsonl"), default=None,
                   help="input format (default: from file extension)")
    p.add_argument("--embeddings", action="store_true",
                   help="input rows hold embedding pairs instead of similarities")


def _add_binning(p):
    p.add_argument("--bins", type=int, default=metrics.DEFAULT_ECE_BINS,
                   help="number of ECE bins (default: %(default)s)")
    p.add_argument("--scheme", choices=metrics.SCHEMES, default=metrics.EQUAL_WIDTH,
                   help="ECE bin partition (default: %(default)s)")


def _add_calibrator(p):
    p.add_argument("--calibrator", choices=pipeline.CALIBRATORS, default="asc",
                   help="calibrator family (default: %(default)s)")
    p.add_argument("--tau", type=float, default=None, help="fixed decision threshold")
    p.add_argument("--tau-mode", choices=pipeline.TAU_MODES, default="auto",
                   help="threshold source; 'auto' uses --tau, else --far-target, "
                        "else best accuracy on the recalibration data (default: %(default)s)")
    p.add_argument("--far-target", type=float, default=None,
                   help="choose the threshold reaching this false accept rate")
    p.add_argument("--hist-bins", type=int, default=baselines.DEFAULT_HISTOGRAM_BINS,
                   help="similarity bins for histogram binning (default: %(default)s)")
    p.add_argument("--max-iter", type=int, default=asc.FitConfig.max_iter,
                   help="ASC optimizer iteration cap (default: %(default)s)")
    p.add_argument("--learning-rate", type=float, default=asc.FitConfig.learning_rate,
                   help="ASC optimizer initial step scale (default: %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="verifcal", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="fit a calibrator and save it")
    _add_input(p)
    _add_calibrator(p)
    _add_binning(p)
    p.add_argument("--model-out", required=True, help="where to write the model file")
    p.add_argument("--report-out", default=None, help="optional JSON evaluation on the fitting data")

    p = sub.add_parser("evaluate", help="evaluate a saved calibrator")
    _add_input(p)
    _add_binning(p)
    p.add_argument("--model-in", required=True, help="model file written by 'calibrate'")
    p.add_argument("--report-out", required=True, help="where to write the JSON report")
    p.add_argument("--diagram-out", default=None,
                   help="optional reliability diagram (e.g. .svg or .pdf; needs matplotlib)")

    p = sub.add_parser("kfold", help="k-fold recalibration/test protocol")
    _add_input(p)
    _add_calibrator(p)
    _add_binning(p)
    p.add_argument("--folds", type=int, default=5, help="number of folds (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="fold shuffle seed (default: %(default)s)")
    p.add_argument("--use-file-folds", action="store_true",
                   help="use fold ids stored in the input instead of a stratified split")
    p.add_argument("--report-out", required=True, help="where to write the JSON report")

    p = sub.add_parser("simulate", help="write a synthetic dataset")
    p.add_argument("--n-pos", type=int, default=5000)
    p.add_argument("--n-neg", type=int, default=5000)
    p.add_argument("--pos-mean", type=float, default=0.45)
    p.add_argument("--pos-sd", type=float, default=0.08)
    p.add_argument("--neg-mean", type=float, default=0.25)
    p.add_argument("--neg-sd", type=float, default=0.08)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "jsonl"), default=None,
                   help="output format (default: from file extension)")
    p.add_argument("--output", required=True)
    return parser


def _fit_config(args) -> asc.FitConfig:
    return asc.FitConfig(learning_rate=args.learning_rate, max_iter=args.max_iter)


def cmd_calibrate(args) -> int:
    dataset = _load_input(args)
    tau = pipeline.resolve_tau(dataset, args.tau, args.tau_mode, args.far_target)
    model, report = pipeline.fit_calibrator(args.calibrator, dataset, tau, args.hist_bins, _fit_config(args))
    ev = pipeline.evaluate(model, dataset, args.bins, args.scheme)
    if args.report_out:
        write_text_atomic(args.report_out, _dump_json(ev))
    save_model(model, args.model_out)
    print(f"calibrator: {model.kind}")
    print(f"tau_raw: {model.tau_raw!r}")
    print(f"tau_calibrated: {model.tau_calibrated!r}")
    print(f"ece_pre: {ev['uncalibrated']['ece']!r}")
    print(f"ece_post: {ev['calibrated']['ece']!r}")
    print(f"accuracy_pre: {ev['uncalibrated']['accuracy']!r}")
    print(f"accuracy_post: {ev['calibrated']['accuracy']!r}")
    if report is not None:
        print(f"w: {model.w!r}")
        print(f"b: {model.b!r}")
        print(f"fit: loss {report.initial_loss:.6g} -> {report.final_loss:.6g}, "
              f"{report.iterations} iterations, converged={report.converged}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = load_model(args.model_in)
    dataset = _load_input(args)
    ev = pipeline.evaluate(model, dataset, args.bins, args.scheme)
    if args.diagram_out:
        pipeline.reliability_diagram(ev, args.diagram_out)
    write_text_atomic(args.report_out, _dump_json(ev))
    return EXIT_OK


def cmd_kfold(args) -> int:
    dataset = _load_input(args)
    split = folds_from_dataset(dataset) if args.use_file_folds else stratified_folds(dataset, args.folds, args.seed)
    report = pipeline.kfold(
        dataset, split, args.calibrator, args.bins, args.scheme, args.tau, args.tau_mode,
        args.far_target, args.hist_bins, _fit_config(args),
    )
    write_text_atomic(args.report_out, _dump_json(report))
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = SyntheticSpec(args.n_pos, args.n_neg, args.pos_mean, args.pos_sd,
                         args.neg_mean, args.neg_sd, args.seed)
    save_pairs(generate(spec), args.output, args.format)
    return EXIT_OK


COMMANDS = {
    "calibrate": cmd_calibrate,
    "evaluate": cmd_evaluate,
    "kfold": cmd_kfold,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except VersionMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERSION
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except CalibrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
