"""Command-line front end: ``wiid <subcommand> ...``.

Every subcommand checks its inputs before it writes anything, then writes its
artifacts plus a run manifest (``<artifact>.run.json``) that records the
resolved configuration and a SHA-256 checksum of each artifact.

Exit codes: 0 success, 2 usage error, 3 invalid or unreadable config,
4 missing or unreadable input, 5 malformed data file, 6 failure while writing
output, 1 anything else. Errors are printed as one line on stderr:
``wiid: error[<code>]: <message>``.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .config import Experiment, load_experiment, network_config, preset_names
from .dataset import (
    DatasetFileError,
    DatasetIOError,
    generate_multi_label,
    generate_scenario,
    generate_single_label,
    load_dataset,
    manifest_path,
    save_dataset,
    split_train_val,
)
from .evaluation import (
    GRANULARITIES,
    emit_report,
    evaluate,
    load_report,
    single_label_comparison,
    write_curve_csv,
)
from .features import to_feature_matrix
from .nn import ModelFormatError, build_model, load_model, save_model, train
from .signals import NUM_CLASSES, Technology, class_spec, synthesize_burst

log = logging.getLogger("wiid")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_INPUT = 4
EXIT_DATA = 5
EXIT_OUTPUT = 6

ENV_OUT_DIR = "WIID_OUT_DIR"
ENV_THREADS = "WIID_THREADS"


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_USAGE, message)


# --------------------------------------------------------------------------
# helpers

def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _out_path(args, path: str) -> Path:
    p = Path(path)
    if not p.is_absolute() and args.out_dir:
        p = Path(args.out_dir) / p
    return p


def _prepare_output(path: Path) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise CliError(EXIT_OUTPUT, f"cannot create {path.parent}: {e}") from None


def _input(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise CliError(EXIT_INPUT, f"input not found: {p}")
    return p


def _experiment(args) -> Experiment:
    try:
        exp = load_experiment(args.config)
    except FileNotFoundError:
        raise CliError(EXIT_CONFIG, f"config not found: {args.config} "
                                    f"(bundled presets: {', '.join(preset_names())})") from None
    except (OSError, ValueError) as e:
        raise CliError(EXIT_CONFIG, f"cannot use config {args.config}: {e}") from None
    if getattr(args, "seed", None) is not None:
        exp.generation.master_seed = args.seed
        exp.training.seed = args.seed
    return exp


def _load_data(path: str):
    try:
        return load_dataset(_input(path))
    except DatasetIOError as e:
        raise CliError(EXIT_INPUT, str(e)) from None
    except DatasetFileError as e:
        raise CliError(EXIT_DATA, str(e)) from None


def _load_model(path: str):
    try:
        return load_model(_input(path))
    except ModelFormatError as e:
        raise CliError(EXIT_DATA, str(e)) from None


def _threads(args) -> int:
    n = args.threads if args.threads is not None else os.environ.get(ENV_THREADS, 1)
    try:
        n = int(n)
    except ValueError:
        raise CliError(EXIT_USAGE, f"thread count must be an integer, got {n!r}") from None
    if n < 1:
        raise CliError(EXIT_USAGE, "thread count must be at least 1")
    return n


def _write_run_manifest(args, artifacts: list[Path], config: dict) -> Path:
    primary = artifacts[0]
    sums = {p.name: sha256_file(p) for p in artifacts}
    for p in artifacts:
        side = manifest_path(p)
        if side.exists():
            sums[side.name] = sha256_file(side)
    record = {"tool": "wiid", "version": __version__, "command": args.command,
              "config": config, "artifacts": dict(sorted(sums.items()))}
    path = primary.with_name(primary.name + ".run.json")
    path.write_text(json.dumps(record, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def _guard_write(fn, *a):
    try:
        return fn(*a)
    except DatasetIOError as e:
        raise CliError(EXIT_OUTPUT, str(e)) from None
    except OSError as e:
        raise CliError(EXIT_OUTPUT, f"cannot write output: {e}") from None


# --------------------------------------------------------------------------
# subcommands

def cmd_synth_preview(args) -> dict:
    if not 0 <= args.cls < NUM_CLASSES:
        raise CliError(EXIT_USAGE, f"class must lie in 0..{NUM_CLASSES - 1}")
    spec = class_spec(args.cls)
    variant = args.variant or spec.variant_set[0].name
    try:
        x = synthesize_burst(args.cls, variant, args.seed)
    except ValueError as e:
        raise CliError(EXIT_USAGE, str(e)) from None
    rows = [["index", "i", "q"]] + [[k, repr(float(v.real)), repr(float(v.imag))] for k, v in enumerate(x)]
    config = {"class": args.cls, "variant": variant, "seed": args.seed}
    if args.out is None:
        csv.writer(sys.stdout, lineterminator="\n").writerows(rows)
        return config
    out = _out_path(args, args.out)
    _prepare_output(out)
    with open(out, "w", newline="") as f:
        csv.writer(f, lineterminator="\n").writerows(rows)
    _write_run_manifest(args, [out], config)
    return config


def cmd_gen_single(args) -> dict:
    exp = _experiment(args)
    out = _out_path(args, args.out)
    _prepare_output(out)
    ds = generate_single_label(exp.generation, workers=_threads(args))
    _guard_write(save_dataset, ds, out)
    _write_run_manifest(args, [out], exp.generation.to_dict())
    log.info("wrote %d single-label records to %s", len(ds), out)
    return {"records": len(ds)}


def cmd_gen_multi(args) -> dict:
    exp = _experiment(args)
    single = _load_data(args.single)
    out = _out_path(args, args.out)
    _prepare_output(out)
    try:
        ds = generate_multi_label(single, exp.generation, workers=_threads(args))
    except ValueError as e:
        raise CliError(EXIT_DATA, str(e)) from None
    _guard_write(save_dataset, ds, out)
    _write_run_manifest(args, [out], exp.generation.to_dict())
    log.info("wrote %d multi-label records to %s", len(ds), out)
    return {"records": len(ds)}


def cmd_gen_scenario(args) -> dict:
    single = _load_data(args.single)
    try:
        counts = [int(n) for n in args.counts.split(",")]
        Technology(args.utilized), Technology(args.interferer)
    except ValueError as e:
        raise CliError(EXIT_USAGE, f"bad scenario arguments: {e}") from None
    out = _out_path(args, args.out)
    _prepare_output(out)
    try:
        ds = generate_scenario(single, args.utilized, args.interferer, counts, args.per_count,
                               seed=args.seed)
    except ValueError as e:
        raise CliError(EXIT_DATA, str(e)) from None
    _guard_write(save_dataset, ds, out)
    _write_run_manifest(args, [out], ds.manifest)
    return {"records": len(ds)}


def cmd_split(args) -> dict:
    exp = _experiment(args)
    data = _load_data(args.input)
    fraction = args.fraction if args.fraction is not None else exp.generation.train_fraction
    seed = exp.generation.master_seed
    try:
        train_ds, val_ds = split_train_val(data, fraction, seed)
    except ValueError as e:
        raise CliError(EXIT_DATA, str(e)) from None
    prefix = _out_path(args, args.out)
    _prepare_output(prefix)
    paths = [prefix.with_name(prefix.name + ".train.wiid"), prefix.with_name(prefix.name + ".val.wiid")]
    _guard_write(save_dataset, train_ds, paths[0])
    _guard_write(save_dataset, val_ds, paths[1])
    _write_run_manifest(args, paths, {"train_fraction": fraction, "seed": seed})
    log.info("split %d records into %d / %d", len(data), len(train_ds), len(val_ds))
    return {"train": len(train_ds), "val": len(val_ds)}


def cmd_features(args) -> dict:
    data = _load_data(args.input)
    if not 0 <= args.index < len(data):
        raise CliError(EXIT_USAGE, f"index {args.index} outside 0..{len(data) - 1}")
    m = to_feature_matrix(data[args.index].snapshot, normalize=not args.raw,
                          centered=not args.natural_order)
    rows = [["row", "real", "imag"]] + [[k, repr(float(a)), repr(float(b))] for k, (a, b) in enumerate(m)]
    if args.out is None:
        csv.writer(sys.stdout, lineterminator="\n").writerows(rows)
    else:
        out = _out_path(args, args.out)
        _prepare_output(out)
        with open(out, "w", newline="") as f:
            csv.writer(f, lineterminator="\n").writerows(rows)
        _write_run_manifest(args, [out], {"index": args.index, "normalize": not args.raw})
    return {}


def cmd_train(args) -> dict:
    exp = _experiment(args)
    if args.network:
        try:
            exp.network = network_config(json.loads(args.network) if args.network.startswith("{")
                                         else args.network)
        except ValueError as e:
            raise CliError(EXIT_CONFIG, str(e)) from None
    t = exp.training
    epochs = t.epochs if args.epochs is None else args.epochs
    batch = t.batch_size if args.batch is None else args.batch
    lr = t.lr if args.lr is None else args.lr
    train_ds = _load_data(args.train)
    val_ds = _load_data(args.val)
    try:
        model = build_model(exp.network, seed=t.seed)
    except (ValueError, KeyError) as e:
        raise CliError(EXIT_CONFIG, f"bad network config: {e}") from None
    out = _out_path(args, args.out)
    _prepare_output(out)
    try:
        train(model, train_ds, val_ds, epochs=epochs, batch_size=batch, seed=t.seed, lr=lr,
              threshold=exp.evaluation.threshold)
    except ValueError as e:
        raise CliError(EXIT_DATA, str(e)) from None
    _guard_write(save_model, model, out)
    _write_run_manifest(args, [out], {"network": exp.network, "epochs": epochs,
                                      "batch_size": batch, "lr": lr, "seed": t.seed})
    return {"epochs": epochs}


def _threshold(args) -> float:
    if not 0.0 < args.threshold < 1.0:
        raise CliError(EXIT_USAGE, "threshold must lie in (0, 1)")
    return args.threshold


def cmd_eval(args) -> dict:
    threshold = _threshold(args)
    model = _load_model(args.model)
    data = _load_data(args.data)
    out = _out_path(args, args.out)
    _prepare_output(out)
    report = evaluate(model, data, threshold, mask_utilized=not args.no_mask).regroup(args.group_by)
    _guard_write(emit_report, report, args.format, out)
    _write_run_manifest(args, [out], {"threshold": threshold, "group_by": args.group_by,
                                      "format": args.format, "mask_utilized": not args.no_mask})
    mean = report.mean_tpr()
    log.info("mean TPR %s over %d records", "n/a" if mean is None else f"{mean:.4f}", len(data))
    return {"mean_tpr": mean}


def cmd_compare_single(args) -> dict:
    try:
        thresholds = [float(t) for t in args.thresholds.split(",")]
    except ValueError:
        raise CliError(EXIT_USAGE, f"bad threshold list {args.thresholds!r}") from None
    if not all(0.0 < t < 1.0 for t in thresholds):
        raise CliError(EXIT_USAGE, "thresholds must lie in (0, 1)")
    model = _load_model(args.model)
    data = _load_data(args.data)
    out = _out_path(args, args.out)
    _prepare_output(out)
    try:
        curve = single_label_comparison(model, data, thresholds)
    except ValueError as e:
        raise CliError(EXIT_DATA, str(e)) from None
    _guard_write(write_curve_csv, curve, out)
    _write_run_manifest(args, [out], {"thresholds": thresholds})
    return {}


def cmd_report(args) -> dict:
    path = _input(args.input)
    try:
        report = load_report(path)
    except (ValueError, KeyError) as e:
        raise CliError(EXIT_DATA, f"{path}: not a report: {e}") from None
    try:
        report = report.regroup(args.group_by or report.granularity)
    except ValueError as e:
        raise CliError(EXIT_USAGE, str(e)) from None
    out = _out_path(args, args.out)
    _prepare_output(out)
    _guard_write(emit_report, report, args.format, out)
    _write_run_manifest(args, [out], {"group_by": report.granularity, "format": args.format})
    return {}


# --------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out-dir", default=os.environ.get(ENV_OUT_DIR),
                        help=f"base directory for relative output paths (env {ENV_OUT_DIR})")
    common.add_argument("--threads", type=int, default=None,
                        help=f"worker processes for dataset generation (env {ENV_THREADS}); "
                             "does not change results")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = _Parser(prog="wiid", description="Wireless interference identification lab.")
    p.add_argument("--version", action="version", version=f"wiid {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_, description=help_)
        sp.set_defaults(func=fn)
        return sp

    def config_arg(sp):
        sp.add_argument("--config", default="desk",
                        help=f"config JSON path or bundled preset ({', '.join(preset_names())})")
        sp.add_argument("--seed", type=int, default=None, help="override the master seed")

    sp = add("synth-preview", cmd_synth_preview, "write one synthesized burst as index,I,Q CSV")
    sp.add_argument("--class", dest="cls", type=int, required=True)
    sp.add_argument("--variant", default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None, help="CSV path (stdout when omitted)")

    sp = add("gen-single", cmd_gen_single, "generate the single-label dataset")
    config_arg(sp)
    sp.add_argument("--out", required=True)

    sp = add("gen-multi", cmd_gen_multi, "mix single-label records into the multi-label dataset")
    config_arg(sp)
    sp.add_argument("--single", required=True, help="single-label dataset file")
    sp.add_argument("--out", required=True)

    sp = add("gen-scenario", cmd_gen_scenario,
             "multi-label evaluation set with fixed utilized and interferer technologies")
    sp.add_argument("--single", required=True)
    sp.add_argument("--utilized", required=True, choices=[t.value for t in Technology])
    sp.add_argument("--interferer", required=True, choices=[t.value for t in Technology])
    sp.add_argument("--counts", default="1", help="comma-separated interferer counts")
    sp.add_argument("--per-count", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)

    sp = add("split", cmd_split, "stratified train/validation split")
    config_arg(sp)
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--fraction", type=float, default=None)
    sp.add_argument("--out", required=True, help="prefix; writes <prefix>.train.wiid and <prefix>.val.wiid")

    sp = add("features", cmd_features, "dump one record's 128 x 2 feature matrix as CSV")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--index", type=int, required=True)
    sp.add_argument("--raw", action="store_true", help="skip RMS normalization")
    sp.add_argument("--natural-order", action="store_true", help="DC in row 0 instead of row 64")
    sp.add_argument("--out", default=None)

    sp = add("train", cmd_train, "train a network on a multi-label dataset")
    config_arg(sp)
    sp.add_argument("--train", required=True)
    sp.add_argument("--val", required=True)
    sp.add_argument("--network", default=None, help="network preset name or JSON object")
    sp.add_argument("--epochs", type=int, default=None)
    sp.add_argument("--batch", type=int, default=None)
    sp.add_argument("--lr", type=float, default=None)
    sp.add_argument("--out", required=True)

    sp = add("eval", cmd_eval, "per-class TPR report for a dataset")
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--threshold", type=float, default=0.5)
    sp.add_argument("--group-by", choices=GRANULARITIES, default="utilized")
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--no-mask", action="store_true", help="count the utilized class too")
    sp.add_argument("--out", required=True)

    sp = add("compare-single", cmd_compare_single, "TPR versus SNR on single-label data, as CSV")
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--thresholds", default="0.3,0.5,0.7")
    sp.add_argument("--out", required=True)

    sp = add("report", cmd_report, "regroup or convert a JSON report")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--group-by", choices=GRANULARITIES, default=None)
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--out", required=True)
    return p


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    except CliError as e:
        print(f"wiid: error[{e.code}]: {e}", file=sys.stderr)
        return e.code
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except CliError as e:
        print(f"wiid: error[{e.code}]: {e}", file=sys.stderr)
        return e.code
    except Exception as e:  # noqa: BLE001 - last-resort single-line report
        msg = str(e).splitlines()[0] if str(e) else type(e).__name__
        print(f"wiid: error[{EXIT_FAILURE}]: {type(e).__name__}: {msg}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def main() -> None:
    sys.exit(run())

if __name__ == "__main__":
    main()
