# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
from logging import basicConfig, DEBUG, getLogger
from os import makedirs
from os.path import join as pathjoin
import sys

from .args import LogoFormerArgs
from .common.config import load_config
from .common.exceptions import ContractError, LogoFormerError
from .common.status import Status
from .model.core import Model, ModelConfig
from .train.core import predict, STATUS_NAME, train, TrainConfig
from .train.export import compactness_ratio, export_embeddings
from .train.gradcheck import format_report, gradcheck, TINY_CONFIG
from .train.metrics import evaluate, format_metrics
from .train.sweep import cost_sweep, load_grid, write_sweep
from .train.synthetic import generate, SyntheticSpec

__all__ = ("configure_logging", "console_main", "main")

LOG = getLogger(__name__)

EXIT_SUCCESS = 0
EXIT_ERROR = 1
EXIT_ARGS = 2
EXIT_ABORT = 3

HEAD_PARAMS = ("head.weight", "head.bias")


def configure_logging(log_level):
    if log_level == DEBUG:
        date_fmt = None
        log_fmt = "%(asctime)s %(levelname).1s %(name)s | %(message)s"
    else:
        date_fmt = "%Y-%m-%d %H:%M:%S"
        log_fmt = "[%(asctime)s] %(message)s"
    basicConfig(format=log_fmt, datefmt=date_fmt, level=log_level)


def _mapping(args):
    mapping = load_config(args.config) if args.config else {}
    if args.clips_per_class is not None:
        mapping["clips_per_class"] = args.clips_per_class
    return mapping


def _dataset(model_config, args, mapping):
    spec = SyntheticSpec.for_model(model_config, mapping, seed=args.data_seed)
    LOG.info("Generating %d synthetic clips (seed %d)", spec.size, spec.seed)
    return generate(spec)


def run_train(args):
    mapping = _mapping(args)
    if args.seed is not None:
        mapping["seed"] = args.seed
        mapping["train_seed"] = args.seed
    config = TrainConfig.from_mapping(mapping, epochs=args.epochs, lam=args.lam, lr=args.lr)
    dataset = _dataset(config.model, args, mapping)
    makedirs(args.out, exist_ok=True)
    _, history = train(config, dataset, out_dir=args.out, resume=args.resume)
    for line in format_metrics(history.final):
        LOG.info(line)
    LOG.info("Results written to %r", args.out)
    return EXIT_SUCCESS


def run_eval(args):
    model = Model.load(args.model)
    dataset = _dataset(model.config, args, _mapping(args))
    metrics = evaluate(
        predict(model, dataset), [label for _, label in dataset], model.config.num_classes)
    for line in format_metrics(metrics):
        print(line)
    return EXIT_SUCCESS


def run_gradcheck(args):
    if args.config:
        config = ModelConfig.from_mapping(load_config(args.config))
    else:
        config = TINY_CONFIG
    names = HEAD_PARAMS if args.head_only else None
    LOG.info("Checking gradients of %d parameter tensors",
             len(names) if names else len(Model.init(config).params))
    report = gradcheck(config, names=names, lam=args.lam)
    for line in format_report(report):
        print(line)
    if report.max_rel_error >= args.threshold:
        LOG.error("Max relative error %.3e exceeds threshold %.3e (%s)",
                  report.max_rel_error, args.threshold, report.worst)
        return EXIT_ERROR
    return EXIT_SUCCESS


def run_cost(args):
    grid = [args.config] if args.grid is None else load_grid(args.grid)
    rows = cost_sweep(grid)
    if args.out is None:
        write_sweep(rows, sys.stdout)
    else:
        try:
            with open(args.out, "w", newline="") as out_fp:
                write_sweep(rows, out_fp)
        except OSError as exc:
            raise LogoFormerError("cannot write %r: %s" % (args.out, exc)) from None
        LOG.info("Wrote %d rows to %r", len(rows), args.out)
    return EXIT_SUCCESS


def run_export(args):
    model = Model.load(args.model)
    dataset = _dataset(model.config, args, _mapping(args))
    rows = export_embeddings(model, dataset, args.out)
    LOG.info("Wrote %d embeddings to %r", len(rows), args.out)
    try:
        LOG.info("Inter/intra class distance ratio: %.4f", compactness_ratio(rows))
    except ContractError as exc:
        LOG.debug("distance ratio unavailable: %s", exc.msg)
    return EXIT_SUCCESS


def run_status(args):
    status = Status.load(pathjoin(args.directory, STATUS_NAME))
    if status is None:
        LOG.error("No training status found in %r", args.directory)
        return EXIT_ERROR
    print(status.summary())
    return EXIT_SUCCESS


COMMANDS = {
    "cost": run_cost,
    "eval": run_eval,
    "export-embeddings": run_export,
    "gradcheck": run_gradcheck,
    "status": run_status,
    "train": run_train,
}


def main(args):
    configure_logging(args.log_level)
    LOG.debug("running %r", args.command)
    try:
        return COMMANDS[args.command](args)

    except KeyboardInterrupt:
        LOG.info("Ctrl+C detected.")
        return EXIT_ABORT

    except LogoFormerError as exc:
        LOG.error("Error: %s", exc.msg)
        return exc.code


def console_main():
    return main(LogoFormerArgs().parse_args())
