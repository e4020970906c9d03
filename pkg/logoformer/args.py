# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""CLI argument parsing for LOGO-Former."""
from argparse import ArgumentParser, HelpFormatter
from logging import CRITICAL, DEBUG, ERROR, INFO, WARNING
from os.path import exists, isdir, isfile

from .common.exceptions import ConfigError
from .train.gradcheck import DEFAULT_THRESHOLD
from .train.sweep import parse_row

__all__ = ("LogoFormerArgs", "SortingHelpFormatter")


class SortingHelpFormatter(HelpFormatter):
    """Lists options alphabetically by long option name."""
    @staticmethod
    def __sort_key(action):
        for opt in action.option_strings:
            if opt.startswith("--"):
                return [opt]
        return action.option_strings

    def add_usage(self, usage, actions, groups, prefix=None):
        actions = sorted(actions, key=self.__sort_key)
        super().add_usage(usage, actions, groups, prefix)

    def add_arguments(self, actions):
        actions = sorted(actions, key=self.__sort_key)
        super().add_arguments(actions)


class LogoFormerArgs(object):
    COMMANDS = ("cost", "eval", "export-embeddings", "gradcheck", "status", "train")

    def __init__(self):
        # log levels for console logging
        self._level_map = {
            "CRIT": CRITICAL,
            "ERROR": ERROR,
            "WARN": WARNING,
            "INFO": INFO,
            "DEBUG": DEBUG}
        self.parser = ArgumentParser(
            prog="logoformer",
            description="Local-global spatio-temporal attention for clip classification.",
            formatter_class=SortingHelpFormatter)
        self.parser.add_argument(
            "--log-level", default="INFO",
            help="Configure console logging. Options: %s (default: %%(default)s)" %
            ", ".join(k for k, v in sorted(self._level_map.items(), key=lambda x: x[1])))
        commands = self.parser.add_subparsers(dest="command", metavar="COMMAND")
        commands.required = True

        train = commands.add_parser(
            "train", formatter_class=SortingHelpFormatter,
            help="Train a model on synthetic clips")
        self._add_config(train)
        self._add_data(train)
        train.add_argument(
            "--epochs", type=int,
            help="Total number of epochs (overrides the config file)")
        train.add_argument(
            "--lambda", type=float, dest="lam",
            help="Compact loss weight (overrides the config file)")
        train.add_argument(
            "--lr", type=float,
            help="Learning rate (overrides the config file)")
        train.add_argument(
            "--out", required=True,
            help="Output directory for model.lgfm, history.csv and status.json")
        train.add_argument(
            "--resume", metavar="CKPT",
            help="Continue from a checkpoint written by a previous 'train'")
        train.add_argument(
            "--seed", type=int,
            help="Seed for initialization and batch order (overrides 'seed' and 'train_seed')")

        evaluate = commands.add_parser(
            "eval", formatter_class=SortingHelpFormatter,
            help="Report per-class recall, UAR and WAR on synthetic clips")
        self._add_config(evaluate)
        self._add_data(evaluate)
        evaluate.add_argument(
            "--model", required=True,
            help="Model checkpoint")

        gradcheck = commands.add_parser(
            "gradcheck", formatter_class=SortingHelpFormatter,
            help="Compare analytic gradients with finite differences")
        self._add_config(gradcheck, help_text="Model config (default: tiny built-in config)")
        gradcheck.add_argument(
            "--head-only", action="store_true",
            help="Only check the classification head parameters")
        gradcheck.add_argument(
            "--lambda", type=float, dest="lam", default=1.0,
            help="Compact loss weight (default: %(default)s)")
        gradcheck.add_argument(
            "--threshold", type=float, default=DEFAULT_THRESHOLD,
            help="Maximum accepted relative error (default: %(default)s)")

        cost = commands.add_parser(
            "cost", formatter_class=SortingHelpFormatter,
            help="Attention cost table as CSV")
        source = cost.add_mutually_exclusive_group(required=True)
        source.add_argument(
            "--config", metavar="F,H,W,f,h,w",
            help="Single configuration")
        source.add_argument(
            "--grid",
            help="File with one F,H,W,f,h,w configuration per line")
        cost.add_argument(
            "--out",
            help="Output CSV file (default: stdout)")

        export = commands.add_parser(
            "export-embeddings", formatter_class=SortingHelpFormatter,
            help="Write final CLS features of synthetic clips as CSV")
        self._add_config(export)
        self._add_data(export)
        export.add_argument(
            "--model", required=True,
            help="Model checkpoint")
        export.add_argument(
            "--out", required=True,
            help="Output CSV file")

        status = commands.add_parser(
            "status", formatter_class=SortingHelpFormatter,
            help="Show progress of a training run")
        status.add_argument(
            "directory",
            help="Output directory of a training run")

    @staticmethod
    def _add_config(parser, help_text="Config file with key = value lines"):
        parser.add_argument("--config", help=help_text)

    @staticmethod
    def _add_data(parser):
        parser.add_argument(
            "--clips-per-class", type=int,
            help="Synthetic clips per class (overrides the config file)")
        parser.add_argument(
            "--data-seed", type=int,
            help="Synthetic data seed (overrides the config file)")

    def parse_args(self, argv=None):
        args = self.parser.parse_args(argv)
        self.sanity_check(args)
        return args

    def sanity_check(self, args):
        # check log level
        log_level = self._level_map.get(args.log_level.upper(), None)
        if log_level is None:
            self.parser.error("Invalid log-level %r" % (args.log_level,))
        args.log_level = log_level

        if args.command == "cost":
            if args.config is not None:
                try:
                    args.config = parse_row(args.config)
                except ConfigError as exc:
                    self.parser.error("--config: %s" % (exc.msg,))
            elif not isfile(args.grid):
                self.parser.error("--grid not found %r" % (args.grid,))
            return

        if args.command == "status":
            if not isdir(args.directory):
                self.parser.error("%r is not a directory" % (args.directory,))
            return

        if args.config is not None and not isfile(args.config):
            self.parser.error("--config not found %r" % (args.config,))

        if args.command in ("eval", "export-embeddings", "train"):
            if args.clips_per_class is not None and args.clips_per_class < 1:
                self.parser.error("--clips-per-class must be >= 1")
            if args.data_seed is not None and args.data_seed < 0:
                self.parser.error("--data-seed must be >= 0")

        if args.command in ("eval", "export-embeddings") and not isfile(args.model):
            self.parser.error("--model not found %r" % (args.model,))

        if args.command == "gradcheck":
            if args.lam < 0:
                self.parser.error("--lambda must be >= 0")
            if args.threshold <= 0:
                self.parser.error("--threshold must be > 0")

        if args.command == "train":
            if args.epochs is not None and args.epochs < 1:
                self.parser.error("--epochs must be >= 1")
            if args.lam is not None and args.lam < 0:
                self.parser.error("--lambda must be >= 0")
            if args.lr is not None and args.lr < 0:
                self.parser.error("--lr must be >= 0")
            if args.seed is not None and args.seed < 0:
                self.parser.error("--seed must be >= 0")
            if exists(args.out) and not isdir(args.out):
                self.parser.error("--out %r is not a directory" % (args.out,))
            if args.resume is not None and not isfile(args.resume):
                self.parser.error("--resume not found %r" % (args.resume,))
