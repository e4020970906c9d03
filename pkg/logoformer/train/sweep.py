# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Attention cost sweeps over (F, H, W, f, h, w) configurations."""
from csv import writer
from logging import getLogger

from ..common.exceptions import ConfigError, LogoFormerError
from ..common.utils import ordered_map
from ..model.cost import cost_report

__all__ = ("cost_sweep", "load_grid", "parse_grid", "parse_row", "SWEEP_COLUMNS", "write_sweep")

LOG = getLogger(__name__)

CONFIG_COLUMNS = ("F", "H", "W", "f", "h", "w")
COST_COLUMNS = (
    "cost_local", "cost_global", "cost_logo_total", "cost_full", "cost_spatial_only",
    "cost_divided", "cost_mixing")
SWEEP_COLUMNS = CONFIG_COLUMNS + COST_COLUMNS + ("ordering_ok",)
# ordering_ok value of rows whose config is invalid
ERROR_MARKER = "error"


def parse_row(text):
    """Parse "F,H,W,f,h,w" into six ints."""
    parts = [part.strip() for part in text.split(",")]
    if len(parts) != len(CONFIG_COLUMNS):
        raise ConfigError("expected F,H,W,f,h,w, got %r" % (text,))
    try:
        return tuple(int(part) for part in parts)
    except ValueError:
        raise ConfigError("expected integers in %r" % (text,)) from None


def parse_grid(text, source="<text>"):
    """Parse one configuration per line. `#` starts a comment, blank lines are
    ignored.

    Args:
        text (str): Grid text.
        source (str): Name used in error messages.

    Returns:
        list(tuple(int)): Configurations in file order.
    """
    grid = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            grid.append(parse_row(line))
        except ConfigError as exc:
            raise ConfigError("%s:%d: %s" % (source, lineno, exc.msg)) from None
    return grid


def load_grid(path):
    try:
        with open(path, "r", encoding="utf-8") as in_fp:
            text = in_fp.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError("cannot read grid %r: %s" % (path, exc)) from None
    return parse_grid(text, source=path)


def _sweep_row(config):
    try:
        report = cost_report(*config)
    except LogoFormerError as exc:
        LOG.warning("Invalid config %s: %s", ",".join(str(x) for x in config), exc.msg)
        return tuple(config) + ("",) * len(COST_COLUMNS) + (ERROR_MARKER,)
    if not report.ordering_ok:
        LOG.debug("ordering does not hold for %r", report.config)
    return report.config + tuple(report[1:]) + (int(report.ordering_ok),)


def cost_sweep(grid, workers=None):
    """One row per configuration, in grid order. Invalid configurations are
    kept with empty cost columns and ordering_ok set to "error".

    Args:
        grid (iterable(tuple(int))): (F, H, W, f, h, w) configurations.
        workers (int): Parallel workers (default from the environment).

    Returns:
        list(tuple): Row values in SWEEP_COLUMNS order.
    """
    return ordered_map(_sweep_row, grid, workers=workers)


def write_sweep(rows, out_fp):
    """Write the CSV header and rows to an open text file."""
    csv_out = writer(out_fp, lineterminator="\n")
    csv_out.writerow(SWEEP_COLUMNS)
    csv_out.writerows(rows)
