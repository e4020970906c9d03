# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Plain-text `key = value` configuration files.

One file may mix model, training and synthetic-data keys. Lines are UTF-8,
`#` starts a comment and blank lines are ignored. Unknown keys are errors.
"""
from logging import getLogger

from .exceptions import ConfigError

__all__ = ("convert_items", "format_items", "load_config", "parse_config", "parse_items", "parse_window")

LOG = getLogger(__name__)


def parse_window(value):
    """Parse "f,h,w" into a tuple of three ints."""
    parts = [x.strip() for x in value.split(",")]
    if len(parts) != 3:
        raise ValueError("expected f,h,w")
    return tuple(int(x) for x in parts)


KEY_TYPES = {
    # model
    "F": int,
    "H": int,
    "W": int,
    "C": int,
    "d": int,
    "N": int,
    "heads": int,
    "window": parse_window,
    "pool_mode": str,
    "attention": str,
    "num_classes": int,
    "seed": int,
    # training
    "lr": float,
    "momentum": float,
    "epochs": int,
    "batch_size": int,
    "lambda": float,
    "train_seed": int,
    # synthetic data
    "clips_per_class": int,
    "class_signal_scale": float,
    "noise_scale": float,
    "temporal_drift": float,
    "data_seed": int,
}


def parse_items(text, source="<text>"):
    """Split configuration text into raw (key, value) pairs.

    Args:
        text (str): Configuration text.
        source (str): Name used in error messages.

    Returns:
        list(tuple(str, str)): Pairs in file order.
    """
    items = []
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError("%s:%d: expected 'key = value'" % (source, lineno))
        if key in seen:
            raise ConfigError("%s:%d: duplicate key %r" % (source, lineno, key))
        seen.add(key)
        items.append((key, value.strip()))
    return items


def convert_items(items, source="<text>"):
    """Convert raw (key, value) pairs to typed values.

    Args:
        items (iterable(tuple(str, str))): Raw pairs.
        source (str): Name used in error messages.

    Returns:
        dict: Typed value for each key present.
    """
    config = {}
    for key, value in items:
        if key not in KEY_TYPES:
            raise ConfigError("%s: unknown key %r" % (source, key))
        try:
            config[key] = KEY_TYPES[key](value)
        except ValueError:
            raise ConfigError("%s: invalid value %r for %r" % (source, value, key)) from None
    return config


def parse_config(text, source="<text>"):
    """Parse configuration text into typed values.

    Args:
        text (str): Configuration text.
        source (str): Name used in error messages.

    Returns:
        dict: Typed value for each key present.
    """
    config = convert_items(parse_items(text, source=source), source=source)
    LOG.debug("loaded %d config keys from %s", len(config), source)
    return config


def load_config(path):
    """Load a configuration file.

    Args:
        path (str): File to read.

    Returns:
        dict: Typed value for each key present.
    """
    try:
        with open(path, "r", encoding="utf-8") as in_fp:
            text = in_fp.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError("cannot read config %r: %s" % (path, exc)) from None
    return parse_config(text, source=path)


def format_items(items, sep="="):
    """Render (key, value) pairs as configuration text. Windows and other tuples
    are written comma separated.

    Args:
        items (iterable(tuple(str, object))): Pairs to write, in order.
        sep (str): Separator between key and value.

    Returns:
        str: One `key<sep>value` line per pair.
    """
    lines = []
    for key, value in items:
        if isinstance(value, tuple):
            value = ",".join(str(x) for x in value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append("%s%s%s" % (key, sep, value))
    return "\n".join(lines)
