# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
from concurrent.futures import ThreadPoolExecutor
from logging import getLogger
from os import getenv

import numpy as np

__all__ = ("make_rng", "ordered_map", "worker_count", "WORKERS_ENV")

LOG = getLogger(__name__)

WORKERS_ENV = "LGF_WORKERS"


def make_rng(seed, *stream):
    """Create an independent random generator for `seed` and an optional stream
    key, e.g. make_rng(seed, epoch). Identical arguments give identical streams.

    Args:
        seed (int): Non-negative base seed.
        stream (int): Additional non-negative stream identifiers.

    Returns:
        numpy.random.Generator: Seeded generator.
    """
    return np.random.default_rng([int(seed)] + [int(x) for x in stream])


def worker_count():
    """Number of workers used for evaluation and cost sweeps.

    Args:
        None

    Returns:
        int: Value of the LGF_WORKERS environment variable (default 1).
    """
    value = getenv(WORKERS_ENV, "1")
    try:
        workers = int(value)
    except ValueError:
        workers = 0
    if workers < 1:
        LOG.warning("Invalid %s value %r, using 1 worker", WORKERS_ENV, value)
        workers = 1
    return workers


def ordered_map(func, items, workers=None):
    """Apply `func` to every item, possibly in parallel. Results are always
    returned in input order.

    Args:
        func (callable): Function applied to each item.
        items (iterable): Work items.
        workers (int): Worker count, defaults to worker_count().

    Returns:
        list: func(item) for each item in order.
    """
    if workers is None:
        workers = worker_count()
    items = list(items)
    if workers < 2 or len(items) < 2:
        return [func(item) for item in items]
    LOG.debug("mapping %d items over %d workers", len(items), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))
