# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""test utility functions"""
from threading import get_ident

import numpy as np

from .utils import make_rng, ordered_map, worker_count, WORKERS_ENV


def test_utils_01():
    """test make_rng()"""
    first = make_rng(3).standard_normal(5)
    assert np.array_equal(first, make_rng(3).standard_normal(5))
    assert not np.array_equal(first, make_rng(4).standard_normal(5))
    # streams are independent of each other and of the base seed
    stream = make_rng(3, 1).standard_normal(5)
    assert np.array_equal(stream, make_rng(3, 1).standard_normal(5))
    assert not np.array_equal(stream, first)
    assert not np.array_equal(stream, make_rng(3, 2).standard_normal(5))


def test_utils_02(monkeypatch, caplog):
    """test worker_count()"""
    assert worker_count() == 1
    monkeypatch.setenv(WORKERS_ENV, "4")
    assert worker_count() == 4
    for value in ("0", "-2", "many"):
        caplog.clear()
        monkeypatch.setenv(WORKERS_ENV, value)
        assert worker_count() == 1
        assert "Invalid %s value" % (WORKERS_ENV,) in caplog.text


def test_utils_03(monkeypatch):
    """test ordered_map() keeps input order"""
    items = list(range(20))
    assert ordered_map(lambda x: x * x, items) == [x * x for x in items]
    assert ordered_map(lambda x: x * x, iter(items), workers=4) == [x * x for x in items]
    assert ordered_map(str, [], workers=4) == []
    # worker count from the environment
    monkeypatch.setenv(WORKERS_ENV, "3")
    threads = ordered_map(lambda _: get_ident(), range(8))
    assert len(threads) == 8
    assert ordered_map(lambda x: -x, [5]) == [-5]
