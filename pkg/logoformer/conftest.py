# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Common unit test fixtures for `logoformer`."""
import numpy as np
import pytest

from .common.tensor import Engine
from .common.utils import WORKERS_ENV
from .model.attention import WindowSpec
from .model.core import ModelConfig
from .model.embedding import TokenGrid


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    """Keep parallel maps sequential unless a test asks otherwise."""
    monkeypatch.delenv(WORKERS_ENV, raising=False)


@pytest.fixture
def tiny_config():
    return ModelConfig(
        F=2, H=2, W=2, C=4, d=8, N=1, heads=2, window=WindowSpec(1, 2, 2), num_classes=3, seed=0)


@pytest.fixture
def random_grid():
    """Factory for a TokenGrid holding random untraced tokens."""
    def _grid(F, H, W, d, seed=0, eng=None):
        tokens = np.random.default_rng(seed).standard_normal((F * H * W + 1, d))
        if eng is None:
            eng = Engine(trace=False)
        return TokenGrid(eng.constant(tokens), F, H, W)
    return _grid


@pytest.fixture
def grad_check():
    """Return a function comparing reverse-mode gradients of a scalar function
    with central finite differences. It returns the largest violation of
    |a - n| <= rtol * max(|a|, |n|) + atol (<= 0 means every element passed).
    """
    def _check(build, arrays, step=1e-5, rtol=1e-4, atol=1e-8):
        arrays = [np.asarray(x, dtype=np.float64) for x in arrays]
        eng = Engine()
        leaves = [eng.leaf(x) for x in arrays]
        grads = eng.backward(build(eng, *leaves))
        worst = -np.inf
        for idx, array in enumerate(arrays):
            grad = grads.get(leaves[idx].grad_id)
            analytic = np.zeros(array.shape) if grad is None else grad.data
            numeric = np.zeros(array.shape)
            for flat in range(array.size):
                values = []
                for delta in (step, -step):
                    shifted = [x.copy() for x in arrays]
                    shifted[idx].flat[flat] += delta
                    plain = Engine(trace=False)
                    values.append(build(plain, *[plain.constant(x) for x in shifted]).item())
                numeric.flat[flat] = (values[0] - values[1]) / (2 * step)
            bound = rtol * np.maximum(np.abs(analytic), np.abs(numeric)) + atol
            worst = max(worst, float(np.max(np.abs(analytic - numeric) - bound)))
        return worst
    return _check
