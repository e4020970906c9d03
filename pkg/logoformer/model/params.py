# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Parameter declarations and deterministic initialization."""
from collections import namedtuple, OrderedDict

import numpy as np

__all__ = ("initialize", "ParamSpec", "INIT_FAN_IN", "INIT_NORMAL", "INIT_ONES", "INIT_ZEROS")

INIT_FAN_IN = "fan_in"  # uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), fan_in = shape[-2]
INIT_NORMAL = "normal"  # normal(0, NORMAL_SCALE)
INIT_ONES = "ones"
INIT_ZEROS = "zeros"

NORMAL_SCALE = 0.02

ParamSpec = namedtuple("ParamSpec", "shape init")


def initialize(specs, rng):
    """Draw initial values for every declared parameter, in declaration order.

    Args:
        specs (OrderedDict(str, ParamSpec)): Parameter declarations.
        rng (numpy.random.Generator): Source of randomness.

    Returns:
        OrderedDict(str, numpy.ndarray): Initial parameter values.
    """
    params = OrderedDict()
    for name, spec in specs.items():
        if spec.init == INIT_FAN_IN:
            bound = 1.0 / np.sqrt(spec.shape[-2])
            value = rng.uniform(-bound, bound, size=spec.shape)
        elif spec.init == INIT_NORMAL:
            value = rng.normal(0.0, NORMAL_SCALE, size=spec.shape)
        elif spec.init == INIT_ONES:
            value = np.ones(spec.shape)
        elif spec.init == INIT_ZEROS:
            value = np.zeros(spec.shape)
        else:  # pragma: no cover
            raise AssertionError("unknown init %r" % (spec.init,))
        params[name] = value.astype(np.float64)
    return params
