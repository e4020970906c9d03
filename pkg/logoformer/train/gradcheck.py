# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Compare analytic parameter gradients with central finite differences."""
from collections import namedtuple
from logging import getLogger

import numpy as np

from ..common.exceptions import ContractError
from ..common.table import format_table
from ..common.tensor import Engine
from ..model.attention import WindowSpec
from ..model.core import Model, ModelConfig
from .loss import total_loss
from .synthetic import generate, SyntheticSpec

__all__ = ("format_report", "gradcheck", "GradEntry", "GradReport", "relative_error", "TINY_CONFIG")

LOG = getLogger(__name__)

DEFAULT_STEP = 1e-5
DEFAULT_THRESHOLD = 1e-3
TINY_CONFIG = ModelConfig(
    F=2, H=2, W=2, C=4, d=8, N=1, heads=2, window=WindowSpec(1, 2, 2), num_classes=3, seed=0)

# worst_index is the flat index of the element with the largest error
GradEntry = namedtuple("GradEntry", "name size max_rel_error worst_index analytic numeric")
GradReport = namedtuple("GradReport", "entries max_rel_error worst")


def relative_error(analytic, numeric):
    """|a - n| / max(|a|, |n|, 1e-6), elementwise."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-6)
    return np.abs(analytic - numeric) / scale


def _loss(model, clip, label, lam, eng):
    logits = model.forward(clip, eng=eng, bound=model.bind(eng))
    return total_loss(eng, logits, label, lam)[0]


def gradcheck(config=TINY_CONFIG, names=None, lam=1.0, step=DEFAULT_STEP, data_seed=0):
    """Check d(total_loss)/d(parameter) for one synthetic clip.

    Args:
        config (ModelConfig): Model to check. Keep it small, every parameter
                              element costs two forward passes.
        names (iterable(str)): Parameters to check (default all).
        lam (float): Compact term weight.
        step (float): Central difference step.
        data_seed (int): Seed of the synthetic clip.

    Returns:
        GradReport: One entry per checked parameter tensor.
    """
    config.check()
    model = Model.init(config)
    spec = SyntheticSpec.for_model(config, {"clips_per_class": 1}, seed=data_seed)
    clip, label = generate(spec)[0]
    if names is None:
        names = list(model.params)
    else:
        names = list(names)
        for name in names:
            if name not in model.params:
                raise ContractError("unknown parameter %r" % (name,))
        if not names:
            raise ContractError("no parameters selected")

    eng = Engine()
    bound = model.bind(eng)
    loss = total_loss(eng, model.forward(clip, eng=eng, bound=bound), label, lam)[0]
    analytic = model.gradients(bound, eng.backward(loss))

    entries = []
    for name in names:
        original = model.params[name]
        numeric = np.zeros(original.shape)
        for index in range(original.size):
            values = []
            for delta in (step, -step):
                shifted = original.copy()
                shifted.flat[index] += delta
                model.assign(name, shifted)
                values.append(_loss(model, clip, label, lam, Engine(trace=False)).item())
            numeric.flat[index] = (values[0] - values[1]) / (2 * step)
        model.assign(name, original)
        errors = relative_error(analytic[name], numeric)
        worst = int(np.argmax(errors))
        entries.append(GradEntry(
            name=name, size=original.size, max_rel_error=float(errors.flat[worst]),
            worst_index=worst, analytic=float(analytic[name].flat[worst]),
            numeric=float(numeric.flat[worst])))
        LOG.debug("%s: max relative error %.3e", name, entries[-1].max_rel_error)
    worst = max(entries, key=lambda entry: entry.max_rel_error)
    return GradReport(entries=entries, max_rel_error=worst.max_rel_error, worst=worst.name)


def format_report(report):
    """Per-parameter table followed by the overall maximum.

    Args:
        report (GradReport): Result of gradcheck().

    Yields:
        str: Report lines.
    """
    rows = [(entry.name, entry.size, entry.max_rel_error) for entry in report.entries]
    for line in format_table(
            ("Parameter", "Size", "Max rel. error"), rows, (str, str, "{:.3e}".format)):
        yield line
    yield "Max relative error: %.3e (%s)" % (report.max_rel_error, report.worst)
