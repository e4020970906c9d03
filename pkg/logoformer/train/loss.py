# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Classification objective: cross-entropy plus a compactness term that pushes
the non-target class distribution towards uniform.
"""
from collections import namedtuple
from math import log

import numpy as np

from ..common.exceptions import ContractError

__all__ = ("compact_term", "cross_entropy", "LossBreakdown", "non_target_distribution", "total_loss")

# `lam` is the weight of the compact term ("lambda" is reserved)
LossBreakdown = namedtuple("LossBreakdown", "cross_entropy compact_term lam total")


def _check_target(logits, target):
    if logits.ndim != 1:
        raise ContractError("logits must be a vector, got shape %r" % (logits.shape,))
    if not 0 <= target < logits.shape[0]:
        raise ContractError("target %d out of range for %d classes" % (target, logits.shape[0]))


def cross_entropy(eng, logits, target):
    """-log softmax(logits)[target], computed with log-sum-exp.

    Args:
        eng (Engine): Engine to execute on.
        logits (Tensor): Shape (C,).
        target (int): Class index.

    Returns:
        Tensor: Scalar.
    """
    _check_target(logits, target)
    picked = eng.take(eng.log_softmax(logits), [target])
    return eng.scale(eng.reshape(picked, ()), -1.0)


def non_target_distribution(eng, logits, target):
    """Softmax over the logits of every class except `target`, order preserved.

    Args:
        eng (Engine): Engine to execute on.
        logits (Tensor): Shape (C,).
        target (int): Class index.

    Returns:
        Tensor: Shape (C-1,).
    """
    _check_target(logits, target)
    count = logits.shape[0]
    if count < 2:
        raise ContractError("at least two classes are required, got %d" % (count,))
    others = [index for index in range(count) if index != target]
    return eng.softmax(eng.take(logits, others))


def compact_term(eng, logits, target):
    """Symmetric KL divergence D(u'||p') + D(p'||u') between the uniform
    distribution u' over the C-1 non-target classes and the non-target
    distribution p'.

    Args:
        eng (Engine): Engine to execute on.
        logits (Tensor): Shape (C,).
        target (int): Class index.

    Returns:
        Tensor: Non-negative scalar, zero iff the non-target logits are equal.
    """
    _check_target(logits, target)
    count = logits.shape[0]
    if count < 2:
        raise ContractError("at least two classes are required, got %d" % (count,))
    others = eng.take(logits, [index for index in range(count) if index != target])
    log_p = eng.log_softmax(others)
    p = eng.softmax(others)
    uniform = 1.0 / (count - 1)
    log_u = eng.constant(np.full(count - 1, log(uniform)))
    # sum_c (p_c - u) * (log p_c - log u) == D(u||p) + D(p||u)
    diff = eng.mul(eng.sub(p, eng.constant(np.full(count - 1, uniform))), eng.sub(log_p, log_u))
    return eng.sum(diff)


def total_loss(eng, logits, target, lam=1.0):
    """cross_entropy + lam * compact_term.

    Args:
        eng (Engine): Engine to execute on.
        logits (Tensor): Shape (C,).
        target (int): Class index.
        lam (float): Non-negative compact term weight.

    Returns:
        tuple(Tensor, LossBreakdown): Differentiable total and float breakdown.
    """
    if lam < 0:
        raise ContractError("lambda must be non-negative, got %r" % (lam,))
    ce = cross_entropy(eng, logits, target)
    compact = compact_term(eng, logits, target)
    total = eng.add(ce, eng.scale(compact, lam))
    # rounding can leave the compact term a few ulps below zero
    compact_value = max(compact.item(), 0.0)
    breakdown = LossBreakdown(
        cross_entropy=ce.item(), compact_term=compact_value, lam=float(lam),
        total=ce.item() + float(lam) * compact_value)
    return total, breakdown
