# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Closed-form attention cost accounting.

Costs are counted in (query, key) token pairs, CLS excluded, and in scalar
multiply-accumulates (MACs). All arithmetic is exact integer arithmetic.
"""
from collections import namedtuple

from ..common.exceptions import DimensionError
from .attention import POOL_LEARNED, WindowSpec

__all__ = ("cost_report", "CostReport", "forward_macs", "forward_pairs")

ATTENTION_FULL = "full"
ATTENTION_LOGO = "logo"


class CostReport(namedtuple(
        "CostReport",
        "config cost_local cost_global cost_logo_total cost_full cost_spatial_only "
        "cost_divided cost_mixing")):
    """Per-block attention costs of one (F, H, W, f, h, w) configuration."""
    __slots__ = ()

    @property
    def ordering_ok(self):
        """Local-global attention is cheaper than divided space-time attention,
        which is cheaper than full space-time attention."""
        return self.cost_logo_total < self.cost_divided < self.cost_full


def cost_report(F, H, W, f, h, w):
    """Compute per-block attention costs.

    Args:
        F (int): Frames.
        H (int): Grid height.
        W (int): Grid width.
        f (int): Window frames.
        h (int): Window height.
        w (int): Window width.

    Returns:
        CostReport: Token-pair costs.
    """
    if min(F, H, W) < 1:
        raise DimensionError("grid extents must be positive, got %r" % ((F, H, W),))
    spec = WindowSpec(f, h, w)
    spec.check(F, H, W)
    tokens = F * H * W
    cells = H * W
    local = tokens * spec.size
    glob = tokens * tokens // spec.size
    return CostReport(
        config=(F, H, W, f, h, w),
        cost_local=local,
        cost_global=glob,
        cost_logo_total=local + glob,
        cost_full=tokens * tokens,
        cost_spatial_only=F * cells * cells,
        cost_divided=F * cells * cells + F * F * cells,
        cost_mixing=F * cells * cells)


def forward_pairs(config):
    """Token pairs of one model forward.

    Args:
        config (ModelConfig): Model configuration.

    Returns:
        tuple(int, int): (pairs excluding CLS, pairs involving CLS).
    """
    tokens = config.F * config.H * config.W
    if config.attention == ATTENTION_FULL:
        return config.N * tokens * tokens, config.N * (2 * tokens + 1)
    report = cost_report(config.F, config.H, config.W, *config.window)
    windows = tokens // config.window.size
    # CLS queries all windows plus itself; every token queries CLS
    return config.N * report.cost_logo_total, config.N * (tokens + windows + 1)


def forward_macs(config):
    """Multiply-accumulates of one model forward, embedding to logits.

    Args:
        config (ModelConfig): Model configuration.

    Returns:
        int: MAC count.
    """
    d = config.d
    spatial = config.F * config.H * config.W
    tokens = spatial + 1
    mlp = 8 * tokens * d * d
    if config.attention == ATTENTION_FULL:
        block = 4 * tokens * d * d + 2 * tokens * tokens * d + mlp
    else:
        size = config.window.size
        windows = spatial // size
        keys = windows + 1
        local = 4 * spatial * d * d + 2 * spatial * size * d
        glob = 2 * tokens * d * d + 2 * keys * d * d + 2 * tokens * keys * d
        pool = spatial * d * d if config.pool_mode == POOL_LEARNED else 0
        block = local + pool + glob + mlp
    return spatial * config.C * d + config.N * block + d * config.num_classes
