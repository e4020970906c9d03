# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Local-global attention blocks.

A block first runs multi-head local attention (MHLA) inside non-overlapping
f×h×w windows of the token grid, then multi-head global attention (MHGA) in
which every token queries one pooled token per window, followed by an MLP.
The CLS token skips local attention and takes part in global attention both
as a query and as an extra key/value appended after the pooled tokens.
"""
from collections import namedtuple, OrderedDict
from logging import getLogger

from ..common.exceptions import ConfigError, DimensionError, WindowSpecError
from .params import INIT_FAN_IN, INIT_ONES, INIT_ZEROS, ParamSpec

__all__ = (
    "AttentionParams", "BlockParams", "full_block", "full_space_time_attention",
    "FullBlockParams", "logo_block", "merge", "mhga", "mhla", "MlpParams", "mlp_residual",
    "multi_head_attention", "partition", "PoolParams", "POOL_MODES", "window_pool", "WindowSpec")

LOG = getLogger(__name__)

POOL_AVERAGE = "average"
POOL_LEARNED = "learned"
POOL_MODES = (POOL_AVERAGE, POOL_LEARNED)

# per-head projections are stored (heads, d, D_h); wq[h] is head h's W_Q
AttentionParams = namedtuple("AttentionParams", "wq wk wv wo ln_gain ln_bias")
MlpParams = namedtuple("MlpParams", "w1 b1 w2 b2 ln_gain ln_bias")
# weight and bias are None in average mode
PoolParams = namedtuple("PoolParams", "mode weight bias")
BlockParams = namedtuple("BlockParams", "local_attn global_attn pool mlp")
FullBlockParams = namedtuple("FullBlockParams", "attn mlp")


class WindowSpec(namedtuple("WindowSpec", "f h w")):
    """Window extents: f frames by h×w cells."""
    __slots__ = ()

    @property
    def size(self):
        """Tokens per window."""
        return self.f * self.h * self.w

    def check(self, F, H, W):
        """Verify the window tiles an F×H×W grid exactly.

        Args:
            F (int): Frames.
            H (int): Grid height.
            W (int): Grid width.

        Returns:
            None
        """
        for axis, window, extent in (("f", self.f, F), ("h", self.h, H), ("w", self.w, W)):
            if window < 1:
                raise WindowSpecError("window extent %s=%d must be positive" % (axis, window), axis)
            if extent % window:
                raise WindowSpecError(
                    "window extent %s=%d does not divide grid extent %d" % (axis, window, extent),
                    axis)

    def count(self, F, H, W):
        """Number of windows covering an F×H×W grid."""
        self.check(F, H, W)
        return (F // self.f) * (H // self.h) * (W // self.w)


def attention_param_specs(prefix, d, heads):
    if heads < 1 or d % heads:
        raise ConfigError("d=%d is not divisible by heads=%d" % (d, heads))
    head_dim = d // heads
    specs = OrderedDict()
    for role in ("wq", "wk", "wv"):
        specs[prefix + role] = ParamSpec((heads, d, head_dim), INIT_FAN_IN)
    specs[prefix + "wo"] = ParamSpec((d, d), INIT_FAN_IN)
    specs[prefix + "ln_gain"] = ParamSpec((d,), INIT_ONES)
    specs[prefix + "ln_bias"] = ParamSpec((d,), INIT_ZEROS)
    return specs


def mlp_param_specs(prefix, d):
    specs = OrderedDict()
    specs[prefix + "w1"] = ParamSpec((d, 4 * d), INIT_FAN_IN)
    specs[prefix + "b1"] = ParamSpec((4 * d,), INIT_ZEROS)
    specs[prefix + "w2"] = ParamSpec((4 * d, d), INIT_FAN_IN)
    specs[prefix + "b2"] = ParamSpec((d,), INIT_ZEROS)
    specs[prefix + "ln_gain"] = ParamSpec((d,), INIT_ONES)
    specs[prefix + "ln_bias"] = ParamSpec((d,), INIT_ZEROS)
    return specs


def pool_param_specs(prefix, d, spec, mode):
    if mode not in POOL_MODES:
        raise ConfigError("pool_mode must be one of %s, got %r" % (", ".join(POOL_MODES), mode))
    specs = OrderedDict()
    if mode == POOL_LEARNED:
        specs[prefix + "weight"] = ParamSpec((spec.size * d, d), INIT_FAN_IN)
        specs[prefix + "bias"] = ParamSpec((d,), INIT_ZEROS)
    return specs


def partition(eng, grid, spec):
    """Split the non-CLS tokens into windows.

    Window order is row-major over (frame block, row block, column block);
    token order inside a window is row-major over (frame, row, column).

    Args:
        eng (Engine): Engine to execute on.
        grid (TokenGrid): Tokens to split.
        spec (WindowSpec): Window extents.

    Returns:
        Tensor: Window blocks stacked on the first axis, shape (windows, f·h·w, d).
    """
    spec.check(grid.F, grid.H, grid.W)
    f, h, w = spec
    d = grid.d
    x = eng.reshape(
        grid.spatial(eng), (grid.F // f, f, grid.H // h, h, grid.W // w, w, d))
    x = eng.transpose(x, (0, 2, 4, 1, 3, 5, 6))
    return eng.reshape(x, (spec.count(grid.F, grid.H, grid.W), spec.size, d))


def merge(eng, windows, grid, spec):
    """Inverse of partition(). The CLS row is taken from `grid`.

    Args:
        eng (Engine): Engine to execute on.
        windows (Tensor): Shape (windows, f·h·w, d).
        grid (TokenGrid): Provides geometry and the CLS row.
        spec (WindowSpec): Window extents used by partition().

    Returns:
        TokenGrid: Tokens in grid order.
    """
    spec.check(grid.F, grid.H, grid.W)
    f, h, w = spec
    d = windows.shape[-1]
    if windows.shape != (spec.count(grid.F, grid.H, grid.W), spec.size, d):
        raise DimensionError("windows %r do not match grid with window %r" % (windows.shape, spec))
    x = eng.reshape(windows, (grid.F // f, grid.H // h, grid.W // w, f, h, w, d))
    x = eng.transpose(x, (0, 3, 1, 4, 2, 5, 6))
    x = eng.reshape(x, (grid.spatial_count, d))
    return grid.replace(eng.concat([grid.cls(eng), x], axis=0))


def _heads(eng, x, weight):
    # (..., L, d) @ (heads, d, D_h) -> (..., heads, L, D_h)
    shape = x.shape
    return eng.matmul(eng.reshape(x, shape[:-2] + (1,) + shape[-2:]), weight)


def multi_head_attention(eng, queries, keys, params, cls_queries=0, cls_keys=0):
    """MSA(queries, keys): per-head scaled dot-product attention, heads
    concatenated and passed through W_O.

    Args:
        eng (Engine): Engine to execute on.
        queries (Tensor): Normalized query tokens, shape (..., Lq, d).
        keys (Tensor): Normalized key/value tokens, shape (..., Lk, d).
        params (AttentionParams): Projection weights.
        cls_queries (int): Query rows that are CLS tokens.
        cls_keys (int): Key rows that are CLS tokens.

    Returns:
        Tensor: Shape (..., Lq, d).
    """
    heads, d, head_dim = params.wq.shape
    if queries.shape[-1] != d or keys.shape[-1] != d:
        raise DimensionError(
            "attention width %d does not match tokens %r/%r" % (d, queries.shape, keys.shape))
    out = eng.scaled_dot_product(
        _heads(eng, queries, params.wq),
        _heads(eng, keys, params.wk),
        _heads(eng, keys, params.wv),
        cls_queries=cls_queries,
        cls_keys=cls_keys)
    # (..., heads, Lq, D_h) -> (..., Lq, heads·D_h)
    lead = out.ndim - 3
    out = eng.transpose(out, tuple(range(lead)) + (lead + 1, lead, lead + 2))
    out = eng.reshape(out, out.shape[:-2] + (heads * head_dim,))
    return eng.matmul(out, params.wo)


def mhla(eng, grid, params, spec):
    """Multi-head local attention: Y = X + MSA(LN X) inside every window.
    The CLS token passes through unchanged.

    Args:
        eng (Engine): Engine to execute on.
        grid (TokenGrid): Block input.
        params (AttentionParams): Local attention parameters.
        spec (WindowSpec): Window extents.

    Returns:
        TokenGrid: Block intermediate Y.
    """
    windows = partition(eng, grid, spec)
    normed = eng.layer_norm(windows, params.ln_gain, params.ln_bias)
    attended = eng.add(windows, multi_head_attention(eng, normed, normed, params))
    return merge(eng, attended, grid, spec)


def window_pool(eng, grid, spec, params):
    """One abstract token per window; the CLS token is not pooled.

    Average mode takes the arithmetic mean of the window's tokens. Learned mode
    applies one shared affine map to the concatenated window tokens.

    Args:
        eng (Engine): Engine to execute on.
        grid (TokenGrid): Tokens to pool.
        spec (WindowSpec): Window extents.
        params (PoolParams): Pooling mode and weights.

    Returns:
        Tensor: Shape (windows, d).
    """
    windows = partition(eng, grid, spec)
    if params.mode == POOL_AVERAGE:
        return eng.mean(windows, axis=1)
    if params.mode == POOL_LEARNED:
        count, size, d = windows.shape
        flat = eng.reshape(windows, (count, size * d))
        return eng.add(eng.matmul(flat, params.weight), params.bias)
    raise ConfigError("pool_mode must be one of %s, got %r" % (", ".join(POOL_MODES), params.mode))


def mlp_residual(eng, tokens, params):
    """X + MLP(LN X) with a GELU hidden layer."""
    normed = eng.layer_norm(tokens, params.ln_gain, params.ln_bias)
    hidden = eng.gelu(eng.add(eng.matmul(normed, params.w1), params.b1))
    return eng.add(tokens, eng.add(eng.matmul(hidden, params.w2), params.b2))


def mhga(eng, grid, params, spec):
    """Multi-head global attention followed by the block MLP.

    Queries come from every token of LN(Y), CLS included. Keys and values come
    from LN of the pooled window tokens with the CLS token appended.

    Args:
        eng (Engine): Engine to execute on.
        grid (TokenGrid): Output of mhla().
        params (BlockParams): Block parameters (global_attn, pool and mlp are used).
        spec (WindowSpec): Window extents.

    Returns:
        TokenGrid: Block output.
    """
    attn = params.global_attn
    tokens = grid.tokens
    pooled = eng.concat([window_pool(eng, grid, spec, params.pool), grid.cls(eng)], axis=0)
    queries = eng.layer_norm(tokens, attn.ln_gain, attn.ln_bias)
    keys = eng.layer_norm(pooled, attn.ln_gain, attn.ln_bias)
    tokens = eng.add(
        tokens, multi_head_attention(eng, queries, keys, attn, cls_queries=1, cls_keys=1))
    return grid.replace(mlp_residual(eng, tokens, params.mlp))


def logo_block(eng, grid, params, spec):
    return mhga(eng, mhla(eng, grid, params.local_attn, spec), params, spec)


def full_space_time_attention(eng, grid, params, include_cls=True):
    """X + MSA(LN X) where every token attends to every token.

    Args:
        eng (Engine): Engine to execute on.
        grid (TokenGrid): Input tokens.
        params (AttentionParams): Attention parameters.
        include_cls (bool): Attend over the CLS token too. When False the CLS
                            token passes through unchanged.

    Returns:
        TokenGrid: Attended tokens.
    """
    if include_cls:
        tokens = grid.tokens
        normed = eng.layer_norm(tokens, params.ln_gain, params.ln_bias)
        out = multi_head_attention(eng, normed, normed, params, cls_queries=1, cls_keys=1)
        return grid.replace(eng.add(tokens, out))
    tokens = grid.spatial(eng)
    normed = eng.layer_norm(tokens, params.ln_gain, params.ln_bias)
    tokens = eng.add(tokens, multi_head_attention(eng, normed, normed, params))
    return grid.replace(eng.concat([grid.cls(eng), tokens], axis=0))


def full_block(eng, grid, params):
    """Joint space-time attention over all tokens followed by the MLP."""
    attended = full_space_time_attention(eng, grid, params.attn)
    return grid.replace(mlp_residual(eng, attended.tokens, params.mlp))
