# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Token embedding: per-cell feature projection, factorized positional
embeddings and the CLS token.

Token order is fixed. The CLS token is row 0 and the token for frame `t`,
spatial cell `s` (row-major over H×W) is row 1 + t·H·W + s.
"""
from collections import namedtuple, OrderedDict

import numpy as np

from ..common.exceptions import ContractError, DimensionError
from .params import INIT_FAN_IN, INIT_NORMAL, INIT_ZEROS, ParamSpec

__all__ = ("assemble", "ClipFeatures", "embed_param_specs", "EmbedParams", "project", "TokenGrid")

EmbedParams = namedtuple(
    "EmbedParams", "proj_weight proj_bias spatial_pe temporal_pe cls_token cls_pe")


def embed_param_specs(F, H, W, C, d, prefix="embed."):
    """Declare embedding parameters.

    Args:
        F (int): Frames.
        H (int): Grid height.
        W (int): Grid width.
        C (int): Input channels per cell.
        d (int): Embedding width.
        prefix (str): Name prefix.

    Returns:
        OrderedDict(str, ParamSpec): Declarations in initialization order.
    """
    specs = OrderedDict()
    specs[prefix + "proj_weight"] = ParamSpec((C, d), INIT_FAN_IN)
    specs[prefix + "proj_bias"] = ParamSpec((d,), INIT_ZEROS)
    specs[prefix + "spatial_pe"] = ParamSpec((H * W, d), INIT_NORMAL)
    specs[prefix + "temporal_pe"] = ParamSpec((F, d), INIT_NORMAL)
    specs[prefix + "cls_token"] = ParamSpec((d,), INIT_NORMAL)
    specs[prefix + "cls_pe"] = ParamSpec((d,), INIT_NORMAL)
    return specs


class ClipFeatures(object):
    """Per-cell convolutional features of one clip, shape F×H×W×C."""
    __slots__ = ("data",)

    def __init__(self, data):
        data = np.array(data, dtype=np.float64)
        if data.ndim != 4:
            raise DimensionError("clip features must be F×H×W×C, got shape %r" % (data.shape,))
        if min(data.shape) < 1:
            raise DimensionError("clip extents must be positive, got %r" % (data.shape,))
        data.setflags(write=False)
        self.data = data

    @property
    def shape(self):
        return self.data.shape


class TokenGrid(object):
    """The (F·H·W + 1)×d token sequence of one clip plus its geometry.

    Attributes:
        tokens (Tensor): Token rows, CLS first.
        F (int): Frames.
        H (int): Grid height.
        W (int): Grid width.
    """
    __slots__ = ("F", "H", "W", "tokens")

    def __init__(self, tokens, F, H, W):
        if tokens.ndim != 2 or tokens.shape[0] != F * H * W + 1:
            raise DimensionError(
                "token grid %dx%dx%d requires %d rows, got shape %r" % (
                    F, H, W, F * H * W + 1, tokens.shape))
        self.F = F
        self.H = H
        self.W = W
        self.tokens = tokens

    @property
    def d(self):
        return self.tokens.shape[1]

    @property
    def spatial_count(self):
        """Number of non-CLS tokens."""
        return self.F * self.H * self.W

    def index(self, t, s):
        """Row of the token for frame `t` and spatial cell `s`."""
        if not (0 <= t < self.F and 0 <= s < self.H * self.W):
            raise ContractError("token position (%d, %d) outside grid" % (t, s))
        return 1 + t * self.H * self.W + s

    def position(self, row):
        """Inverse of index(). Returns (t, s), or None for the CLS row."""
        if not 0 <= row <= self.spatial_count:
            raise ContractError("token row %d outside grid" % (row,))
        if row == 0:
            return None
        return divmod(row - 1, self.H * self.W)

    def cls(self, eng):
        """CLS row, shape (1, d)."""
        return eng.take(self.tokens, [0])

    def spatial(self, eng):
        """Non-CLS rows, shape (F·H·W, d)."""
        return eng.take(self.tokens, np.arange(1, self.spatial_count + 1))

    def replace(self, tokens):
        return type(self)(tokens, self.F, self.H, self.W)


def project(eng, clip, params):
    """Linear projection of every cell's feature vector into the embedding width.

    Args:
        eng (Engine): Engine to execute on.
        clip (ClipFeatures): Input features.
        params (EmbedParams): Embedding parameters.

    Returns:
        Tensor: Shape (F, H·W, d).
    """
    F, H, W, C = clip.shape
    if params.proj_weight.shape[0] != C:
        raise DimensionError(
            "clip has %d channels, projection expects %d" % (C, params.proj_weight.shape[0]))
    cells = eng.constant(clip.data.reshape(F, H * W, C))
    return eng.add(eng.matmul(cells, params.proj_weight), params.proj_bias)


def assemble(eng, projected, params, H, W):
    """Add positional embeddings and prepend the CLS token.

    Token (t, s) receives spatial_pe[s] + temporal_pe[t]; the CLS token receives
    cls_token + cls_pe.

    Args:
        eng (Engine): Engine to execute on.
        projected (Tensor): Output of project(), shape (F, H·W, d).
        params (EmbedParams): Embedding parameters.
        H (int): Grid height.
        W (int): Grid width.

    Returns:
        TokenGrid: Assembled tokens.
    """
    F, cells, d = projected.shape
    if cells != H * W or params.spatial_pe.shape != (cells, d) \
            or params.temporal_pe.shape != (F, d):
        raise DimensionError(
            "positional embeddings %r/%r do not match projected tokens %r" % (
                params.spatial_pe.shape, params.temporal_pe.shape, projected.shape))
    tokens = eng.add(projected, params.spatial_pe)
    tokens = eng.add(tokens, eng.reshape(params.temporal_pe, (F, 1, d)))
    cls = eng.reshape(eng.add(params.cls_token, params.cls_pe), (1, d))
    tokens = eng.concat([cls, eng.reshape(tokens, (F * cells, d))], axis=0)
    return TokenGrid(tokens, F, H, W)
