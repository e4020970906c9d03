# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Minimal dense tensor engine.

Tensors wrap 64-bit float numpy buffers. Operations are methods of an `Engine`
which owns a `Tape` (reverse-mode gradient record) and the cost counters used
to account for attention work:

    pair_count      (query, key) pairs entering a scaled dot-product,
                    excluding pairs that involve the CLS token
    cls_pair_count  pairs that involve the CLS token
    mac_count       scalar multiply-accumulates performed by matmul
"""
from collections import namedtuple
from logging import getLogger
from math import sqrt

import numpy as np

from .exceptions import ContractError, DimensionError, NumericInputError, TapeError

__all__ = ("backward", "CostCounter", "Engine", "Tape", "Tensor")

LOG = getLogger(__name__)

GELU_C = sqrt(2.0 / np.pi)

CostCounter = namedtuple("CostCounter", "pair_count mac_count cls_pair_count")
CostCounter.__new__.__defaults__ = (0,)

_Node = namedtuple("_Node", "kind inputs saved vjp")


def _unbroadcast(grad, shape):
    """Sum `grad` over the axes that were broadcast to produce it from `shape`.

    Args:
        grad (numpy.ndarray): Gradient with the broadcast shape.
        shape (tuple(int)): Shape of the original operand.

    Returns:
        numpy.ndarray: Gradient with shape `shape`.
    """
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor(object):
    """Immutable n-dimensional array of 64-bit floats, optionally attached to a tape.

    Attributes:
        data (numpy.ndarray): Read-only row-major buffer.
        grad_id (int): Tape node identifier or None when untraced.
        tape (Tape): Tape that recorded this tensor or None.
    """
    __slots__ = ("data", "grad_id", "tape")

    def __init__(self, data, tape=None, grad_id=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.data.flags.writeable = False
        self.grad_id = grad_id
        self.tape = tape

    def __repr__(self):
        return "Tensor(shape=%r, grad_id=%r)" % (self.shape, self.grad_id)

    def item(self):
        return float(self.data.reshape(-1)[0])

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    @property
    def traced(self):
        return self.grad_id is not None


class Tape(object):
    """Ordered record of traced operations. Node inputs always reference earlier
    nodes, so the node list is a topological order.
    """
    __slots__ = ("frozen", "nodes")

    def __init__(self):
        self.frozen = False
        self.nodes = []

    def __len__(self):
        return len(self.nodes)

    def record(self, kind, inputs=(), saved=None, vjp=None):
        """Append a node to the tape.

        Args:
            kind (str): Operation name.
            inputs (tuple(int)): Node ids of the inputs (None for untraced inputs).
            saved (object): Forward values kept for inspection.
            vjp (callable): Maps the output gradient to a tuple of input gradients.
                            None for leaves.

        Returns:
            int: Identifier of the new node.
        """
        if self.frozen:
            raise TapeError("cannot record %r on a frozen tape" % (kind,))
        node_id = len(self.nodes)
        assert all(x is None or x < node_id for x in inputs)
        self.nodes.append(_Node(kind, tuple(inputs), saved, vjp))
        return node_id


def backward(tape, output):
    """Reverse-mode accumulation of d(output)/d(leaf) for every traced leaf.

    The tape is frozen afterwards.

    Args:
        tape (Tape): Tape that recorded `output`.
        output (Tensor): Scalar result.

    Returns:
        dict(int, Tensor): Gradient of `output` for each leaf node id reached.
    """
    if output.size != 1:
        raise ContractError("backward requires a scalar output, got shape %r" % (output.shape,))
    if tape is None or output.tape is not tape or output.grad_id is None:
        raise TapeError("output was not recorded on this tape")
    tape.frozen = True
    grads = {output.grad_id: np.ones(output.shape)}
    leaves = {}
    for node_id in range(output.grad_id, -1, -1):
        grad = grads.pop(node_id, None)
        if grad is None:
            continue
        node = tape.nodes[node_id]
        if node.vjp is None:
            leaves[node_id] = Tensor(grad)
            continue
        for input_id, input_grad in zip(node.inputs, node.vjp(grad)):
            if input_id is None or input_grad is None:
                continue
            if input_id in grads:
                grads[input_id] = grads[input_id] + input_grad
            else:
                grads[input_id] = input_grad
    return leaves


class Engine(object):
    """Executes tensor operations, recording them on a tape when tracing.

    An Engine (and its tape) is a single-owner unit. Use one Engine per
    forward/backward pass; independent engines share no state.
    """
    __slots__ = ("_cls_pairs", "_macs", "_pairs", "tape")

    def __init__(self, trace=True):
        self.tape = Tape() if trace else None
        self._cls_pairs = 0
        self._macs = 0
        self._pairs = 0

    def backward(self, output):
        return backward(self.tape, output)

    def cost_snapshot(self):
        """Current cost counter values.

        Args:
            None

        Returns:
            CostCounter: Counters accumulated since creation or the last reset.
        """
        return CostCounter(self._pairs, self._macs, self._cls_pairs)

    def count_pairs(self, pairs, cls_pairs=0):
        assert pairs >= 0 and cls_pairs >= 0
        self._pairs += pairs
        self._cls_pairs += cls_pairs

    def reset_costs(self):
        self._cls_pairs = 0
        self._macs = 0
        self._pairs = 0

    def _result(self, kind, value, inputs, vjp, saved=None):
        ids = tuple(x.grad_id for x in inputs)
        if self.tape is None or all(x is None for x in ids):
            return Tensor(value)
        for tensor in inputs:
            if tensor.grad_id is not None and tensor.tape is not self.tape:
                raise TapeError("%s input was recorded on a different tape" % (kind,))
        return Tensor(value, self.tape, self.tape.record(kind, ids, saved, vjp))

    def constant(self, data):
        """Untraced tensor holding a copy of `data`."""
        return Tensor(np.array(data, dtype=np.float64))

    def leaf(self, data):
        """Traced leaf tensor holding a copy of `data`. Untraced when the engine
        has no tape.
        """
        tensor = self.constant(data)
        if self.tape is not None:
            tensor.tape = self.tape
            tensor.grad_id = self.tape.record("leaf", saved=tensor.shape)
        return tensor

    def add(self, a, b):
        try:
            value = a.data + b.data
        except ValueError:
            raise DimensionError("cannot add shapes %r and %r" % (a.shape, b.shape)) from None

        def vjp(grad):
            return _unbroadcast(grad, a.shape), _unbroadcast(grad, b.shape)
        return self._result("add", value, (a, b), vjp)

    def sub(self, a, b):
        try:
            value = a.data - b.data
        except ValueError:
            raise DimensionError("cannot subtract shapes %r and %r" % (a.shape, b.shape)) from None

        def vjp(grad):
            return _unbroadcast(grad, a.shape), _unbroadcast(-grad, b.shape)
        return self._result("sub", value, (a, b), vjp)

    def mul(self, a, b):
        try:
            value = a.data * b.data
        except ValueError:
            raise DimensionError("cannot multiply shapes %r and %r" % (a.shape, b.shape)) from None

        def vjp(grad):
            return _unbroadcast(grad * b.data, a.shape), _unbroadcast(grad * a.data, b.shape)
        return self._result("mul", value, (a, b), vjp)

    def scale(self, a, factor):
        factor = float(factor)
        return self._result("scale", a.data * factor, (a,), lambda grad: (grad * factor,))

    def matmul(self, a, b):
        """Matrix product over the last two axes. Leading axes broadcast.

        Adds (leading extent product)·m·n·k to the MAC counter.

        Args:
            a (Tensor): Shape (..., m, k).
            b (Tensor): Shape (..., k, n).

        Returns:
            Tensor: Shape (..., m, n).
        """
        if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
            raise DimensionError("matmul shape mismatch: %r by %r" % (a.shape, b.shape))
        try:
            lead = np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
        except ValueError:
            raise DimensionError("matmul shape mismatch: %r by %r" % (a.shape, b.shape)) from None
        m, k = a.shape[-2:]
        n = b.shape[-1]
        self._macs += int(np.prod(lead, dtype=np.int64)) * m * n * k
        value = np.matmul(a.data, b.data)

        def vjp(grad):
            grad_a = _unbroadcast(np.matmul(grad, np.swapaxes(b.data, -1, -2)), a.shape)
            grad_b = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), grad), b.shape)
            return grad_a, grad_b
        return self._result("matmul", value, (a, b), vjp, saved=(a.shape, b.shape))

    def reshape(self, a, shape):
        try:
            value = a.data.reshape(shape)
        except ValueError:
            raise DimensionError("cannot reshape %r to %r" % (a.shape, tuple(shape))) from None
        return self._result("reshape", value, (a,), lambda grad: (grad.reshape(a.shape),))

    def transpose(self, a, axes):
        axes = tuple(axes)
        inverse = tuple(np.argsort(axes))
        return self._result(
            "transpose", a.data.transpose(axes), (a,), lambda grad: (grad.transpose(inverse),))

    def concat(self, tensors, axis=0):
        tensors = tuple(tensors)
        try:
            value = np.concatenate([x.data for x in tensors], axis=axis)
        except ValueError:
            raise DimensionError(
                "cannot concatenate shapes %s" % (", ".join(repr(x.shape) for x in tensors),)) from None
        splits = np.cumsum([x.shape[axis] for x in tensors])[:-1]

        def vjp(grad):
            return tuple(np.split(grad, splits, axis=axis))
        return self._result("concat", value, tensors, vjp)

    def take(self, a, indices, axis=0):
        """Select entries along `axis` (order preserved, repeats allowed)."""
        indices = np.asarray(indices, dtype=np.intp)
        assert indices.ndim == 1
        if indices.size and (indices.min() < 0 or indices.max() >= a.shape[axis]):
            raise DimensionError("take indices out of range for axis %d of %r" % (axis, a.shape))
        value = np.take(a.data, indices, axis=axis)

        def vjp(grad):
            full = np.zeros(a.shape)
            np.add.at(np.moveaxis(full, axis, 0), indices, np.moveaxis(grad, axis, 0))
            return (full,)
        return self._result("take", value, (a,), vjp)

    def sum(self, a, axis=None, keepdims=False):
        value = a.data.sum(axis=axis, keepdims=keepdims)

        def vjp(grad):
            if axis is not None and not keepdims:
                grad = np.expand_dims(grad, axis)
            return (np.broadcast_to(grad, a.shape),)
        return self._result("sum", value, (a,), vjp)

    def mean(self, a, axis=None, keepdims=False):
        count = a.size if axis is None else a.shape[axis]
        return self.scale(self.sum(a, axis=axis, keepdims=keepdims), 1.0 / count)

    def softmax(self, x, axis=-1):
        """Numerically stable softmax (row maximum subtracted before exp)."""
        if not np.all(np.isfinite(x.data)):
            raise NumericInputError("softmax requires finite input")
        shifted = np.exp(x.data - x.data.max(axis=axis, keepdims=True))
        value = shifted / shifted.sum(axis=axis, keepdims=True)

        def vjp(grad):
            return (value * (grad - (grad * value).sum(axis=axis, keepdims=True)),)
        return self._result("softmax", value, (x,), vjp)

    def log_softmax(self, x, axis=-1):
        """Log-softmax via log-sum-exp."""
        if not np.all(np.isfinite(x.data)):
            raise NumericInputError("log_softmax requires finite input")
        shifted = x.data - x.data.max(axis=axis, keepdims=True)
        value = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

        def vjp(grad):
            return (grad - np.exp(value) * grad.sum(axis=axis, keepdims=True),)
        return self._result("log_softmax", value, (x,), vjp)

    def layer_norm(self, x, gain, bias, eps=1e-5):
        """Normalize each token (last axis) to zero mean and unit population
        variance, then scale by `gain` and shift by `bias`.
        """
        width = x.shape[-1]
        if gain.shape != (width,) or bias.shape != (width,):
            raise DimensionError(
                "layer_norm shape mismatch: %r with gain %r and bias %r" % (
                    x.shape, gain.shape, bias.shape))
        centered = x.data - x.data.mean(axis=-1, keepdims=True)
        inv_std = 1.0 / np.sqrt((centered ** 2).mean(axis=-1, keepdims=True) + eps)
        normed = centered * inv_std
        value = normed * gain.data + bias.data

        def vjp(grad):
            lead = tuple(range(grad.ndim - 1))
            grad_normed = grad * gain.data
            grad_x = inv_std * (
                grad_normed
                - grad_normed.mean(axis=-1, keepdims=True)
                - normed * (grad_normed * normed).mean(axis=-1, keepdims=True))
            return grad_x, (grad * normed).sum(axis=lead), grad.sum(axis=lead)
        return self._result("layer_norm", value, (x, gain, bias), vjp)

    def gelu(self, x):
        """GELU activation, tanh form."""
        inner = GELU_C * (x.data + 0.044715 * x.data ** 3)
        tanh = np.tanh(inner)
        value = 0.5 * x.data * (1.0 + tanh)

        def vjp(grad):
            slope = 0.5 * (1.0 + tanh) + 0.5 * x.data * (1.0 - tanh ** 2) * GELU_C * (
                1.0 + 3 * 0.044715 * x.data ** 2)
            return (grad * slope,)
        return self._result("gelu", value, (x,), vjp)

    def scaled_dot_product(self, q, k, v, cls_queries=0, cls_keys=0):
        """softmax(Q·Kᵀ/√D_h)·V over the last two axes.

        The axis before the token axis is the head axis. Pairs are counted once per
        (query, key) regardless of the head count. `cls_queries` of the query rows
        and `cls_keys` of the key rows are CLS tokens; pairs that involve them are
        counted separately.

        Args:
            q (Tensor): Shape (..., heads, Lq, D_h).
            k (Tensor): Shape (..., heads, Lk, D_h).
            v (Tensor): Shape (..., heads, Lk, D_v).
            cls_queries (int): Number of CLS query rows.
            cls_keys (int): Number of CLS key rows.

        Returns:
            Tensor: Shape (..., heads, Lq, D_v).
        """
        if q.ndim < 3 or q.shape[-1] != k.shape[-1] or k.shape[-2] != v.shape[-2]:
            raise DimensionError(
                "attention shape mismatch: q %r, k %r, v %r" % (q.shape, k.shape, v.shape))
        n_queries, n_keys = q.shape[-2], k.shape[-2]
        groups = int(np.prod(q.shape[:-3], dtype=np.int64))
        total = groups * n_queries * n_keys
        plain = groups * (n_queries - cls_queries) * (n_keys - cls_keys)
        self.count_pairs(plain, total - plain)
        axes = tuple(range(k.ndim - 2)) + (k.ndim - 1, k.ndim - 2)
        scores = self.scale(self.matmul(q, self.transpose(k, axes)), 1.0 / sqrt(q.shape[-1]))
        return self.matmul(self.softmax(scores, axis=-1), v)
