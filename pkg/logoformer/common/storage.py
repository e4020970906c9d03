# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Checkpoint codec.

Layout (all integers little-endian):
    magic "LGFM" | u32 version (1) | u32 config length | UTF-8 key=value text
    | u32 tensor count | per tensor: u16 name length, UTF-8 name, u8 rank,
    rank x u64 extents, extent product x f64 (IEEE-754, row-major)
"""
from collections import OrderedDict
from logging import getLogger
from os import close, replace, unlink
from os.path import abspath, dirname
from struct import calcsize, pack, unpack_from
from tempfile import mkstemp

import numpy as np

from .config import format_items, parse_items
from .exceptions import CheckpointFormatError, ConfigError

__all__ = ("checkpoint_size", "decode_checkpoint", "read_checkpoint", "write_checkpoint", "MAGIC", "VERSION")

LOG = getLogger(__name__)

MAGIC = b"LGFM"
VERSION = 1


def _encode(items, tensors):
    blob = format_items(items).encode("utf-8")
    chunks = [MAGIC, pack("<I", VERSION), pack("<I", len(blob)), blob, pack("<I", len(tensors))]
    for name, array in tensors.items():
        array = np.asarray(array, dtype=np.float64)
        raw_name = name.encode("utf-8")
        chunks.append(pack("<H", len(raw_name)))
        chunks.append(raw_name)
        chunks.append(pack("<B", array.ndim))
        chunks.append(pack("<%dQ" % (array.ndim,), *array.shape))
        chunks.append(np.ascontiguousarray(array).astype("<f8").tobytes())
    return b"".join(chunks)


def checkpoint_size(items, shapes):
    """Exact byte length of a checkpoint.

    Args:
        items (iterable(tuple(str, object))): Config pairs.
        shapes (dict(str, tuple(int))): Tensor name to shape.

    Returns:
        int: Size in bytes.
    """
    size = 16 + len(format_items(items).encode("utf-8"))
    for name, shape in shapes.items():
        size += 3 + len(name.encode("utf-8")) + 8 * len(shape) + 8 * int(np.prod(shape, dtype=np.int64))
    return size


def write_checkpoint(path, items, tensors):
    """Write config pairs and named tensors to `path`. The file is replaced
    atomically.

    Args:
        path (str): Destination file.
        items (iterable(tuple(str, object))): Config pairs.
        tensors (OrderedDict(str, numpy.ndarray)): Tensors in storage order.

    Returns:
        int: Number of bytes written.
    """
    data = _encode(list(items), tensors)
    tfd, tmp_path = mkstemp(dir=dirname(abspath(path)), prefix="lgfm_", suffix=".tmp")
    close(tfd)
    try:
        with open(tmp_path, "wb") as out_fp:
            out_fp.write(data)
        replace(tmp_path, path)
    except OSError:
        try:
            unlink(tmp_path)
        except OSError:  # pragma: no cover
            pass
        raise
    LOG.debug("wrote %d bytes (%d tensors) to %r", len(data), len(tensors), path)
    return len(data)


class _Reader(object):
    __slots__ = ("data", "offset")

    def __init__(self, data):
        self.data = data
        self.offset = 0

    def unpack(self, fmt, what):
        size = calcsize(fmt)
        if self.offset + size > len(self.data):
            raise CheckpointFormatError("truncated %s" % (what,), self.offset)
        values = unpack_from(fmt, self.data, self.offset)
        self.offset += size
        return values

    def read(self, size, what):
        if self.offset + size > len(self.data):
            raise CheckpointFormatError("truncated %s" % (what,), self.offset)
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def text(self, size, what):
        start = self.offset
        try:
            return self.read(size, what).decode("utf-8")
        except UnicodeDecodeError:
            raise CheckpointFormatError("invalid UTF-8 in %s" % (what,), start) from None


def decode_checkpoint(data):
    """Decode checkpoint bytes.

    Args:
        data (bytes): Raw checkpoint.

    Returns:
        tuple(list(tuple(str, str)), OrderedDict(str, numpy.ndarray)):
            Raw config pairs and tensors in storage order.
    """
    reader = _Reader(data)
    if reader.read(len(MAGIC), "magic") != MAGIC:
        raise CheckpointFormatError("bad magic bytes", 0)
    (version,) = reader.unpack("<I", "version")
    if version != VERSION:
        raise CheckpointFormatError("unsupported version %d" % (version,), reader.offset - 4)
    (blob_len,) = reader.unpack("<I", "config length")
    blob_start = reader.offset
    try:
        items = parse_items(reader.text(blob_len, "config"), source="checkpoint config")
    except ConfigError as exc:
        raise CheckpointFormatError(exc.msg, blob_start) from None
    (count,) = reader.unpack("<I", "tensor count")
    tensors = OrderedDict()
    for _ in range(count):
        (name_len,) = reader.unpack("<H", "tensor name length")
        name = reader.text(name_len, "tensor name")
        (rank,) = reader.unpack("<B", "tensor rank")
        shape = reader.unpack("<%dQ" % (rank,), "tensor extents")
        size = int(np.prod(shape, dtype=np.int64))
        raw = reader.read(8 * size, "tensor %r data" % (name,))
        tensors[name] = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)
    if reader.offset != len(data):
        raise CheckpointFormatError("trailing data", reader.offset)
    return items, tensors


def read_checkpoint(path):
    """Read a checkpoint file written by write_checkpoint().

    Args:
        path (str): File to read.

    Returns:
        tuple(list(tuple(str, str)), OrderedDict(str, numpy.ndarray)):
            Raw config pairs and tensors in storage order.
    """
    with open(path, "rb") as in_fp:
        data = in_fp.read()
    LOG.debug("read %d bytes from %r", len(data), path)
    return decode_checkpoint(data)
