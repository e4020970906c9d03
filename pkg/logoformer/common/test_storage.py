# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""test checkpoint codec"""
from collections import OrderedDict
from struct import pack

import numpy as np
from pytest import raises

from .exceptions import CheckpointFormatError
from .storage import checkpoint_size, decode_checkpoint, read_checkpoint, write_checkpoint


def _tensors():
    tensors = OrderedDict()
    tensors["a"] = np.arange(6, dtype=np.float64).reshape(2, 3) / 7.0
    tensors["b.c"] = np.array([np.pi])
    tensors["scalar"] = np.array(-0.0)
    return tensors


def test_storage_01(tmp_path):
    """test write_checkpoint() and read_checkpoint()"""
    path = str(tmp_path / "m.lgfm")
    items = [("F", 2), ("window", (1, 1, 1)), ("lr", 0.001)]
    size = write_checkpoint(path, items, _tensors())
    assert size == (tmp_path / "m.lgfm").stat().st_size
    assert size == checkpoint_size(items, {k: v.shape for k, v in _tensors().items()})
    raw_items, tensors = read_checkpoint(path)
    assert raw_items == [("F", "2"), ("window", "1,1,1"), ("lr", "0.001")]
    assert list(tensors) == ["a", "b.c", "scalar"]
    for name, value in _tensors().items():
        assert tensors[name].shape == value.shape
        assert tensors[name].tobytes() == value.tobytes()
    # no temporary files left behind
    assert [x.name for x in tmp_path.iterdir()] == ["m.lgfm"]


def test_storage_02(tmp_path):
    """test byte layout"""
    path = tmp_path / "m.lgfm"
    write_checkpoint(str(path), [("N", 1)], OrderedDict([("w", np.array([1.5, -2.0]))]))
    expected = b"".join([
        b"LGFM", pack("<I", 1), pack("<I", 3), b"N=1", pack("<I", 1),
        pack("<H", 1), b"w", pack("<B", 1), pack("<Q", 2), pack("<2d", 1.5, -2.0)])
    assert path.read_bytes() == expected


def test_storage_03(tmp_path):
    """test decode_checkpoint() errors carry byte offsets"""
    path = str(tmp_path / "m.lgfm")
    write_checkpoint(path, [("N", 1)], _tensors())
    with open(path, "rb") as in_fp:
        data = in_fp.read()
    # bad magic
    with raises(CheckpointFormatError, match="bad magic") as exc:
        decode_checkpoint(b"XGFM" + data[4:])
    assert exc.value.offset == 0
    # bad version
    with raises(CheckpointFormatError, match="unsupported version 2") as exc:
        decode_checkpoint(data[:4] + pack("<I", 2) + data[8:])
    assert exc.value.offset == 4
    # truncation at every prefix length
    for length in range(len(data)):
        with raises(CheckpointFormatError, match="truncated|bad magic"):
            decode_checkpoint(data[:length])
    # trailing bytes
    with raises(CheckpointFormatError, match="trailing data") as exc:
        decode_checkpoint(data + b"\x00")
    assert exc.value.offset == len(data)
    assert "at byte offset %d" % (len(data),) in str(exc.value)


def test_storage_04():
    """test decode_checkpoint() malformed config blob"""
    blob = b"no separator"
    data = b"LGFM" + pack("<I", 1) + pack("<I", len(blob)) + blob + pack("<I", 0)
    with raises(CheckpointFormatError, match="expected 'key = value'") as exc:
        decode_checkpoint(data)
    assert exc.value.offset == 12
    blob = b"\xff\xfe"
    data = b"LGFM" + pack("<I", 1) + pack("<I", len(blob)) + blob + pack("<I", 0)
    with raises(CheckpointFormatError, match="invalid UTF-8"):
        decode_checkpoint(data)


def test_storage_05():
    """test checkpoint_size()"""
    # 16 fixed bytes, 3 byte blob, then 3 + 1 + 8 * 2 + 8 * 6
    assert checkpoint_size([("N", 1)], {"w": (2, 3)}) == 16 + 3 + 3 + 1 + 16 + 48
    assert checkpoint_size([], {}) == 16
