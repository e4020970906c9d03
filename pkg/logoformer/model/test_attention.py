# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""test local-global attention"""
from collections import OrderedDict

import numpy as np
from pytest import mark, raises

from ..common.exceptions import ConfigError, DimensionError, WindowSpecError
from ..common.tensor import Engine
from ..common.utils import make_rng
from .attention import (
    attention_param_specs, AttentionParams, BlockParams, full_space_time_attention,
    logo_block, merge, mhga, mhla, mlp_param_specs, MlpParams, multi_head_attention,
    partition, pool_param_specs, PoolParams, window_pool, WindowSpec)
from .embedding import TokenGrid


def _block_arrays(d, heads, spec, mode="average", seed=0, scale=0.3):
    specs = OrderedDict()
    specs.update(attention_param_specs("local.", d, heads))
    specs.update(attention_param_specs("global.", d, heads))
    specs.update(pool_param_specs("pool.", d, spec, mode))
    specs.update(mlp_param_specs("mlp.", d))
    rng = make_rng(seed)
    arrays = OrderedDict()
    for name, param in specs.items():
        value = rng.normal(0.0, scale, size=param.shape)
        if name.endswith("ln_gain"):
            value += 1.0
        arrays[name] = value
    return arrays


def _block(tensors, mode="average"):
    def _group(fields, prefix):
        return fields(**{name: tensors[prefix + name] for name in fields._fields})
    return BlockParams(
        local_attn=_group(AttentionParams, "local."),
        global_attn=_group(AttentionParams, "global."),
        pool=PoolParams(mode, tensors.get("pool.weight"), tensors.get("pool.bias")),
        mlp=_group(MlpParams, "mlp."))


def _constants(eng, arrays):
    return OrderedDict((name, eng.constant(value)) for name, value in arrays.items())


def _layer_norm(x, gain, bias, eps=1e-5):
    mean = x.mean(axis=-1, keepdims=True)
    var = ((x - mean) ** 2).mean(axis=-1, keepdims=True)
    return (x - mean) / np.sqrt(var + eps) * gain + bias


@mark.parametrize(
    "F, H, W, spec, count",
    [
        (4, 4, 4, (2, 2, 2), 8),
        (4, 4, 4, (4, 4, 4), 1),
        (4, 4, 4, (1, 1, 1), 64),
        (2, 3, 6, (1, 3, 2), 6),
    ]
)
def test_attention_01(random_grid, F, H, W, spec, count):
    """test partition() window count and merge() round trip"""
    eng = Engine(trace=False)
    spec = WindowSpec(*spec)
    grid = random_grid(F, H, W, 5, eng=eng)
    windows = partition(eng, grid, spec)
    assert spec.count(F, H, W) == count
    assert windows.shape == (count, spec.size, 5)
    restored = merge(eng, windows, grid, spec)
    assert np.array_equal(restored.tokens.data, grid.tokens.data)
    # every non-CLS token appears exactly once
    flat = windows.data.reshape(-1, 5)
    assert sorted(map(tuple, flat)) == sorted(map(tuple, grid.tokens.data[1:]))


def test_attention_02(random_grid):
    """test partition() token order"""
    eng = Engine(trace=False)
    grid = random_grid(4, 4, 4, 3, eng=eng)
    spec = WindowSpec(2, 2, 2)
    windows = partition(eng, grid, spec).data
    # second window along the column axis, row-major inside the window
    rows = [grid.index(t, r * 4 + c) for t in (0, 1) for r in (0, 1) for c in (2, 3)]
    assert np.array_equal(windows[1], grid.tokens.data[rows])
    # first window of the second frame block
    rows = [grid.index(t, r * 4 + c) for t in (2, 3) for r in (0, 1) for c in (0, 1)]
    assert np.array_equal(windows[4], grid.tokens.data[rows])


@mark.parametrize(
    "spec, axis",
    [
        ((3, 2, 2), "f"),
        ((2, 3, 2), "h"),
        ((2, 2, 3), "w"),
        ((2, 2, 0), "w"),
        ((-1, 2, 2), "f"),
    ]
)
def test_attention_03(random_grid, spec, axis):
    """test partition() rejects windows that do not tile the grid"""
    eng = Engine(trace=False)
    with raises(WindowSpecError) as exc:
        partition(eng, random_grid(4, 4, 4, 2, eng=eng), WindowSpec(*spec))
    assert exc.value.axis == axis


def test_attention_04(random_grid):
    """test mhla() with zero output projection is the identity"""
    eng = Engine(trace=False)
    spec = WindowSpec(2, 2, 2)
    arrays = _block_arrays(8, 2, spec)
    arrays["local.wo"] = np.zeros((8, 8))
    grid = random_grid(4, 4, 4, 8, eng=eng)
    out = mhla(eng, grid, _block(_constants(eng, arrays)).local_attn, spec)
    assert np.array_equal(out.tokens.data, grid.tokens.data)


def test_attention_05(random_grid):
    """test mhla() and mhga() pair counts"""
    eng = Engine(trace=False)
    spec = WindowSpec(2, 2, 2)
    block = _block(_constants(eng, _block_arrays(8, 2, spec)))
    grid = random_grid(4, 4, 4, 8, eng=eng)
    mid = mhla(eng, grid, block.local_attn, spec)
    counts = eng.cost_snapshot()
    assert counts.pair_count == 512
    assert counts.cls_pair_count == 0
    eng.reset_costs()
    mhga(eng, mid, block, spec)
    counts = eng.cost_snapshot()
    assert counts.pair_count == 64 * 64 // 8
    # CLS queries 8 pooled tokens and itself, 64 tokens query CLS
    assert counts.cls_pair_count == 9 + 64


def test_attention_06(random_grid):
    """test mhla() with a single window equals full attention over non-CLS tokens"""
    spec = WindowSpec(2, 2, 2)
    worst = 0.0
    for draw in range(20):
        eng = Engine(trace=False)
        attn = _block(_constants(eng, _block_arrays(16, 2, spec, seed=draw))).local_attn
        grid = random_grid(2, 2, 2, 16, seed=100 + draw, eng=eng)
        local = mhla(eng, grid, attn, spec)
        full = full_space_time_attention(eng, grid, attn, include_cls=False)
        assert np.array_equal(local.tokens.data[0], grid.tokens.data[0])
        worst = max(worst, np.abs(local.tokens.data - full.tokens.data).max())
    assert worst <= 1e-10


def test_attention_07(random_grid):
    """test mhga() with one-token pool windows equals full attention over all tokens"""
    spec = WindowSpec(1, 1, 1)
    worst = 0.0
    for draw in range(20):
        eng = Engine(trace=False)
        arrays = _block_arrays(16, 2, spec, seed=draw)
        arrays["mlp.w2"] = np.zeros_like(arrays["mlp.w2"])
        arrays["mlp.b2"] = np.zeros_like(arrays["mlp.b2"])
        block = _block(_constants(eng, arrays))
        grid = random_grid(2, 2, 2, 16, seed=200 + draw, eng=eng)
        glob = mhga(eng, grid, block, spec)
        full = full_space_time_attention(eng, grid, block.global_attn, include_cls=True)
        worst = max(worst, np.abs(glob.tokens.data - full.tokens.data).max())
    assert worst <= 1e-10


def test_attention_08(random_grid):
    """test mhga() with zero output weights is the identity"""
    eng = Engine(trace=False)
    spec = WindowSpec(2, 2, 2)
    arrays = _block_arrays(8, 2, spec, mode="learned")
    arrays["global.wo"] = np.zeros((8, 8))
    arrays["mlp.w2"] = np.zeros((32, 8))
    arrays["mlp.b2"] = np.zeros(8)
    grid = random_grid(4, 4, 4, 8, eng=eng)
    out = mhga(eng, grid, _block(_constants(eng, arrays), mode="learned"), spec)
    assert np.array_equal(out.tokens.data, grid.tokens.data)


def test_attention_09():
    """test window_pool() average mode"""
    eng = Engine(trace=False)
    pool = PoolParams("average", None, None)
    value = np.array([0.5, -1.25, 3.0])
    grid = TokenGrid(eng.constant(np.tile(value, (2 * 2 * 4 + 1, 1))), 2, 2, 4)
    pooled = window_pool(eng, grid, WindowSpec(2, 2, 2), pool)
    assert pooled.shape == (2, 3)
    assert np.allclose(pooled.data, value, rtol=0, atol=1e-15)
    # two point mean, the CLS token is not pooled
    tokens = np.array([[9.0, 9.0], [0.0, 0.0], [2.0, -4.0]])
    grid = TokenGrid(eng.constant(tokens), 1, 1, 2)
    pooled = window_pool(eng, grid, WindowSpec(1, 1, 2), pool)
    assert np.array_equal(pooled.data, [[1.0, -2.0]])


def test_attention_10(random_grid):
    """test window_pool() learned mode with averaging weights"""
    eng = Engine(trace=False)
    spec = WindowSpec(2, 1, 2)
    d = 6
    grid = random_grid(4, 2, 4, d, eng=eng)
    weight = np.tile(np.eye(d) / spec.size, (spec.size, 1))
    learned = PoolParams("learned", eng.constant(weight), eng.constant(np.zeros(d)))
    average = PoolParams("average", None, None)
    expected = window_pool(eng, grid, spec, average)
    assert expected.shape == (8, d)
    assert np.allclose(window_pool(eng, grid, spec, learned).data, expected.data, rtol=0, atol=1e-12)
    with raises(ConfigError, match="pool_mode"):
        window_pool(eng, grid, spec, PoolParams("max", None, None))
    with raises(ConfigError, match="pool_mode"):
        pool_param_specs("pool.", d, spec, "max")


def test_attention_11():
    """test full_space_time_attention() over a single token"""
    eng = Engine(trace=False)
    arrays = _block_arrays(4, 2, WindowSpec(1, 1, 1), seed=3, scale=0.7)
    attn = _block(_constants(eng, arrays)).local_attn
    tokens = np.array([[0.0, 0.0, 0.0, 0.0], [0.3, -1.2, 2.0, 0.1]])
    grid = TokenGrid(eng.constant(tokens), 1, 1, 1)
    out = full_space_time_attention(eng, grid, attn, include_cls=False)
    normed = _layer_norm(tokens[1], arrays["local.ln_gain"], arrays["local.ln_bias"])
    values = np.concatenate([normed @ arrays["local.wv"][head] for head in range(2)])
    assert np.allclose(out.tokens.data[1] - tokens[1], values @ arrays["local.wo"], rtol=0, atol=1e-12)
    assert eng.cost_snapshot().pair_count == 1


def test_attention_12(random_grid):
    """test full_space_time_attention() pair counts"""
    eng = Engine(trace=False)
    attn = _block(_constants(eng, _block_arrays(4, 1, WindowSpec(1, 1, 1)))).global_attn
    grid = random_grid(4, 4, 4, 4, eng=eng)
    full_space_time_attention(eng, grid, attn, include_cls=False)
    assert eng.cost_snapshot().pair_count == 4096
    assert eng.cost_snapshot().cls_pair_count == 0
    eng.reset_costs()
    full_space_time_attention(eng, grid, attn)
    assert eng.cost_snapshot().pair_count == 4096
    assert eng.cost_snapshot().cls_pair_count == 2 * 64 + 1


def test_attention_13(random_grid):
    """test mhla() locality, tokens outside a window do not affect it"""
    eng = Engine(trace=False)
    spec = WindowSpec(2, 2, 2)
    attn = _block(_constants(eng, _block_arrays(8, 2, spec, seed=5))).local_attn
    grid = random_grid(4, 4, 4, 8, seed=6, eng=eng)
    windows = partition(eng, grid, spec).data
    masked = np.zeros_like(windows)
    masked[3] = windows[3]
    masked_grid = merge(eng, eng.constant(masked), grid, spec)
    base = partition(eng, mhla(eng, grid, attn, spec), spec).data
    out = partition(eng, mhla(eng, masked_grid, attn, spec), spec).data
    assert np.allclose(out[3], base[3], rtol=0, atol=1e-14)


def test_attention_14(random_grid):
    """test mhla() is consistent under window permutation"""
    eng = Engine(trace=False)
    spec = WindowSpec(1, 2, 2)
    attn = _block(_constants(eng, _block_arrays(8, 2, spec, seed=7))).local_attn
    grid = random_grid(2, 4, 4, 8, seed=8, eng=eng)
    order = make_rng(9).permutation(spec.count(2, 4, 4))
    windows = partition(eng, grid, spec).data
    shuffled = merge(eng, eng.constant(windows[order]), grid, spec)
    out = partition(eng, mhla(eng, shuffled, attn, spec), spec).data
    restored = np.empty_like(out)
    restored[order] = out
    base = partition(eng, mhla(eng, grid, attn, spec), spec).data
    assert np.allclose(restored, base, rtol=0, atol=1e-14)


def test_attention_15():
    """test multi_head_attention() rejects width mismatch"""
    eng = Engine(trace=False)
    attn = _block(_constants(eng, _block_arrays(4, 2, WindowSpec(1, 1, 1)))).local_attn
    with raises(DimensionError, match="attention width"):
        multi_head_attention(eng, eng.constant(np.ones((3, 5))), eng.constant(np.ones((3, 4))), attn)
    with raises(ConfigError, match="not divisible"):
        attention_param_specs("x.", 6, 4)


@mark.parametrize("mode", ["average", "learned"])
def test_attention_16(grad_check, mode):
    """test logo_block() gradients with respect to tokens and every block parameter"""
    F, H, W, d = 2, 2, 2, 4
    spec = WindowSpec(1, 2, 2)
    arrays = _block_arrays(d, 2, spec, mode=mode, seed=11, scale=0.5)
    names = list(arrays)
    tokens = make_rng(12).standard_normal((F * H * W + 1, d))
    weights = make_rng(13).standard_normal((F * H * W + 1, d))

    def build(eng, *leaves):
        block = _block(dict(zip(names, leaves[1:])), mode=mode)
        out = logo_block(eng, TokenGrid(leaves[0], F, H, W), block, spec)
        return eng.sum(eng.mul(out.tokens, eng.constant(weights)))
    assert grad_check(build, [tokens] + list(arrays.values())) <= 0
