# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""test embedding export"""
from os import getenv

import numpy as np
from pytest import mark, raises

from ..common.exceptions import ContractError, LogoFormerError
from ..model.core import Model, ModelConfig
from .core import train, TrainConfig
from .export import compactness_ratio, export_embeddings, load_embeddings
from .synthetic import generate, SyntheticSpec

SLOW_ENV = "LGF_SLOW"


def _dataset(model_config, clips_per_class=2, seed=0):
    return generate(SyntheticSpec.for_model(model_config, {"clips_per_class": clips_per_class}, seed=seed))


def test_export_01(tmp_path, tiny_config):
    """test export_embeddings() file layout"""
    model = Model.init(tiny_config)
    dataset = _dataset(tiny_config)
    path = tmp_path / "emb.csv"
    rows = export_embeddings(model, dataset, str(path))
    assert len(rows) == 6
    lines = path.read_text().splitlines()
    assert lines[0] == "label,e0,e1,e2,e3,e4,e5,e6,e7"
    assert len(lines) == 7
    for line, (clip, label) in zip(lines[1:], dataset):
        fields = line.split(",")
        assert len(fields) == 9
        assert int(fields[0]) == label
        _, feature = model.forward(clip, return_cls=True)
        assert [float(x) for x in fields[1:]] == feature.data.tolist()


def test_export_02(tmp_path, tiny_config):
    """test export_embeddings() is reproducible"""
    model = Model.init(tiny_config)
    dataset = _dataset(tiny_config)
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    export_embeddings(model, dataset, str(first), workers=1)
    export_embeddings(model, dataset, str(second), workers=3)
    assert first.read_bytes() == second.read_bytes()
    loaded = load_embeddings(str(first))
    rows = export_embeddings(model, dataset, str(first))
    assert [label for label, _ in loaded] == [label for label, _ in rows]
    for (_, a), (_, b) in zip(loaded, rows):
        assert np.array_equal(a, b)


def test_export_03(tmp_path, tiny_config):
    """test export_embeddings() and load_embeddings() I/O errors"""
    model = Model.init(tiny_config)
    with raises(LogoFormerError, match="cannot write embeddings"):
        export_embeddings(model, _dataset(tiny_config), str(tmp_path / "missing" / "emb.csv"))
    with raises(LogoFormerError, match="cannot read embeddings"):
        load_embeddings(str(tmp_path / "missing.csv"))
    bad = tmp_path / "bad.csv"
    bad.write_text("label,e0\n1,abc\n")
    with raises(LogoFormerError, match="cannot read embeddings"):
        load_embeddings(str(bad))


def test_export_04():
    """test compactness_ratio()"""
    rows = [
        (0, np.array([0.0, 1.0])), (0, np.array([0.0, -1.0])),
        (1, np.array([4.0, 1.0])), (1, np.array([4.0, -1.0]))]
    # centroids (0, 0) and (4, 0), every feature 1 away from its centroid
    assert compactness_ratio(rows) == 4.0
    spread = [(label, feature * [1.0, 2.0]) for label, feature in rows]
    assert compactness_ratio(spread) == 2.0
    with raises(ContractError, match="two classes"):
        compactness_ratio(rows[:2])
    with raises(ContractError, match="do not vary"):
        compactness_ratio([(0, np.zeros(2)), (1, np.ones(2))])


@mark.skipif(not getenv(SLOW_ENV), reason="desk-scale training runs, set %s=1" % (SLOW_ENV,))
def test_export_05(tmp_path):
    """test the compact term tightens class clusters"""
    model_config = ModelConfig()
    dataset = generate(SyntheticSpec.for_model(model_config))
    ratios = {0.0: [], 1.0: []}
    for seed in range(3):
        for lam in ratios:
            config = TrainConfig(
                model=model_config._replace(seed=seed), epochs=50, lam=lam, seed=seed)
            model, _ = train(config, dataset)
            path = str(tmp_path / ("emb_%d_%d.csv" % (seed, lam)))
            ratios[lam].append(compactness_ratio(export_embeddings(model, dataset, path)))
    assert np.mean(ratios[1.0]) > np.mean(ratios[0.0])
