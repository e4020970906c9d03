# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Synthetic clip features with class-dependent spatio-temporal structure."""
from collections import namedtuple
from logging import getLogger

import numpy as np

from ..common.exceptions import ConfigError
from ..common.utils import make_rng
from ..model.embedding import ClipFeatures

__all__ = ("generate", "SyntheticSpec")

LOG = getLogger(__name__)

# random streams derived from the seed
_STREAM_PROTOTYPES = 0
_STREAM_CLIPS = 1

DATA_KEYS = ("clips_per_class", "class_signal_scale", "noise_scale", "temporal_drift", "data_seed")


class SyntheticSpec(namedtuple(
        "SyntheticSpec",
        "num_classes clips_per_class F H W C class_signal_scale noise_scale temporal_drift seed",
        defaults=(7, 4, 8, 4, 4, 16, 1.0, 0.1, 0.05, 0))):
    """Synthetic dataset parameters.

    Each class owns a random F×H×W×C prototype. Frame t of a clip blends
    prototype frame t with frame t+1 (wrapping) by weight
    min(1, temporal_drift·(t + phase)), where phase is drawn per clip from
    [0, 1). Gaussian noise scaled by noise_scale is added.
    """
    __slots__ = ()

    @classmethod
    def for_model(cls, model_config, mapping=None, seed=None):
        """Spec matching a model's geometry and class count.

        Args:
            model_config (ModelConfig): Model the data is generated for.
            mapping (dict): Typed config values (synthetic-data keys are used).
            seed (int): Overrides `data_seed` from `mapping`.

        Returns:
            SyntheticSpec: Validated spec.
        """
        mapping = mapping or {}
        values = {
            "num_classes": model_config.num_classes,
            "F": model_config.F,
            "H": model_config.H,
            "W": model_config.W,
            "C": model_config.C}
        for key in DATA_KEYS[:-1]:
            if key in mapping:
                values[key] = mapping[key]
        if seed is not None:
            values["seed"] = seed
        elif "data_seed" in mapping:
            values["seed"] = mapping["data_seed"]
        spec = cls(**values)
        spec.check()
        return spec

    def check(self):
        for key in ("num_classes", "clips_per_class", "F", "H", "W", "C"):
            if getattr(self, key) < 1:
                raise ConfigError("%s must be at least 1, got %d" % (key, getattr(self, key)))
        for key in ("class_signal_scale", "noise_scale", "temporal_drift"):
            if not getattr(self, key) >= 0:
                raise ConfigError("%s must be non-negative, got %r" % (key, getattr(self, key)))
        if self.seed < 0:
            raise ConfigError("seed must be non-negative, got %d" % (self.seed,))

    @property
    def size(self):
        return self.num_classes * self.clips_per_class


def generate(spec):
    """Generate a labelled dataset. Labels cycle through the classes so every
    prefix of the dataset is as balanced as possible.

    Args:
        spec (SyntheticSpec): Dataset parameters.

    Returns:
        list(tuple(ClipFeatures, int)): Clips and labels.
    """
    spec.check()
    shape = (spec.F, spec.H, spec.W, spec.C)
    prototypes = make_rng(spec.seed, _STREAM_PROTOTYPES).standard_normal(
        (spec.num_classes,) + shape)
    prototypes *= spec.class_signal_scale
    # prototype frame t+1 for every frame t
    shifted = np.roll(prototypes, -1, axis=1)
    rng = make_rng(spec.seed, _STREAM_CLIPS)
    frames = np.arange(spec.F, dtype=np.float64)
    dataset = []
    for _ in range(spec.clips_per_class):
        for label in range(spec.num_classes):
            phase = rng.uniform()
            weight = np.minimum(1.0, spec.temporal_drift * (frames + phase))
            weight = weight.reshape(spec.F, 1, 1, 1)
            clip = (1.0 - weight) * prototypes[label] + weight * shifted[label]
            clip = clip + spec.noise_scale * rng.standard_normal(shape)
            dataset.append((ClipFeatures(clip), label))
    LOG.debug("generated %d synthetic clips (seed %d)", len(dataset), spec.seed)
    return dataset
