# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

from .core import RunHistory, train, TrainConfig, Trainer
from .export import compactness_ratio, export_embeddings
from .gradcheck import gradcheck
from .loss import compact_term, cross_entropy, LossBreakdown, non_target_distribution, total_loss
from .metrics import evaluate, Metrics
from .sweep import cost_sweep
from .synthetic import generate, SyntheticSpec


__all__ = (
    "compact_term", "compactness_ratio", "cost_sweep", "cross_entropy", "evaluate",
    "export_embeddings", "generate", "gradcheck", "LossBreakdown", "Metrics",
    "non_target_distribution", "RunHistory", "SyntheticSpec", "total_loss", "train",
    "TrainConfig", "Trainer")
