# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

from .attention import (
    full_space_time_attention, mhga, mhla, merge, partition, window_pool, WindowSpec)
from .core import Model, ModelConfig
from .cost import cost_report, CostReport, forward_macs, forward_pairs
from .embedding import assemble, ClipFeatures, project, TokenGrid


__all__ = (
    "assemble", "ClipFeatures", "cost_report", "CostReport", "forward_macs", "forward_pairs",
    "full_space_time_attention", "merge", "mhga", "mhla", "Model", "ModelConfig", "partition",
    "project", "TokenGrid", "window_pool", "WindowSpec")
