# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

from .exceptions import (
    CheckpointFormatError, ConfigError, ContractError, DimensionError, LogoFormerError,
    NumericInputError, TapeError, WindowSpecError)
from .status import Status
from .tensor import backward, CostCounter, Engine, Tape, Tensor
from .utils import make_rng, ordered_map, worker_count


__all__ = (
    "backward", "CheckpointFormatError", "ConfigError", "ContractError", "CostCounter",
    "DimensionError", "Engine", "LogoFormerError", "make_rng", "NumericInputError", "ordered_map",
    "Status", "Tape", "TapeError", "Tensor", "WindowSpecError", "worker_count")
