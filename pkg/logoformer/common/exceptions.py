# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""LOGO-Former exceptions."""

__all__ = (
    "CheckpointFormatError", "ConfigError", "ContractError", "DimensionError",
    "LogoFormerError", "NumericInputError", "TapeError", "WindowSpecError")


class LogoFormerError(Exception):
    """Base for other LOGO-Former specific exceptions."""
    EXIT_ERROR = 1

    def __init__(self, msg, code=EXIT_ERROR):
        super().__init__(msg)
        self.msg = msg
        self.code = code


class ContractError(LogoFormerError):
    """A precondition of an operation was violated."""


class ConfigError(ContractError):
    """Invalid model, training or data configuration."""


class DimensionError(LogoFormerError):
    """Tensor shapes or geometry do not agree."""


class WindowSpecError(DimensionError):
    """Window extents do not evenly divide the token grid."""
    def __init__(self, msg, axis):
        super().__init__(msg)
        self.axis = axis


class NumericInputError(LogoFormerError):
    """Non-finite values were passed to an operation that requires finite input."""


class TapeError(LogoFormerError):
    """Invalid use of a gradient tape."""


class CheckpointFormatError(LogoFormerError):
    """Checkpoint data is malformed."""
    def __init__(self, msg, offset):
        super().__init__("%s (at byte offset %d)" % (msg, offset))
        self.offset = offset
