# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Local-global spatio-temporal attention (LOGO-Former) with a compact loss
regularizer, built on a small numpy tensor engine.
"""
