# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Training progress reports."""
from json import dump, load
from logging import getLogger
from os import unlink
from time import time

from fasteners.process_lock import InterProcessLock

from .table import format_seconds

__all__ = ("Status",)

LOG = getLogger(__name__)


class Status(object):
    """Status holds progress information for a training run.
    There can be multiple readers of the data but only a single writer.
    """
    REPORT_FREQ = 10

    __slots__ = (
        "_lock", "data_file", "epoch", "epochs", "loss", "start_time", "timestamp", "war")

    def __init__(self, data_file, start_time=None):
        assert data_file.endswith(".json")
        assert start_time is None or isinstance(start_time, float)
        self._lock = InterProcessLock("%s.lock" % (data_file,))
        self.data_file = data_file
        self.epoch = 0
        self.epochs = 0
        self.loss = None
        self.start_time = start_time
        self.timestamp = start_time
        self.war = None

    def cleanup(self):
        """Remove the lock file. The report itself is kept as the run's record.

        Args:
            None

        Returns:
            None
        """
        if self.data_file is None:
            return
        try:
            unlink("%s.lock" % (self.data_file,))
        except OSError:  # pragma: no cover
            pass
        self.data_file = None

    @property
    def _data(self):
        return {
            "epoch": self.epoch,
            "epochs": self.epochs,
            "loss": self.loss,
            "start_time": self.start_time,
            "timestamp": self.timestamp,
            "war": self.war}

    @property
    def duration(self):
        """Number of seconds between start() and the last report.

        Args:
            None

        Returns:
            float: Runtime in seconds.
        """
        return max(self.timestamp - self.start_time, 0)

    @classmethod
    def load(cls, data_file):
        """Load a status report. Loaded reports are read only.

        Args:
            data_file (str): JSON file that contains status data.

        Returns:
            Status: Loaded status object or None
        """
        status = cls(data_file)
        data = None
        try:
            with status._lock:  # pylint: disable=protected-access
                with open(data_file, "r") as in_fp:
                    data = load(in_fp)
        except OSError:
            LOG.debug("failed to open %r", data_file)
        except ValueError:
            LOG.debug("failed to load json data from %r", data_file)
        if not isinstance(data, dict) or "start_time" not in data:
            LOG.debug("invalid status json file")
            return None
        for attr, value in data.items():
            if attr in cls.__slots__:
                setattr(status, attr, value)
        # set read only
        status.data_file = None
        return status

    @property
    def rate(self):
        """Epochs completed per second.

        Args:
            None

        Returns:
            float: Epochs per second.
        """
        return self.epoch / float(self.duration) if self.duration > 0 else 0

    def report(self, force=False, report_freq=REPORT_FREQ):
        """Write the status report. Reports are only written when the time since
        the previous report exceeds `report_freq` seconds.

        Args:
            force (bool): Ignore report frequency limiting.
            report_freq (int): Minimum number of seconds between writes.

        Returns:
            bool: True if the report was written otherwise False.
        """
        assert self.data_file is not None
        now = time()
        if not force and now < (self.timestamp + report_freq):
            return False
        self.timestamp = now
        with self._lock:
            with open(self.data_file, "w") as out_fp:
                dump(self._data, out_fp)
        return True

    @classmethod
    def start(cls, data_file, epochs, epoch=0):
        """Create and write an initial status report.

        Args:
            data_file (str): Destination JSON file.
            epochs (int): Total number of epochs planned.
            epoch (int): Epochs already completed (resumed runs).

        Returns:
            Status: Active status report.
        """
        status = cls(data_file, start_time=time())
        status.epoch = epoch
        status.epochs = epochs
        status.report(force=True)
        return status

    def summary(self):
        """Single line description of progress.

        Args:
            None

        Returns:
            str: Progress summary.
        """
        txt = ["Epoch %d/%d" % (self.epoch, self.epochs)]
        if self.loss is not None:
            txt.append("loss %.6f" % (self.loss,))
        if self.war is not None:
            txt.append("WAR %.4f" % (self.war,))
        txt.append("runtime %s" % (format_seconds(self.duration),))
        return ", ".join(txt)
