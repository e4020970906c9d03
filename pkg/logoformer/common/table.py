# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Fixed-width tables for console reports (per-class recall, gradient checks)."""
import re

__all__ = ("format_ratio", "format_seconds", "format_table")


def format_ratio(value):
    return "-" if value is None else "%.4f" % (value,)


def format_seconds(duration):
    # H:M:S with leading zeros removed
    minutes, seconds = divmod(int(duration), 60)
    hours, minutes = divmod(minutes, 60)
    return re.sub("^[0:]*", "", "%d:%02d:%02d" % (hours, minutes, seconds)) or "0"


def format_table(columns, rows, formatters=None, vsep=" | ", hsep="-"):
    """Render rows as a table. The first column is left-aligned, the rest are
    right-aligned.

    Args:
        columns (sequence(str)): Column headers.
        rows (iterable(sequence)): Row values, one per column.
        formatters (sequence(callable)): Per column value formatter (default str).
        vsep (str): Column separator.
        hsep (str): Character of the rule below the header.

    Yields:
        str: Each line of the table.
    """
    if formatters is None:
        formatters = (str,) * len(columns)
    assert len(formatters) == len(columns)
    cells = []
    for row in rows:
        assert len(row) == len(columns)
        cells.append(tuple(fmt(value) for fmt, value in zip(formatters, row)))
    widths = [max([len(col)] + [len(line[idx]) for line in cells])
              for idx, col in enumerate(columns)]

    def _join(values):
        padded = [values[0].ljust(widths[0])]
        padded.extend(val.rjust(width) for val, width in zip(values[1:], widths[1:]))
        return vsep.join(padded)

    yield _join(tuple(columns))
    yield hsep * (sum(widths) + len(vsep) * (len(columns) - 1))
    for line in cells:
        yield _join(line)
