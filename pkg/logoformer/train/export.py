# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""CLS feature export and a class separation score over exported features."""
from csv import reader, writer
from logging import getLogger

import numpy as np

from ..common.exceptions import ContractError, LogoFormerError
from ..common.utils import ordered_map

__all__ = ("compactness_ratio", "export_embeddings", "load_embeddings")

LOG = getLogger(__name__)


def _embed(model, sample):
    clip, label = sample
    _, feature = model.forward(clip, return_cls=True)
    return label, feature.data


def export_embeddings(model, dataset, path, workers=None):
    """Write the final-block CLS feature of every clip to a CSV file.

    The header is `label,e0,...,e{d-1}` and there is one row per clip in dataset
    order. Floats are written with repr() so the output is exactly reproducible.

    Args:
        model (Model): Model to run.
        dataset (list(tuple(ClipFeatures, int))): Clips and labels.
        path (str): Destination CSV file.
        workers (int): Parallel workers (default from the environment).

    Returns:
        list(tuple(int, numpy.ndarray)): Exported (label, feature) rows.
    """
    rows = ordered_map(lambda sample: _embed(model, sample), dataset, workers=workers)
    try:
        with open(path, "w", newline="") as out_fp:
            csv_out = writer(out_fp, lineterminator="\n")
            csv_out.writerow(["label"] + ["e%d" % (index,) for index in range(model.config.d)])
            for label, feature in rows:
                csv_out.writerow([label] + [repr(float(x)) for x in feature])
    except OSError as exc:
        raise LogoFormerError("cannot write embeddings to %r: %s" % (path, exc)) from None
    LOG.debug("exported %d embeddings to %r", len(rows), path)
    return rows


def load_embeddings(path):
    """Read rows written by export_embeddings().

    Args:
        path (str): CSV file.

    Returns:
        list(tuple(int, numpy.ndarray)): (label, feature) rows.
    """
    rows = []
    try:
        with open(path, "r", newline="") as in_fp:
            csv_in = reader(in_fp)
            next(csv_in, None)
            for line in csv_in:
                rows.append((int(line[0]), np.array([float(x) for x in line[1:]])))
    except (OSError, ValueError, IndexError) as exc:
        raise LogoFormerError("cannot read embeddings from %r: %s" % (path, exc)) from None
    return rows


def compactness_ratio(rows):
    """Mean distance between class centroids divided by the mean distance of
    features to their own class centroid. Higher means tighter, better
    separated classes.

    Args:
        rows (iterable(tuple(int, numpy.ndarray))): (label, feature) rows.

    Returns:
        float: Inter/intra distance ratio.
    """
    rows = list(rows)
    labels = sorted({label for label, _ in rows})
    if len(labels) < 2:
        raise ContractError("at least two classes are required, got %d" % (len(labels),))
    centroids = {}
    intra = []
    for label in labels:
        features = np.array([feature for row_label, feature in rows if row_label == label])
        centroids[label] = features.mean(axis=0)
        intra.extend(np.linalg.norm(features - centroids[label], axis=1))
    inter = [
        np.linalg.norm(centroids[a] - centroids[b])
        for idx, a in enumerate(labels) for b in labels[idx + 1:]]
    intra_mean = float(np.mean(intra))
    if intra_mean == 0:
        raise ContractError("features do not vary within classes")
    return float(np.mean(inter)) / intra_mean
