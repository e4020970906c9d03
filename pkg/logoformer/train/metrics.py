# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Recall metrics: per-class recall, UAR and WAR."""
from collections import namedtuple
from logging import getLogger

import numpy as np

from ..common.exceptions import ContractError
from ..common.table import format_ratio, format_table

__all__ = ("class_names", "EMOTIONS", "evaluate", "format_metrics", "Metrics")

LOG = getLogger(__name__)

EMOTIONS = ("Happiness", "Sadness", "Neutral", "Anger", "Surprise", "Disgust", "Fear")

# support[i] is the number of samples labelled i, recall is 0.0 where support is 0
Metrics = namedtuple("Metrics", "per_class_recall uar war confusion support class_names")


def class_names(num_classes):
    """Display names: the emotion categories for 7 classes, otherwise "class <i>"."""
    if num_classes == len(EMOTIONS):
        return EMOTIONS
    return tuple("class %d" % (index,) for index in range(num_classes))


def evaluate(predictions, labels, num_classes, names=None):
    """Compare predictions with labels.

    UAR is the unweighted mean recall over classes with nonzero support. WAR is
    overall accuracy.

    Args:
        predictions (sequence(int)): Predicted class per sample.
        labels (sequence(int)): True class per sample.
        num_classes (int): Number of classes.
        names (sequence(str)): Class display names.

    Returns:
        Metrics: Evaluation results.
    """
    predictions = list(predictions)
    labels = list(labels)
    if len(predictions) != len(labels):
        raise ContractError("%d predictions for %d labels" % (len(predictions), len(labels)))
    for index in predictions + labels:
        if not 0 <= index < num_classes:
            raise ContractError("class index %d out of range for %d classes" % (index, num_classes))
    if names is None:
        names = class_names(num_classes)
    elif len(names) != num_classes:
        raise ContractError("%d class names for %d classes" % (len(names), num_classes))
    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(confusion, (np.array(labels, dtype=np.intp), np.array(predictions, dtype=np.intp)), 1)
    support = confusion.sum(axis=1)
    recall = [
        float(confusion[index, index]) / int(support[index]) if support[index] else 0.0
        for index in range(num_classes)]
    present = [index for index in range(num_classes) if support[index]]
    if len(present) < num_classes:
        LOG.info("UAR excludes %d class(es) without samples: %s", num_classes - len(present),
                 ", ".join(names[index] for index in range(num_classes) if not support[index]))
    uar = float(sum(recall[index] for index in present) / len(present)) if present else 0.0
    war = float(np.trace(confusion)) / len(labels) if labels else 0.0
    return Metrics(
        per_class_recall=recall, uar=uar, war=war, confusion=confusion,
        support=support.tolist(), class_names=tuple(names))


def format_metrics(metrics):
    """Per-class recall table followed by UAR and WAR.

    Args:
        metrics (Metrics): Results of evaluate().

    Yields:
        str: Report lines.
    """
    rows = []
    for name, support, recall in zip(
            metrics.class_names, metrics.support, metrics.per_class_recall):
        rows.append((name, support, recall if support else None))
    for line in format_table(("Class", "Support", "Recall"), rows, (str, str, format_ratio)):
        yield line
    yield "UAR: %s" % (format_ratio(metrics.uar),)
    yield "WAR: %s" % (format_ratio(metrics.war),)
