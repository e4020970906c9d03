# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Training loop: SGD with momentum on cross-entropy plus the compact term."""
from collections import namedtuple, OrderedDict
from csv import writer
from logging import getLogger
from math import isfinite
from os.path import join as pathjoin

import numpy as np

from ..common.config import convert_items
from ..common.exceptions import ConfigError, ContractError, NumericInputError
from ..common.status import Status
from ..common.tensor import Engine
from ..common.utils import make_rng, ordered_map
from ..model.core import Model, ModelConfig
from ..model.cost import forward_macs, forward_pairs
from .loss import total_loss
from .metrics import evaluate

__all__ = ("EpochRecord", "predict", "RunHistory", "train", "TrainConfig", "Trainer")

LOG = getLogger(__name__)

CHECKPOINT_NAME = "model.lgfm"
HISTORY_NAME = "history.csv"
STATUS_NAME = "status.json"

HISTORY_TENSOR = "trainer.history"
MOMENTUM_PREFIX = "momentum."

EpochRecord = namedtuple(
    "EpochRecord", "epoch loss_total loss_ce loss_compact train_uar train_war")


class TrainConfig(namedtuple(
        "TrainConfig", "model lr momentum epochs batch_size lam seed",
        defaults=(ModelConfig(), 0.001, 0.9, 20, 8, 1.0, 0))):
    """Optimizer and schedule settings. `lam` weights the compact term."""
    __slots__ = ()

    @classmethod
    def from_mapping(cls, mapping, **overrides):
        """Build a config from typed values such as the output of load_config().

        Args:
            mapping (dict): Typed values. Model keys build the ModelConfig.
            overrides: TrainConfig fields that take precedence over `mapping`
                       (None values are ignored).

        Returns:
            TrainConfig: Validated config.
        """
        values = {"model": ModelConfig.from_mapping(mapping)}
        for field, key in (("lr", "lr"), ("momentum", "momentum"), ("epochs", "epochs"),
                           ("batch_size", "batch_size"), ("lam", "lambda"), ("seed", "train_seed")):
            if overrides.get(field) is not None:
                values[field] = overrides[field]
            elif key in mapping:
                values[field] = mapping[key]
        config = cls(**values)
        config.check()
        return config

    def check(self):
        self.model.check()
        # zero is accepted: parameters then stay fixed
        if not (isfinite(self.lr) and self.lr >= 0):
            raise ConfigError("lr must be non-negative, got %r" % (self.lr,))
        if not 0 <= self.momentum < 1:
            raise ConfigError("momentum must be in [0, 1), got %r" % (self.momentum,))
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1, got %d" % (self.epochs,))
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1, got %d" % (self.batch_size,))
        if not (isfinite(self.lam) and self.lam >= 0):
            raise ConfigError("lambda must be non-negative, got %r" % (self.lam,))
        if self.seed < 0:
            raise ConfigError("train_seed must be non-negative, got %d" % (self.seed,))

    def items(self):
        return [("lr", self.lr), ("momentum", self.momentum), ("epochs", self.epochs),
                ("batch_size", self.batch_size), ("lambda", self.lam), ("train_seed", self.seed)]


class RunHistory(object):
    """Per-epoch training records and the metrics of the final model."""
    COLUMNS = EpochRecord._fields

    __slots__ = ("final", "records")

    def __init__(self, records=None, final=None):
        self.final = final
        self.records = list(records or ())

    def __len__(self):
        return len(self.records)

    def as_array(self):
        return np.array(self.records, dtype=np.float64).reshape(len(self.records), len(self.COLUMNS))

    @classmethod
    def from_array(cls, data):
        records = []
        for row in data:
            records.append(EpochRecord(int(row[0]), *(float(x) for x in row[1:])))
        return cls(records)

    def write_csv(self, path):
        """Write one row per epoch. Floats are written with repr() so files are
        exactly reproducible.
        """
        with open(path, "w", newline="") as out_fp:
            csv_out = writer(out_fp, lineterminator="\n")
            csv_out.writerow(self.COLUMNS)
            for record in self.records:
                csv_out.writerow([record.epoch] + [repr(float(x)) for x in record[1:]])


def predict(model, dataset, workers=None):
    """Predicted class of every clip, in dataset order.

    Args:
        model (Model): Model to evaluate.
        dataset (list(tuple(ClipFeatures, int))): Clips and labels.
        workers (int): Parallel workers (default from the environment).

    Returns:
        list(int): Predicted class per clip.
    """
    return ordered_map(
        lambda sample: int(np.argmax(model.forward(sample[0]).data)), dataset, workers=workers)


def check_dataset(config, dataset):
    expected = (config.F, config.H, config.W, config.C)
    if not dataset:
        raise ContractError("dataset is empty")
    for index, (clip, label) in enumerate(dataset):
        if clip.shape != expected:
            raise ContractError("clip %d has shape %r, model expects %r" % (
                index, clip.shape, expected))
        if not 0 <= label < config.num_classes:
            raise ContractError("clip %d label %d out of range for %d classes" % (
                index, label, config.num_classes))


class Trainer(object):
    """Mutable training state: model, momentum buffers, completed epochs and
    history. Batch order for epoch e is a permutation seeded by (seed, e), so
    an interrupted run resumed from a checkpoint matches an uninterrupted one.
    """
    __slots__ = ("config", "epoch", "history", "model", "velocity")

    def __init__(self, config, model=None, velocity=None, epoch=0, history=None):
        config.check()
        if model is None:
            model = Model.init(config.model)
        elif model.config != config.model:
            raise ConfigError("model config %r does not match training config %r" % (
                model.config, config.model))
        self.config = config
        self.epoch = epoch
        self.history = history or RunHistory()
        self.model = model
        if velocity is None:
            velocity = OrderedDict((name, np.zeros(value.shape)) for name, value in model.params.items())
        self.velocity = velocity

    @classmethod
    def resume(cls, config, path):
        """Restore a trainer from a checkpoint written by save().

        Args:
            config (TrainConfig): Training settings. The model config must match
                                  the checkpoint.
            path (str): Trainer checkpoint.

        Returns:
            Trainer: Restored trainer.
        """
        model, extras, tensors = Model.load_state(path)
        if "epoch" not in extras or HISTORY_TENSOR not in tensors:
            raise ConfigError("%r is not a trainer checkpoint" % (path,))
        try:
            epoch = int(extras.pop("epoch"))
        except ValueError:
            raise ConfigError("%r has an invalid epoch value" % (path,)) from None
        # validates the stored training keys
        convert_items(extras.items(), source=path)
        velocity = OrderedDict()
        for name, value in model.params.items():
            buffer = tensors.get(MOMENTUM_PREFIX + name)
            if buffer is None or buffer.shape != value.shape:
                raise ConfigError("%r is missing momentum for %r" % (path, name))
            velocity[name] = np.array(buffer)
        history = RunHistory.from_array(tensors[HISTORY_TENSOR])
        if len(history) != epoch:
            raise ConfigError("%r holds %d history records for %d epochs" % (
                path, len(history), epoch))
        LOG.info("Resuming from %r after epoch %d", path, epoch)
        return cls(config, model=model, velocity=velocity, epoch=epoch, history=history)

    def save(self, path):
        """Write the model plus momentum buffers, epoch counter and history.

        Args:
            path (str): Destination file.

        Returns:
            int: Bytes written.
        """
        extras = OrderedDict(
            (MOMENTUM_PREFIX + name, value) for name, value in self.velocity.items())
        extras[HISTORY_TENSOR] = self.history.as_array()
        return self.model.save(
            path, extra_items=self.config.items() + [("epoch", self.epoch)], extra_tensors=extras)

    def step(self, batch):
        """One SGD update on the mean total loss of `batch`.

        Args:
            batch (list(tuple(ClipFeatures, int))): Clips and labels.

        Returns:
            list(tuple(LossBreakdown, int)): Loss breakdown and prediction per clip,
                computed before the update.
        """
        eng = Engine()
        bound = self.model.bind(eng)
        batch_loss = None
        results = []
        for clip, label in batch:
            logits = self.model.forward(clip, eng=eng, bound=bound)
            loss, breakdown = total_loss(eng, logits, label, self.config.lam)
            if not isfinite(breakdown.total):
                raise NumericInputError("training loss is not finite (epoch %d)" % (self.epoch + 1,))
            batch_loss = loss if batch_loss is None else eng.add(batch_loss, loss)
            results.append((breakdown, int(np.argmax(logits.data))))
        batch_loss = eng.scale(batch_loss, 1.0 / len(batch))
        grads = self.model.gradients(bound, eng.backward(batch_loss))
        for name, grad in grads.items():
            velocity = self.config.momentum * self.velocity[name] + grad
            self.velocity[name] = velocity
            self.model.assign(name, self.model.params[name] - self.config.lr * velocity)
        return results

    def run_epoch(self, dataset):
        """Train for one epoch and record it in the history.

        Args:
            dataset (list(tuple(ClipFeatures, int))): Training set.

        Returns:
            EpochRecord: The new history record.
        """
        order = make_rng(self.config.seed, self.epoch).permutation(len(dataset))
        results = []
        for start in range(0, len(order), self.config.batch_size):
            batch = [dataset[index] for index in order[start:start + self.config.batch_size]]
            results.extend(self.step(batch))
        labels = [dataset[index][1] for index in order]
        metrics = evaluate(
            [pred for _, pred in results], labels, self.config.model.num_classes)
        count = float(len(results))
        self.epoch += 1
        record = EpochRecord(
            epoch=self.epoch,
            loss_total=sum(x.total for x, _ in results) / count,
            loss_ce=sum(x.cross_entropy for x, _ in results) / count,
            loss_compact=sum(x.compact_term for x, _ in results) / count,
            train_uar=float(metrics.uar),
            train_war=float(metrics.war))
        self.history.records.append(record)
        return record

    def fit(self, dataset, out_dir=None):
        """Train until config.epochs epochs are complete.

        When `out_dir` is given the checkpoint, history CSV and status report
        are written there after every epoch.

        Args:
            dataset (list(tuple(ClipFeatures, int))): Training set.
            out_dir (str): Output directory.

        Returns:
            RunHistory: Training history including final metrics.
        """
        check_dataset(self.config.model, dataset)
        pairs, cls_pairs = forward_pairs(self.config.model)
        LOG.info("Training %d parameters on %d clips (per forward: %d MACs, %d token pairs + %d CLS)",
                 self.model.parameter_count, len(dataset), forward_macs(self.config.model),
                 pairs, cls_pairs)
        status = None
        if out_dir is not None:
            status = Status.start(
                pathjoin(out_dir, STATUS_NAME), self.config.epochs, epoch=self.epoch)
        try:
            while self.epoch < self.config.epochs:
                record = self.run_epoch(dataset)
                LOG.info(
                    "Epoch %d/%d: loss %.6f (ce %.6f, compact %.6f), UAR %.4f, WAR %.4f",
                    record.epoch, self.config.epochs, record.loss_total, record.loss_ce,
                    record.loss_compact, record.train_uar, record.train_war)
                if out_dir is not None:
                    self.save(pathjoin(out_dir, CHECKPOINT_NAME))
                    self.history.write_csv(pathjoin(out_dir, HISTORY_NAME))
                    status.epoch = self.epoch
                    status.loss = record.loss_total
                    status.war = record.train_war
                    status.report()
            labels = [label for _, label in dataset]
            self.history.final = evaluate(
                predict(self.model, dataset), labels, self.config.model.num_classes)
            if status is not None:
                status.report(force=True)
        finally:
            if status is not None:
                status.cleanup()
        return self.history


def train(config, dataset, out_dir=None, resume=None):
    """Train a model.

    Args:
        config (TrainConfig): Training settings.
        dataset (list(tuple(ClipFeatures, int))): Training set.
        out_dir (str): Directory for the checkpoint, history and status report.
        resume (str): Trainer checkpoint to continue from.

    Returns:
        tuple(Model, RunHistory): Trained model and its history.
    """
    check_dataset(config.model, dataset)
    if resume is not None:
        trainer = Trainer.resume(config, resume)
    else:
        trainer = Trainer(config)
    history = trainer.fit(dataset, out_dir=out_dir)
    return trainer.model, history
