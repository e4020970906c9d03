# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Model configuration, parameters, forward pass and checkpoint I/O."""
from collections import namedtuple, OrderedDict
from logging import getLogger

import numpy as np

from ..common.config import convert_items
from ..common.exceptions import ConfigError, DimensionError
from ..common.storage import checkpoint_size, read_checkpoint, write_checkpoint
from ..common.tensor import Engine
from ..common.utils import make_rng
from .attention import (
    attention_param_specs, AttentionParams, BlockParams, full_block, FullBlockParams,
    logo_block, mlp_param_specs, MlpParams, pool_param_specs, PoolParams, POOL_MODES, WindowSpec)
from .cost import ATTENTION_FULL, ATTENTION_LOGO
from .embedding import assemble, embed_param_specs, EmbedParams, project
from .params import INIT_FAN_IN, INIT_ZEROS, initialize, ParamSpec

__all__ = ("ATTENTIONS", "Model", "ModelConfig", "param_specs")

LOG = getLogger(__name__)

ATTENTIONS = (ATTENTION_LOGO, ATTENTION_FULL)
MAX_SEED = 2 ** 64 - 1
MODEL_KEYS = ("F", "H", "W", "C", "d", "N", "heads", "window", "pool_mode", "attention",
              "num_classes", "seed")


class ModelConfig(namedtuple(
        "ModelConfig", MODEL_KEYS,
        defaults=(8, 4, 4, 16, 64, 2, 8, WindowSpec(2, 2, 2), "average", ATTENTION_LOGO, 7, 0))):
    """Model hyperparameters. Defaults describe a desk-scale model."""
    __slots__ = ()

    @classmethod
    def from_mapping(cls, mapping):
        """Build a config from typed values, e.g. the output of load_config().
        Keys that are not model keys are ignored.

        Args:
            mapping (dict): Typed values.

        Returns:
            ModelConfig: Validated config.
        """
        values = {key: mapping[key] for key in MODEL_KEYS if key in mapping}
        if "window" in values:
            values["window"] = WindowSpec(*values["window"])
        config = cls(**values)
        config.check()
        return config

    @property
    def head_dim(self):
        return self.d // self.heads

    def check(self):
        """Raise ConfigError (WindowSpecError for window extents) naming the first
        violated invariant.
        """
        for key in ("F", "H", "W", "C", "d", "N", "heads"):
            if getattr(self, key) < 1:
                raise ConfigError("%s must be at least 1, got %d" % (key, getattr(self, key)))
        if self.d % self.heads:
            raise ConfigError("d=%d is not divisible by heads=%d" % (self.d, self.heads))
        if self.num_classes < 2:
            raise ConfigError("num_classes must be at least 2, got %d" % (self.num_classes,))
        if self.pool_mode not in POOL_MODES:
            raise ConfigError("pool_mode must be one of %s, got %r" % (
                ", ".join(POOL_MODES), self.pool_mode))
        if self.attention not in ATTENTIONS:
            raise ConfigError("attention must be one of %s, got %r" % (
                ", ".join(ATTENTIONS), self.attention))
        if not 0 <= self.seed <= MAX_SEED:
            raise ConfigError("seed must be a 64-bit unsigned integer, got %d" % (self.seed,))
        if not isinstance(self.window, WindowSpec) or len(self.window) != 3:
            raise ConfigError("window must be a WindowSpec, got %r" % (self.window,))
        self.window.check(self.F, self.H, self.W)

    def items(self):
        """Config as ordered (key, value) pairs for checkpoint storage."""
        return [(key, tuple(value) if key == "window" else value)
                for key, value in zip(MODEL_KEYS, self)]


def param_specs(config):
    """Declare every model parameter in initialization and storage order.

    Args:
        config (ModelConfig): Model configuration.

    Returns:
        OrderedDict(str, ParamSpec): Parameter declarations.
    """
    specs = embed_param_specs(config.F, config.H, config.W, config.C, config.d)
    for index in range(config.N):
        prefix = "blocks.%d." % (index,)
        if config.attention == ATTENTION_FULL:
            specs.update(attention_param_specs(prefix + "full.", config.d, config.heads))
        else:
            specs.update(attention_param_specs(prefix + "local.", config.d, config.heads))
            specs.update(attention_param_specs(prefix + "global.", config.d, config.heads))
            specs.update(pool_param_specs(
                prefix + "pool.", config.d, config.window, config.pool_mode))
        specs.update(mlp_param_specs(prefix + "mlp.", config.d))
    specs["head.weight"] = ParamSpec((config.d, config.num_classes), INIT_FAN_IN)
    specs["head.bias"] = ParamSpec((config.num_classes,), INIT_ZEROS)
    return specs


def _checked(name, value, shape):
    value = np.array(value, dtype=np.float64)
    if value.shape != tuple(shape):
        raise ConfigError("parameter %r has shape %r, expected %r" % (name, value.shape, tuple(shape)))
    value.setflags(write=False)
    return value


def _group(fields, tensors, prefix):
    return fields(**{name: tensors[prefix + name] for name in fields._fields})


class Model(object):
    """Embedding, N attention blocks and a linear classification head applied to
    the final CLS token.

    Attributes:
        config (ModelConfig): Hyperparameters.
        params (OrderedDict(str, numpy.ndarray)): Parameter values by name.
    """
    __slots__ = ("config", "params")

    def __init__(self, config, params):
        config.check()
        specs = param_specs(config)
        missing = [name for name in specs if name not in params]
        if missing:
            raise ConfigError("missing parameter %r" % (missing[0],))
        self.config = config
        self.params = OrderedDict()
        for name, spec in specs.items():
            self.params[name] = _checked(name, params[name], spec.shape)

    @classmethod
    def init(cls, config):
        """Create a freshly initialized model. Parameters are a deterministic
        function of config.seed.

        Args:
            config (ModelConfig): Validated configuration.

        Returns:
            Model: New model.
        """
        config.check()
        params = initialize(param_specs(config), make_rng(config.seed))
        LOG.debug("initialized %d parameter tensors (seed %d)", len(params), config.seed)
        return cls(config, params)

    @property
    def blocks(self):
        return self.groups(self.params)[1]

    @property
    def embed(self):
        return self.groups(self.params)[0]

    @property
    def head_weight(self):
        return self.params["head.weight"]

    @property
    def head_bias(self):
        return self.params["head.bias"]

    @property
    def parameter_count(self):
        return sum(value.size for value in self.params.values())

    def assign(self, name, value):
        """Replace the value of parameter `name`. Shape must be unchanged."""
        if name not in self.params:
            raise ConfigError("unknown parameter %r" % (name,))
        self.params[name] = _checked(name, value, self.params[name].shape)

    def bind(self, eng):
        """Create one engine leaf per parameter.

        Args:
            eng (Engine): Engine the forward pass will run on.

        Returns:
            OrderedDict(str, Tensor): Leaves by parameter name.
        """
        return OrderedDict((name, eng.leaf(value)) for name, value in self.params.items())

    def groups(self, tensors):
        """Arrange named values into embedding, block and head groups.

        Args:
            tensors (dict(str, object)): Values by parameter name.

        Returns:
            tuple(EmbedParams, list, object, object): Embedding group, one
                BlockParams (or FullBlockParams) per block, head weight and
                head bias.
        """
        embed = _group(EmbedParams, tensors, "embed.")
        blocks = []
        for index in range(self.config.N):
            prefix = "blocks.%d." % (index,)
            mlp = _group(MlpParams, tensors, prefix + "mlp.")
            if self.config.attention == ATTENTION_FULL:
                blocks.append(FullBlockParams(
                    attn=_group(AttentionParams, tensors, prefix + "full."), mlp=mlp))
                continue
            pool = PoolParams(
                mode=self.config.pool_mode,
                weight=tensors.get(prefix + "pool.weight"),
                bias=tensors.get(prefix + "pool.bias"))
            blocks.append(BlockParams(
                local_attn=_group(AttentionParams, tensors, prefix + "local."),
                global_attn=_group(AttentionParams, tensors, prefix + "global."),
                pool=pool,
                mlp=mlp))
        return embed, blocks, tensors["head.weight"], tensors["head.bias"]

    def forward(self, clip, eng=None, bound=None, return_cls=False):
        """Compute class logits for one clip.

        Args:
            clip (ClipFeatures): Input features, geometry must match the config.
            eng (Engine): Engine to run on. An untraced engine is used if omitted.
            bound (dict(str, Tensor)): Parameter leaves from bind(eng), created
                                       if omitted.
            return_cls (bool): Also return the final CLS feature.

        Returns:
            Tensor: Logits of shape (num_classes,), or (logits, cls feature of
                shape (d,)) when `return_cls` is set.
        """
        cfg = self.config
        if clip.shape != (cfg.F, cfg.H, cfg.W, cfg.C):
            raise DimensionError("clip shape %r does not match model geometry %r" % (
                clip.shape, (cfg.F, cfg.H, cfg.W, cfg.C)))
        if eng is None:
            eng = Engine(trace=False)
        if bound is None:
            bound = self.bind(eng)
        embed, blocks, head_weight, head_bias = self.groups(bound)
        grid = assemble(eng, project(eng, clip, embed), embed, cfg.H, cfg.W)
        for block in blocks:
            if cfg.attention == ATTENTION_FULL:
                grid = full_block(eng, grid, block)
            else:
                grid = logo_block(eng, grid, block, cfg.window)
        cls = grid.cls(eng)
        logits = eng.add(
            eng.reshape(eng.matmul(cls, head_weight), (cfg.num_classes,)), head_bias)
        if return_cls:
            return logits, eng.reshape(cls, (cfg.d,))
        return logits

    def gradients(self, bound, grads):
        """Gradient array for every parameter, zeros where none reached it.

        Args:
            bound (dict(str, Tensor)): Leaves from bind().
            grads (dict(int, Tensor)): Result of Engine.backward().

        Returns:
            OrderedDict(str, numpy.ndarray): Gradients by parameter name.
        """
        result = OrderedDict()
        for name, leaf in bound.items():
            grad = grads.get(leaf.grad_id)
            result[name] = np.zeros(leaf.shape) if grad is None else grad.data
        return result

    def checkpoint_size(self, extra_items=(), extra_shapes=None):
        shapes = OrderedDict((name, value.shape) for name, value in self.params.items())
        shapes.update(extra_shapes or {})
        return checkpoint_size(self.config.items() + list(extra_items), shapes)

    def save(self, path, extra_items=(), extra_tensors=None):
        """Write the model to a checkpoint file.

        Args:
            path (str): Destination file.
            extra_items (iterable(tuple(str, object))): Additional config pairs.
            extra_tensors (OrderedDict(str, numpy.ndarray)): Additional tensors
                                                             stored after the parameters.

        Returns:
            int: Bytes written.
        """
        tensors = OrderedDict(self.params)
        for name, value in (extra_tensors or {}).items():
            if name in tensors:
                raise ConfigError("extra tensor %r collides with a parameter" % (name,))
            tensors[name] = value
        return write_checkpoint(path, self.config.items() + list(extra_items), tensors)

    @classmethod
    def load(cls, path):
        """Load a model from a checkpoint file, ignoring extra content.

        Args:
            path (str): Checkpoint file.

        Returns:
            Model: Loaded model.
        """
        return cls.load_state(path)[0]

    @classmethod
    def load_state(cls, path):
        """Load a model plus the extra config pairs and tensors stored with it.

        Args:
            path (str): Checkpoint file.

        Returns:
            tuple(Model, dict(str, str), OrderedDict(str, numpy.ndarray)):
                Model, raw extra config values and extra tensors.
        """
        items, tensors = read_checkpoint(path)
        model_items = [(key, value) for key, value in items if key in MODEL_KEYS]
        extras = {key: value for key, value in items if key not in MODEL_KEYS}
        config = ModelConfig.from_mapping(convert_items(model_items, source=path))
        model = cls(config, tensors)
        extra_tensors = OrderedDict(
            (name, value) for name, value in tensors.items() if name not in model.params)
        LOG.debug("loaded %d parameters from %r", model.parameter_count, path)
        return model, extras, extra_tensors
