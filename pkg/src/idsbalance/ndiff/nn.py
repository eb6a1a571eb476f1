"""Layer stacks assembled from :class:`LayerSpec` lists."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import ConfigurationError, ShapeError
from . import checkpoint
from . import tensor as T
from .ops import (activation_forward, batch_norm_forward, conv1d_forward, dense_forward,
                  lstm_sequence, maxpool1d_forward)
from .tensor import Tensor, as_tensor

ACTIVATION_KINDS = ("relu", "sigmoid", "tanh", "softmax", "leaky_relu")
LAYER_KINDS = ("dense", "batch_norm", "conv1d", "maxpool1d", "lstm", "flatten") + ACTIVATION_KINDS


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    units: Optional[int] = None
    filters: Optional[int] = None
    kernel: Optional[int] = None
    pool: Optional[int] = None
    return_sequences: bool = False

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ConfigurationError(f"unknown layer kind {self.kind!r}")
        for name in ("units", "filters", "kernel", "pool"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ConfigurationError(f"{self.kind}: {name} must be positive")
        need = {"dense": ("units",), "lstm": ("units",), "conv1d": ("filters", "kernel"),
                "maxpool1d": ("pool",)}.get(self.kind, ())
        for name in need:
            if getattr(self, name) is None:
                raise ConfigurationError(f"{self.kind} layer needs {name}")

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v not in (None, False)}

    @classmethod
    def from_dict(cls, d: dict) -> "LayerSpec":
        return cls(**d)


def _glorot(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Layer:
    def __init__(self, spec: LayerSpec, in_shape: tuple, rng):
        self.spec = spec
        self.in_shape = in_shape
        self.params: dict = {}
        self.buffers: dict = {}
        self.out_shape = self._build(rng)

    def _build(self, rng) -> tuple:
        s, shape = self.spec, self.in_shape
        if s.kind == "dense":
            if len(shape) != 1:
                raise ConfigurationError(f"dense layer needs a flat input, got {shape}")
            self.params["W"] = Tensor(_glorot(rng, (shape[0], s.units), shape[0], s.units), True)
            self.params["b"] = Tensor(np.zeros(s.units), True)
            return (s.units,)
        if s.kind == "batch_norm":
            if len(shape) != 1:
                raise ConfigurationError("batch_norm expects flat features")
            self.params["scale"] = Tensor(np.ones(shape[0]), True)
            self.params["shift"] = Tensor(np.zeros(shape[0]), True)
            self.buffers["running_mean"] = np.zeros(shape[0])
            self.buffers["running_var"] = np.ones(shape[0])
            return shape
        if s.kind == "conv1d":
            if len(shape) != 2:
                raise ConfigurationError(f"conv1d expects (T, C) input, got {shape}")
            t, c = shape
            if t < s.kernel:
                raise ConfigurationError(f"conv1d kernel {s.kernel} longer than sequence {t}")
            self.params["K"] = Tensor(_glorot(rng, (s.filters, s.kernel, c), s.kernel * c,
                                              s.kernel * s.filters), True)
            self.params["b"] = Tensor(np.zeros(s.filters), True)
            return (t - s.kernel + 1, s.filters)
        if s.kind == "maxpool1d":
            if len(shape) != 2:
                raise ConfigurationError("maxpool1d expects (T, C) input")
            t = shape[0]
            return (t // s.pool if t >= s.pool else 1, shape[1])
        if s.kind == "lstm":
            if len(shape) != 2:
                raise ConfigurationError("lstm expects (T, D) input")
            t, d = shape
            h = s.units
            for g in ("i", "f", "o", "c"):
                self.params[f"W_{g}"] = Tensor(_glorot(rng, (h + d, h), h + d, h), True)
                self.params[f"b_{g}"] = Tensor(np.ones(h) if g == "f" else np.zeros(h), True)
            return (t, h) if s.return_sequences else (h,)
        if s.kind == "flatten":
            return (int(np.prod(shape)),)
        return shape  # activations

    def forward(self, x: Tensor, training: bool) -> Tensor:
        s, p = self.spec, self.params
        if s.kind == "dense":
            return dense_forward(x, p["W"], p["b"])
        if s.kind == "batch_norm":
            return batch_norm_forward(x, p["scale"], p["shift"], training=training,
                                      running_mean=self.buffers["running_mean"],
                                      running_var=self.buffers["running_var"])
        if s.kind == "conv1d":
            return conv1d_forward(x, p["K"], p["b"])
        if s.kind == "maxpool1d":
            return maxpool1d_forward(x, s.pool, keep_remainder=False)[0]
        if s.kind == "lstm":
            return self._lstm(x)
        if s.kind == "flatten":
            return T.reshape(x, (x.shape[0], -1))
        return activation_forward(s.kind, x)

    def _lstm(self, x: Tensor) -> Tensor:
        return lstm_sequence(x, tuple(self.params[f"W_{g}"] for g in "ifoc"),
                             tuple(self.params[f"b_{g}"] for g in "ifoc"),
                             return_sequences=self.spec.return_sequences)


class Network:
    """A feed-forward stack of layers with named parameters."""

    def __init__(self, specs: Sequence[LayerSpec], input_shape: Sequence[int], seed=0):
        if not specs:
            raise ConfigurationError("a network needs at least one layer")
        self.specs = [s if isinstance(s, LayerSpec) else LayerSpec.from_dict(s) for s in specs]
        self.input_shape = tuple(int(v) for v in input_shape)
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        self.layers = []
        shape = self.input_shape
        for spec in self.specs:
            layer = Layer(spec, shape, rng)
            self.layers.append(layer)
            shape = layer.out_shape
        self.output_shape = shape

    def __call__(self, x, training: bool = False) -> Tensor:
        return self.forward(x, training)

    def forward(self, x, training: bool = False) -> Tensor:
        x = as_tensor(x)
        if tuple(x.shape[1:]) != self.input_shape:
            raise ShapeError(f"network expects inputs of shape (N, {self.input_shape}), got {x.shape}")
        for layer in self.layers:
            x = layer.forward(x, training)
        return x

    def named_parameters(self) -> list:
        return [(f"{i}.{k}", v) for i, layer in enumerate(self.layers) for k, v in layer.params.items()]

    def parameters(self) -> list:
        return [p for _, p in self.named_parameters()]

    def count_parameters(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def state_dict(self) -> dict:
        state = {name: p.data.copy() for name, p in self.named_parameters()}
        for i, layer in enumerate(self.layers):
            for k, v in layer.buffers.items():
                state[f"{i}.{k}"] = v.copy()
        return state

    def load_state_dict(self, state: dict) -> None:
        for name, p in self.named_parameters():
            arr = np.asarray(state[name], dtype=np.float64)
            if arr.shape != p.shape:
                raise ShapeError(f"{name}: stored shape {arr.shape} != {p.shape}")
            p.data = arr.copy()
        for i, layer in enumerate(self.layers):
            for k in layer.buffers:
                layer.buffers[k][...] = state[f"{i}.{k}"]

    def to_bytes(self, extra: Optional[dict] = None) -> bytes:
        header = {"layers": [s.to_dict() for s in self.specs], "input_shape": list(self.input_shape),
                  "extra": extra or {}}
        return checkpoint.dumps(self.state_dict(), header)

    @classmethod
    def from_bytes(cls, buf: bytes) -> tuple:
        """Rebuild a network from :meth:`to_bytes` output; returns ``(network, extra)``."""
        tensors, header = checkpoint.loads(buf)
        net = cls([LayerSpec.from_dict(d) for d in header["layers"]], header["input_shape"])
        net.load_state_dict(tensors)
        return net, header.get("extra", {})
