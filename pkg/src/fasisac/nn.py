"""Dense float64 networks with hand-written backprop, Adam, soft updates and checkpoints.

Only the two shapes DDPG needs are supported: a plain ReLU stack, and the critic
variant where an auxiliary input (the action) is concatenated after layer 0.
"""
from __future__ import annotations

import copy
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ConfigurationError, StaleCacheError


class Mlp:
    """Affine layers with ReLU between them and a linear or scaled-tanh head.

    ``late_concat_dim`` (critic only) widens layer 1's input so that the aux input
    is appended to layer 0's activations before layer 1.
    """

    def __init__(self, layer_dims, output_activation="linear", output_scale=1.0,
                 late_concat_dim=None, rng=None, final_init=3e-3):
        layer_dims = [int(d) for d in layer_dims]
        if len(layer_dims) < 2 or min(layer_dims) < 1:
            raise ConfigurationError(f"bad layer_dims {layer_dims}")
        if output_activation not in ("linear", "tanh"):
            raise ConfigurationError(f"unknown output activation {output_activation!r}")
        if late_concat_dim is not None and len(layer_dims) < 3:
            raise ConfigurationError("late concatenation needs at least two layers")
        self.layer_dims = layer_dims
        self.output_activation = output_activation
        self.output_scale = float(output_scale)
        self.late_concat_dim = None if late_concat_dim is None else int(late_concat_dim)
        self.hidden_activation = "relu"
        self.version = 0
        rng = rng if rng is not None else np.random.default_rng()
        self.weights, self.biases = [], []
        n_layers = len(layer_dims) - 1
        for i in range(n_layers):
            fan_in = self.input_dim_of(i)
            fan_out = layer_dims[i + 1]
            bound = final_init if i == n_layers - 1 else 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
            self.biases.append(rng.uniform(-bound, bound, fan_out))

    def input_dim_of(self, layer: int) -> int:
        d = self.layer_dims[layer]
        if layer == 1 and self.late_concat_dim is not None:
            d += self.late_concat_dim
        return d

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    def params(self) -> list[np.ndarray]:
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    def touch(self):
        self.version += 1

    def copy(self) -> "Mlp":
        return copy.deepcopy(self)

    def __call__(self, inputs, aux=None):
        return forward(self, inputs, aux)[0]


@dataclass
class ForwardCache:
    net_id: int
    version: int
    squeeze: bool
    layer_inputs: list  # input to each affine layer
    pre_acts: list  # affine outputs
    output: np.ndarray


def _as_batch(x, dim, name):
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != dim:
        raise ConfigurationError(f"{name} has shape {x.shape}, expected (*, {dim})")
    return x, squeeze


def forward(net: Mlp, inputs, aux=None):
    """Return (outputs, cache). Accepts a single vector or a (batch, dim) array."""
    x, squeeze = _as_batch(inputs, net.layer_dims[0], "input")
    if net.late_concat_dim is not None:
        if aux is None:
            raise ConfigurationError("this network needs an aux input")
        a, _ = _as_batch(aux, net.late_concat_dim, "aux input")
        if a.shape[0] != x.shape[0]:
            raise ConfigurationError("input and aux batch sizes differ")
    elif aux is not None:
        raise ConfigurationError("aux input given to a network without late concatenation")
    layer_inputs, pre_acts = [], []
    h = x
    last = net.num_layers - 1
    for i, (W, b) in enumerate(zip(net.weights, net.biases)):
        if i == 1 and net.late_concat_dim is not None:
            h = np.concatenate([h, a], axis=1)
        layer_inputs.append(h)
        z = h @ W + b
        pre_acts.append(z)
        if i < last:
            h = np.maximum(z, 0.0)
        elif net.output_activation == "tanh":
            h = net.output_scale * np.tanh(z)
        else:
            h = z
    out = h[0] if squeeze else h
    return out, ForwardCache(id(net), net.version, squeeze, layer_inputs, pre_acts, h)


@dataclass
class Gradients:
    weights: list
    biases: list
    input: np.ndarray
    aux: np.ndarray | None

    def params(self) -> list[np.ndarray]:
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out


def backward(net: Mlp, cache: ForwardCache, output_grad) -> Gradients:
    """Reverse-mode gradients of sum(output * output_grad)."""
    if cache.net_id != id(net) or cache.version != net.version:
        raise StaleCacheError("forward cache does not belong to this network state")
    g = np.asarray(output_grad, dtype=np.float64)
    if cache.squeeze:
        g = g[None, :] if g.ndim == 1 else g
    if g.shape != cache.output.shape:
        raise ConfigurationError(f"output_grad shape {g.shape} != output {cache.output.shape}")
    last = net.num_layers - 1
    dWs = [None] * net.num_layers
    dbs = [None] * net.num_layers
    aux_grad = None
    for i in range(last, -1, -1):
        z = cache.pre_acts[i]
        if i == last:
            if net.output_activation == "tanh":
                g = g * net.output_scale * (1.0 - np.tanh(z) ** 2)
        else:
            g = g * (z > 0)
        h = cache.layer_inputs[i]
        dWs[i] = h.T @ g
        dbs[i] = g.sum(axis=0)
        g = g @ net.weights[i].T
        if i == 1 and net.late_concat_dim is not None:
            split = net.layer_dims[1]
            aux_grad = g[:, split:]
            g = g[:, :split]
    if cache.squeeze:
        g = g[0]
        aux_grad = None if aux_grad is None else aux_grad[0]
    return Gradients(dWs, dbs, g, aux_grad)


@dataclass
class AdamState:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: list = field(default_factory=list)
    second_moment: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params, learning_rate=1e-3, **kw) -> "AdamState":
        return cls(learning_rate=learning_rate, first_moment=[np.zeros_like(p) for p in params],
                   second_moment=[np.zeros_like(p) for p in params], **kw)


def adam_step(state: AdamState, params, grads):
    """In-place bias-corrected Adam descent step on ``params``."""
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ConfigurationError("parameter, gradient and moment lists differ in length")
    state.step_count += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step_count
    c2 = 1.0 - b2 ** state.step_count
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        if p.shape != g.shape:
            raise ConfigurationError(f"gradient shape {g.shape} != parameter {p.shape}")
        if not (p.flags.c_contiguous and m.flags.c_contiguous and v.flags.c_contiguous):
            raise ConfigurationError("parameters and moments must be C-contiguous")
        kernels.adam_update(p.reshape(-1), np.ascontiguousarray(g, dtype=np.float64).reshape(-1),
                            m.reshape(-1), v.reshape(-1), state.learning_rate, b1, b2,
                            state.epsilon, c1, c2)
    return params, state


def soft_update(target_params, online_params, tau: float):
    """theta' <- tau * theta + (1 - tau) * theta', in place."""
    if not 0.0 < tau <= 1.0:
        raise ConfigurationError("tau must lie in (0, 1]")
    for tp, p in zip(target_params, online_params):
        if tp.shape != p.shape:
            raise ConfigurationError("target/online shapes differ")
        if not tp.flags.c_contiguous:
            raise ConfigurationError("target parameters must be C-contiguous")
        kernels.soft_update(tp.reshape(-1), np.ascontiguousarray(p).reshape(-1), tau)
    return target_params


# -- checkpoints -----------------------------------------------------------------------------
# Layout (all little-endian):
#   8 bytes   magic b"FASNNCK\x01" (last byte = format version)
#   4 bytes   uint32 header length H
#   H bytes   UTF-8 JSON header: {"networks": [...], "optimizers": [...], "meta": {...}}
#   payload   float64 arrays, row-major, in the order listed by the header
# Each network entry: name, layer_dims, output_activation, output_scale, late_concat_dim,
# version, arrays=[{"shape": [...]}, ...] (W0, b0, W1, b1, ...).
# Each optimizer entry: name, learning_rate, beta1, beta2, epsilon, step_count,
# arrays (first moments then second moments).

CHECKPOINT_MAGIC = b"FASNNCK\x01"


def save_checkpoint(path, networks: dict, optimizers: dict | None = None, meta: dict | None = None):
    optimizers = optimizers or {}
    header = {"networks": [], "optimizers": [], "meta": meta or {}}
    payload = []
    for name, net in networks.items():
        arrays = net.params()
        header["networks"].append({
            "name": name, "layer_dims": net.layer_dims,
            "output_activation": net.output_activation, "output_scale": net.output_scale,
            "late_concat_dim": net.late_concat_dim, "version": net.version,
            "arrays": [{"shape": list(a.shape)} for a in arrays]})
        payload += arrays
    for name, st in optimizers.items():
        arrays = list(st.first_moment) + list(st.second_moment)
        header["optimizers"].append({
            "name": name, "learning_rate": st.learning_rate, "beta1": st.beta1,
            "beta2": st.beta2, "epsilon": st.epsilon, "step_count": st.step_count,
            "arrays": [{"shape": list(a.shape)} for a in arrays]})
        payload += arrays
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(Path(path), "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for a in payload:
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Return (networks, optimizers, meta) dicts."""
    data = Path(path).read_bytes()
    if data[:8] != CHECKPOINT_MAGIC:
        raise ConfigurationError(f"{path}: not a checkpoint (bad magic/version)")
    (hlen,) = struct.unpack("<I", data[8:12])
    header = json.loads(data[12:12 + hlen].decode("utf-8"))
    offset = 12 + hlen

    def take(shape):
        nonlocal offset
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=offset).astype(np.float64)
        offset += 8 * count
        return arr.reshape(shape)

    networks = {}
    for spec in header["networks"]:
        net = Mlp(spec["layer_dims"], spec["output_activation"], spec["output_scale"],
                  spec["late_concat_dim"], rng=np.random.default_rng(0))
        arrays = [take(a["shape"]) for a in spec["arrays"]]
        net.weights = arrays[0::2]
        net.biases = arrays[1::2]
        net.version = spec.get("version", 0)
        networks[spec["name"]] = net
    optimizers = {}
    for spec in header["optimizers"]:
        arrays = [take(a["shape"]) for a in spec["arrays"]]
        half = len(arrays) // 2
        optimizers[spec["name"]] = AdamState(
            learning_rate=spec["learning_rate"], beta1=spec["beta1"], beta2=spec["beta2"],
            epsilon=spec["epsilon"], step_count=spec["step_count"],
            first_moment=arrays[:half], second_moment=arrays[half:])
    if offset != len(data):
        raise ConfigurationError(f"{path}: {len(data) - offset} trailing bytes")
    return networks, optimizers, header["meta"]
