"""Fully-connected ReLU classifier model: loading, evaluation, translation.

The model is a stack of dense layers. Hidden layers use ReLU, the final
layer is linear; classification is the argmax of the final layer's output
(the logits), no softmax. A neuron counts as *active* iff its
pre-activation is strictly positive; the per-run record of those branch
outcomes is the activation pattern.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


class NetworkFormatError(ValueError):
    """Weight file is not valid JSON or misses required structure."""


class NetworkShapeError(ValueError):
    """Layer dimensions are empty or mutually incompatible."""


class NetworkValueError(ValueError):
    """A weight or bias is NaN or infinite."""


RELU = "relu"
LINEAR = "linear"


@dataclass(frozen=True)
class Layer:
    """One dense layer. Row i of `weights` holds neuron i's incoming weights."""

    weights: np.ndarray  # shape (out, in)
    biases: np.ndarray   # shape (out,)
    activation: str      # "relu" or "linear"

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class Network:
    """Immutable stack of dense layers; validated on construction."""

    layers: tuple[Layer, ...]

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        _validate_layers(self.layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def hidden_sizes(self) -> tuple[int, ...]:
        return tuple(layer.out_dim for layer in self.layers[:-1])

    @property
    def hidden_count(self) -> int:
        return sum(self.hidden_sizes)


@dataclass(frozen=True)
class ForwardResult:
    """Concrete evaluation of one input: logits, label, branch record."""

    logits: np.ndarray            # shape (n,)
    label: int                    # smallest index attaining max(logits)
    pattern: np.ndarray           # bool, one bit per hidden neuron, layer-major
    per_layer_values: tuple[np.ndarray, ...] = field(default=())  # hidden states s^h


def _validate_layers(layers: tuple[Layer, ...]) -> None:
    if not layers:
        raise NetworkShapeError("network has no layers")
    prev_out = None
    for idx, layer in enumerate(layers):
        w, b = layer.weights, layer.biases
        if w.ndim != 2 or w.shape[0] == 0 or w.shape[1] == 0:
            raise NetworkShapeError(f"layer {idx}: weights must be a non-empty matrix, got shape {w.shape}")
        if b.ndim != 1 or b.shape[0] != w.shape[0]:
            raise NetworkShapeError(f"layer {idx}: {w.shape[0]} weight rows but {b.shape[0]} biases")
        if prev_out is not None and w.shape[1] != prev_out:
            raise NetworkShapeError(f"layer {idx}: expects {w.shape[1]} inputs but layer {idx - 1} outputs {prev_out}")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise NetworkValueError(f"layer {idx}: non-finite weight or bias")
        expected = LINEAR if idx == len(layers) - 1 else RELU
        if layer.activation != expected:
            raise NetworkShapeError(f"layer {idx}: activation must be '{expected}', got '{layer.activation}'")
        prev_out = w.shape[0]


def load_network(path) -> Network:
    """Load and validate a network from a JSON weight file.

    Expected document: {"layers": [{"weights": [[...]], "biases": [...],
    "activation": "relu"|"linear"}, ...]} with the last layer linear and
    all earlier layers relu.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise NetworkFormatError(f"{path}: not valid JSON: {exc}") from exc

    if not isinstance(doc, dict) or "layers" not in doc:
        raise NetworkFormatError(f"{path}: top-level object must contain 'layers'")
    raw_layers = doc["layers"]
    if not isinstance(raw_layers, list) or not raw_layers:
        raise NetworkFormatError(f"{path}: 'layers' must be a non-empty array")

    layers = []
    for idx, entry in enumerate(raw_layers):
        if not isinstance(entry, dict):
            raise NetworkFormatError(f"{path}: layer {idx} is not an object")
        missing = {"weights", "biases", "activation"} - entry.keys()
        if missing:
            raise NetworkFormatError(f"{path}: layer {idx} missing {sorted(missing)}")
        if entry["activation"] not in (RELU, LINEAR):
            raise NetworkFormatError(f"{path}: layer {idx} has unknown activation '{entry['activation']}'")
        try:
            weights = np.asarray(entry["weights"], dtype=np.float64)
            biases = np.asarray(entry["biases"], dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise NetworkFormatError(f"{path}: layer {idx} has non-numeric or ragged entries") from exc
        if weights.ndim != 2:
            raise NetworkShapeError(f"{path}: layer {idx} weights must be a matrix of rows")
        layers.append(Layer(weights=weights, biases=biases, activation=entry["activation"]))

    return Network(layers=tuple(layers))


def save_network(net: Network, path) -> None:
    """Write a network back out in the weight-file format (full precision)."""
    doc = {
        "layers": [
            {
                "weights": layer.weights.tolist(),
                "biases": layer.biases.tolist(),
                "activation": layer.activation,
            }
            for layer in net.layers
        ]
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def forward(net: Network, x: np.ndarray) -> ForwardResult:
    """Evaluate the network on one input, recording the activation pattern."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.input_dim,):
        raise ValueError(f"input has shape {x.shape}, network expects ({net.input_dim},)")

    value = x
    pattern_bits = []
    hidden_values = []
    for layer in net.layers:
        pre = layer.weights @ value + layer.biases
        if layer.activation == RELU:
            pattern_bits.append(pre > 0.0)
            value = np.maximum(pre, 0.0)
            hidden_values.append(value)
        else:
            value = pre

    logits = value
    pattern = np.concatenate(pattern_bits) if pattern_bits else np.zeros(0, dtype=bool)
    return ForwardResult(
        logits=logits,
        label=int(np.argmax(logits)),  # np.argmax returns the smallest index on ties
        pattern=pattern,
        per_layer_values=tuple(hidden_values),
    )


def emit_program(net: Network) -> str:
    """Render the network as a deterministic imperative-pseudocode listing.

    One block per hidden neuron (weighted-sum loop, bias add, `if (val > 0)`
    branch), straight-line blocks for the linear output layer, and an argmax
    epilogue. Inspection output only; nothing parses it back.
    """
    dims = [net.input_dim] + [layer.out_dim for layer in net.layers]
    lines = []
    lines.append(f"// fully connected ReLU classifier: {' -> '.join(str(d) for d in dims)}")
    lines.append("// s0 = input pixels; y = output logits (pre-softmax); label = argmax(y)")
    lines.append("")

    for h, layer in enumerate(net.layers, start=1):
        in_dim = layer.in_dim
        is_output = layer.activation == LINEAR
        for i in range(layer.out_dim):
            if is_output:
                lines.append(f"// output layer (linear), neuron {i}")
            else:
                lines.append(f"// layer {h}, neuron {i}")
            lines.append("val = 0.0;")
            lines.append(f"for (index = 0; index < {in_dim}; index++) {{")
            lines.append(f"    val += w{h}[{i}][index] * s{h - 1}[index];")
            lines.append("}")
            lines.append(f"val += b{h}[{i}];")
            if is_output:
                lines.append(f"y[{i}] = val;")
            else:
                lines.append(f"if (val > 0) {{ s{h}[{i}] = val; }} else {{ s{h}[{i}] = 0.0; }}")
            lines.append("")

    n = net.output_dim
    lines.append("// argmax epilogue")
    lines.append("label = 0;")
    lines.append("best = y[0];")
    lines.append(f"for (j = 1; j < {n}; j++) {{")
    lines.append("    if (y[j] > best) { best = y[j]; label = j; }")
    lines.append("}")
    lines.append("return label;")
    return "\n".join(lines) + "\n"
