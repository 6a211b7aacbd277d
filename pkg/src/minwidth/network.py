"""Feed-forward networks with per-neuron activations.

A network is a chain of layers ``h -> act(W h + b)`` followed by a final
affine map that applies no activation.  Activations are tagged per neuron,
so a single layer can mix e.g. Floor and Identity channels.  Networks are
immutable values; evaluation is pure and safe to call concurrently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ParseError, StructuralError

ACTIVATION_TAGS = ("LeakyReLU", "ReLU", "Abs", "Floor", "Step", "UOE", "Identity")


@dataclass(frozen=True)
class ActivationKind:
    """One scalar activation.  ``alpha`` is only meaningful for LeakyReLU."""

    tag: str
    alpha: float | None = None

    def __post_init__(self):
        if self.tag not in ACTIVATION_TAGS:
            raise StructuralError(f"unknown activation tag {self.tag!r}")
        if self.tag == "LeakyReLU":
            if self.alpha is None or not (0.0 < self.alpha < 1.0):
                raise StructuralError("LeakyReLU needs alpha strictly in (0, 1)")
        elif self.alpha is not None:
            raise StructuralError(f"{self.tag} takes no alpha parameter")

    def scalar(self, z):
        """Apply the activation elementwise to an array."""
        z = np.asarray(z, dtype=float)
        if self.tag == "LeakyReLU":
            return np.where(z >= 0.0, z, self.alpha * z)
        if self.tag == "ReLU":
            return np.maximum(z, 0.0)
        if self.tag == "Abs":
            return np.abs(z)
        if self.tag == "Floor":
            return np.floor(z)
        if self.tag == "Step":
            return (z > 0.0).astype(float)
        if self.tag == "UOE":
            from . import uoe1d  # deferred: uoe1d imports this module

            return uoe1d.uoe_eval(z)
        return z  # Identity


IDENTITY = ActivationKind("Identity")
ABS = ActivationKind("Abs")
FLOOR = ActivationKind("Floor")
RELU = ActivationKind("ReLU")
UOE = ActivationKind("UOE")


def leaky(alpha):
    return ActivationKind("LeakyReLU", alpha)


@dataclass(frozen=True)
class Layer:
    weight: np.ndarray  # (out_width, in_width)
    bias: np.ndarray  # (out_width,)
    activations: tuple[ActivationKind, ...]

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.weight, dtype=float))
        b = np.asarray(self.bias, dtype=float).reshape(-1)
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)
        acts = tuple(self.activations)
        object.__setattr__(self, "activations", acts)
        if w.shape[0] != b.shape[0] or w.shape[0] != len(acts):
            raise StructuralError(
                f"layer rows {w.shape[0]}, bias {b.shape[0]}, "
                f"activations {len(acts)} must all agree"
            )

    @property
    def in_width(self):
        return self.weight.shape[1]

    @property
    def out_width(self):
        return self.weight.shape[0]


def uniform_layer(weight, bias, kind: ActivationKind) -> Layer:
    """Layer whose neurons all share one activation."""
    w = np.atleast_2d(np.asarray(weight, dtype=float))
    return Layer(w, bias, (kind,) * w.shape[0])


@dataclass(frozen=True)
class Affine:
    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.weight, dtype=float))
        b = np.asarray(self.bias, dtype=float).reshape(-1)
        if w.shape[0] != b.shape[0]:
            raise StructuralError("affine weight rows and bias length differ")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)

    @property
    def in_width(self):
        return self.weight.shape[1]

    @property
    def out_width(self):
        return self.weight.shape[0]


@dataclass(frozen=True)
class Network:
    """Layered network of the form  affine ∘ act_L ∘ ... ∘ act_1 ∘ affine_1."""

    layers: tuple[Layer, ...]
    final_affine: Affine
    declared_width: int

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.declared_width < 1:
            raise StructuralError("declared_width must be positive")
        prev = None
        for i, layer in enumerate(self.layers):
            if prev is not None and layer.in_width != prev:
                raise StructuralError(
                    f"layer {i} expects input width {layer.in_width}, got {prev}"
                )
            if layer.out_width > self.declared_width:
                raise StructuralError(
                    f"layer {i} width {layer.out_width} exceeds "
                    f"declared width {self.declared_width}"
                )
            prev = layer.out_width
        if prev is not None and self.final_affine.in_width != prev:
            raise StructuralError("final affine does not chain with last layer")

    @property
    def in_width(self):
        if self.layers:
            return self.layers[0].in_width
        return self.final_affine.in_width

    @property
    def out_width(self):
        return self.final_affine.out_width

    @property
    def depth(self):
        return len(self.layers)

    def hidden_widths(self):
        return [layer.out_width for layer in self.layers]

    def activation_tags(self):
        """Set of activation tags actually used by hidden neurons."""
        tags = set()
        for layer in self.layers:
            for act in layer.activations:
                tags.add(act.tag)
        return tags

    def __call__(self, x):
        return eval_network(self, x)


def identity_network(dim: int, declared_width: int | None = None) -> Network:
    return Network((), Affine(np.eye(dim), np.zeros(dim)), declared_width or dim)


def affine_network(weight, bias, declared_width: int | None = None) -> Network:
    aff = Affine(weight, bias)
    return Network((), aff, declared_width or max(aff.in_width, aff.out_width))


def eval_network(net: Network, x) -> np.ndarray:
    """Evaluate the network at a single point."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != net.in_width:
        raise StructuralError(
            f"input has length {x.shape[0]}, network expects {net.in_width}"
        )
    return eval_batch(net, x[None, :])[0]


def eval_batch(net: Network, xs) -> np.ndarray:
    """Evaluate on an (n, in_width) batch; returns (n, out_width)."""
    h = np.atleast_2d(np.asarray(xs, dtype=float))
    if h.shape[1] != net.in_width:
        raise StructuralError(
            f"batch has width {h.shape[1]}, network expects {net.in_width}"
        )
    for layer in net.layers:
        z = h @ layer.weight.T + layer.bias
        cols = []
        for j, act in enumerate(layer.activations):
            cols.append(act.scalar(z[:, j]))
        h = np.stack(cols, axis=1)
    return h @ net.final_affine.weight.T + net.final_affine.bias


def compose(outer: Network, inner: Network) -> Network:
    """Network computing outer(inner(x)) exactly.

    The inner final affine is fused into the outer first layer (or into the
    outer final affine when the outer net has no layers), so the interface
    width between the two nets never materializes as a hidden layer.
    """
    if inner.out_width != outer.in_width:
        raise StructuralError(
            f"inner output width {inner.out_width} != outer input width {outer.in_width}"
        )
    fw, fb = inner.final_affine.weight, inner.final_affine.bias
    if outer.layers:
        first = outer.layers[0]
        fused = Layer(first.weight @ fw, first.weight @ fb + first.bias, first.activations)
        layers = inner.layers + (fused,) + outer.layers[1:]
        final = outer.final_affine
    else:
        layers = inner.layers
        ow, ob = outer.final_affine.weight, outer.final_affine.bias
        final = Affine(ow @ fw, ow @ fb + ob)
    width = max(outer.declared_width, inner.declared_width)
    return Network(layers, final, width)


def compose_chain(nets: Sequence[Network]) -> Network:
    """Compose nets applied left-to-right: nets[0] first."""
    if not nets:
        raise StructuralError("cannot compose an empty chain")
    out = nets[0]
    for net in nets[1:]:
        out = compose(net, out)
    return out


def _act_to_json(act: ActivationKind):
    if act.tag == "LeakyReLU":
        return {"tag": "LeakyReLU", "alpha": act.alpha}
    return {"tag": act.tag}


def serialize(net: Network) -> bytes:
    """JSON document; floats keep full round-trip precision."""
    doc = {
        "declared_width": net.declared_width,
        "layers": [
            {
                "weight": layer.weight.tolist(),
                "bias": layer.bias.tolist(),
                "activations": [_act_to_json(a) for a in layer.activations],
            }
            for layer in net.layers
        ],
        "final_affine": {
            "weight": net.final_affine.weight.tolist(),
            "bias": net.final_affine.bias.tolist(),
        },
    }
    return json.dumps(doc).encode("utf-8")


def _parse_matrix(obj, where):
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise ParseError(where, "expected a non-empty list of rows")
    ncols = len(obj[0])
    for r in obj:
        if len(r) != ncols:
            raise ParseError(where, "ragged rows")
    try:
        return np.array(obj, dtype=float)
    except (TypeError, ValueError):
        raise ParseError(where, "non-numeric entry") from None


def _parse_vector(obj, where):
    if not isinstance(obj, list):
        raise ParseError(where, "expected a list")
    try:
        return np.array(obj, dtype=float)
    except (TypeError, ValueError):
        raise ParseError(where, "non-numeric entry") from None


def _parse_activation(obj, where):
    if not isinstance(obj, dict) or "tag" not in obj:
        raise ParseError(where, "expected an object with a 'tag'")
    tag = obj["tag"]
    if tag not in ACTIVATION_TAGS:
        raise ParseError(where, f"unknown tag {tag!r}")
    try:
        return ActivationKind(tag, obj.get("alpha"))
    except StructuralError as exc:
        raise ParseError(where, str(exc)) from None


def deserialize(data: bytes | str) -> Network:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError("<document>", f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ParseError("<document>", "expected a JSON object")
    for key in ("declared_width", "layers", "final_affine"):
        if key not in doc:
            raise ParseError(key, "missing field")
    if not isinstance(doc["declared_width"], int):
        raise ParseError("declared_width", "expected an integer")
    layers = []
    if not isinstance(doc["layers"], list):
        raise ParseError("layers", "expected a list")
    for i, entry in enumerate(doc["layers"]):
        where = f"layers[{i}]"
        if not isinstance(entry, dict):
            raise ParseError(where, "expected an object")
        w = _parse_matrix(entry.get("weight"), f"{where}.weight")
        b = _parse_vector(entry.get("bias"), f"{where}.bias")
        if b.shape[0] != w.shape[0]:
            raise ParseError(f"{where}.bias", "length does not match weight rows")
        acts_doc = entry.get("activations")
        if not isinstance(acts_doc, list) or len(acts_doc) != w.shape[0]:
            raise ParseError(f"{where}.activations", "length does not match weight rows")
        acts = tuple(
            _parse_activation(a, f"{where}.activations[{j}]") for j, a in enumerate(acts_doc)
        )
        layers.append(Layer(w, b, acts))
    fa = doc["final_affine"]
    if not isinstance(fa, dict):
        raise ParseError("final_affine", "expected an object")
    w = _parse_matrix(fa.get("weight"), "final_affine.weight")
    b = _parse_vector(fa.get("bias"), "final_affine.bias")
    if b.shape[0] != w.shape[0]:
        raise ParseError("final_affine.bias", "length does not match weight rows")
    try:
        return Network(tuple(layers), Affine(w, b), doc["declared_width"])
    except StructuralError as exc:
        raise ParseError("<document>", str(exc)) from None
