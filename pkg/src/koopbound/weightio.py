"""JSON weight-file format: load/save with bit-exact float round-trips.

Schema (version 1):

    {
      "version": 1,
      "s_in": number,
      "layers": [
        {"name": str, "rows": int, "cols": int,
         "weights": [row-major numbers], "bias": [numbers],
         "activation": {"kind": str, "params": {...}}, "s": number}
      ],
      "head": {"kind": "gaussian"|"softmax"|"custom", "params": {...}}
    }

Floats are serialized with Python's shortest round-trip repr (at most 17
significant digits), so load(save(net)) reproduces the exact 64-bit
values.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .network import (
    CustomActivation,
    CustomHead,
    GaussianHead,
    Identity,
    LayerSpec,
    NetworkSpec,
    SmoothLeakyRelu,
    SoftmaxHead,
    ValidationError,
)


class WeightFileError(Exception):
    pass


def _activation_to_json(act) -> dict:
    if isinstance(act, Identity):
        return {"kind": "identity", "params": {}}
    if isinstance(act, SmoothLeakyRelu):
        return {"kind": "smooth_leaky_relu", "params": {"alpha": act.alpha, "mu": act.mu}}
    if isinstance(act, CustomActivation):
        return {
            "kind": "custom",
            "params": {
                "name": act.name,
                "derivative_sup": act.derivative_sup,
                "inverse_jacobian_sup": act.inverse_jacobian_sup,
            },
        }
    raise WeightFileError(f"unserializable activation {act!r}")


def _activation_from_json(doc: dict):
    kind = doc.get("kind")
    params = doc.get("params", {})
    if kind == "identity":
        return Identity()
    if kind == "smooth_leaky_relu":
        return SmoothLeakyRelu(**params)
    if kind == "custom":
        return CustomActivation(**params)
    raise WeightFileError(f"unknown activation kind {kind!r}")


def _head_to_json(head) -> dict:
    if isinstance(head, GaussianHead):
        return {"kind": "gaussian", "params": {"c": head.c}}
    if isinstance(head, SoftmaxHead):
        return {"kind": "softmax", "params": {"h_norm": head.h_norm}}
    if isinstance(head, CustomHead):
        return {"kind": "custom", "params": {"name": head.name, "h_norm": head.h_norm}}
    raise WeightFileError(f"unserializable head {head!r}")


def _head_from_json(doc: dict):
    kind = doc.get("kind")
    params = doc.get("params", {})
    if kind == "gaussian":
        return GaussianHead(**params)
    if kind == "softmax":
        return SoftmaxHead(**params)
    if kind == "custom":
        return CustomHead(**params)
    raise WeightFileError(f"unknown head kind {kind!r}")


def network_to_json_dict(net: NetworkSpec) -> dict:
    return {
        "version": 1,
        "s_in": net.s_in,
        "layers": [
            {
                "name": f"layer{j + 1}",
                "rows": layer.out_dim,
                "cols": layer.in_dim,
                "weights": [float(x) for x in layer.weight.reshape(-1)],
                "bias": [float(x) for x in layer.bias],
                "activation": _activation_to_json(layer.activation),
                "s": layer.s_out,
            }
            for j, layer in enumerate(net.layers)
        ],
        "head": _head_to_json(net.head),
    }


def network_from_json_dict(doc: dict) -> NetworkSpec:
    if doc.get("version") != 1:
        raise WeightFileError(f"unsupported weight-file version {doc.get('version')!r}")
    layers = []
    for j, rec in enumerate(doc.get("layers", []), start=1):
        try:
            rows, cols = int(rec["rows"]), int(rec["cols"])
            weights = np.asarray(rec["weights"], dtype=np.float64)
            if weights.size != rows * cols:
                raise WeightFileError(
                    f"layer {j}: {weights.size} weights for a {rows}x{cols} matrix"
                )
            layers.append(
                LayerSpec(
                    weight=weights.reshape(rows, cols),
                    bias=np.asarray(rec["bias"], dtype=np.float64),
                    activation=_activation_from_json(rec["activation"]),
                    s_out=float(rec["s"]),
                )
            )
        except KeyError as exc:
            raise WeightFileError(f"layer {j}: missing field {exc}") from exc
    if not layers:
        raise WeightFileError("weight file has no layers")
    net = NetworkSpec(
        input_dim=layers[0].in_dim,
        layers=layers,
        head=_head_from_json(doc.get("head", {})),
        s_in=float(doc["s_in"]),
    )
    net.validate()  # re-validates all structural invariants on load
    return net


def save_weights(net: NetworkSpec, path) -> None:
    Path(path).write_text(json.dumps(network_to_json_dict(net), indent=1) + "\n")


def load_weights(path) -> NetworkSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise WeightFileError(f"{path}: invalid JSON at line {exc.lineno}") from exc
    try:
        return network_from_json_dict(doc)
    except ValidationError as exc:
        raise WeightFileError(f"{path}: invalid network: {exc}") from exc
