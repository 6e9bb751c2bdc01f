"""Checkpoint persistence: one JSON text document, floats at 17 significant digits.

Top level: ``format_version`` (integer 1), ``curvature`` {raw, learnable},
``params`` (array of {name, kind, manifold, man_dim, shape, data}).  17
significant decimal digits round-trip float64 exactly, so save -> load is
bitwise.  Loading validates the schema, shapes, finiteness, and ball
membership of every manifold-point record; tampered files are rejected, not
repaired.
"""

from __future__ import annotations

import json
import math

import numpy as np

from ..autodiff import Tensor
from ..errors import DataFormatError
from ..manifolds import BALL_EPS, Euclidean, Manifold, PoincareBall
from ..nn import Module, Parameter
from ..tensors import ManifoldParameter

FORMAT_VERSION = 1


def _emit(obj, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            raise DataFormatError(f"cannot serialize non-finite value {v}")
        out.append(format(v, ".17g"))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _emit(item, out)
        out.append("]")
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(",")
            out.append(json.dumps(str(k)))
            out.append(":")
            _emit(v, out)
        out.append("}")
    else:
        raise DataFormatError(f"cannot serialize object of type {type(obj).__name__}")


def _param_record(name: str, p) -> dict:
    if isinstance(p, ManifoldParameter):
        kind = "manifold"
        man = "euclidean" if isinstance(p.manifold, Euclidean) else "poincare"
        man_dim = p.man_dim
        data = p.tensor.data
    else:
        kind, man, man_dim = "euclidean", "none", None
        data = p.data
    return {
        "name": name,
        "kind": kind,
        "manifold": man,
        "man_dim": man_dim,
        "shape": list(data.shape),
        "data": [float(v) for v in data.reshape(-1)],
    }


def checkpoint_state(manifold: Manifold, model: Module) -> dict:
    if isinstance(manifold, PoincareBall):
        curvature = {"raw": float(manifold.curvature.raw.data),
                     "learnable": manifold.curvature.learnable}
    else:
        curvature = {"raw": None, "learnable": False}
    return {
        "format_version": FORMAT_VERSION,
        "curvature": curvature,
        "params": [_param_record(name, p) for name, p in model.named_parameters()],
    }


def save_checkpoint(path: str, manifold: Manifold, model: Module) -> None:
    out: list[str] = []
    _emit(checkpoint_state(manifold, model), out)
    with open(path, "w", encoding="utf-8") as f:
        f.write("".join(out))
        f.write("\n")


def load_checkpoint(path: str) -> dict:
    """Parse and validate a checkpoint document; raises DataFormatError."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as e:
        raise DataFormatError(f"cannot read checkpoint: {e}") from None
    except json.JSONDecodeError as e:
        raise DataFormatError(f"checkpoint is not valid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise DataFormatError("checkpoint must be a JSON object")
    if "format_version" not in doc:
        raise DataFormatError("checkpoint is missing format_version")
    if doc["format_version"] != FORMAT_VERSION:
        raise DataFormatError(
            f"unsupported checkpoint format_version {doc['format_version']!r}, expected {FORMAT_VERSION}")
    cur = doc.get("curvature")
    if not isinstance(cur, dict) or "raw" not in cur or "learnable" not in cur:
        raise DataFormatError("checkpoint is missing the curvature record")
    if cur["raw"] is not None and not isinstance(cur["raw"], (int, float)):
        raise DataFormatError("curvature raw must be a number or null")
    params = doc.get("params")
    if not isinstance(params, list):
        raise DataFormatError("checkpoint is missing the params array")

    c_value = None
    if cur["raw"] is not None:
        c_value = math.log1p(math.exp(-abs(cur["raw"]))) + max(cur["raw"], 0.0)  # softplus

    for rec in params:
        if not isinstance(rec, dict):
            raise DataFormatError("each param record must be an object")
        for field in ("name", "kind", "manifold", "man_dim", "shape", "data"):
            if field not in rec:
                raise DataFormatError(f"param record missing field {field!r}")
        if rec["kind"] not in ("manifold", "euclidean"):
            raise DataFormatError(f"bad param kind {rec['kind']!r}")
        if rec["manifold"] not in ("poincare", "euclidean", "none"):
            raise DataFormatError(f"bad param manifold {rec['manifold']!r}")
        shape = tuple(rec["shape"])
        values = np.asarray(rec["data"], dtype=np.float64)
        if int(np.prod(shape, dtype=np.int64)) != values.size:
            raise DataFormatError(
                f"param {rec['name']!r}: shape {shape} does not match {values.size} values")
        if not np.all(np.isfinite(values)):
            raise DataFormatError(f"param {rec['name']!r} contains non-finite values")
        if rec["manifold"] == "poincare":
            if c_value is None:
                raise DataFormatError("ball-point parameters need a curvature record with a raw value")
            md = rec["man_dim"]
            if not isinstance(md, int) or not 0 <= md < len(shape):
                raise DataFormatError(f"param {rec['name']!r}: bad man_dim {md!r} for shape {shape}")
            pts = values.reshape(shape)
            norms = np.sqrt((pts * pts).sum(axis=md))
            if np.any(math.sqrt(c_value) * norms > (1.0 - BALL_EPS) * (1.0 + 1e-12)):
                raise DataFormatError(
                    f"param {rec['name']!r} has points outside the ball (tampered or stale file)")
    return doc


def restore_into(manifold: Manifold, model: Module, doc: dict) -> None:
    """Copy a validated checkpoint into a freshly built model, checking structure."""
    cur = doc["curvature"]
    if isinstance(manifold, PoincareBall):
        if cur["raw"] is None:
            raise DataFormatError("checkpoint has no curvature but the run uses the ball")
        if bool(cur["learnable"]) != manifold.curvature.learnable:
            raise DataFormatError(
                f"curvature learnable flag mismatch: checkpoint {cur['learnable']}, run {manifold.curvature.learnable}")
        manifold.curvature.raw.data[...] = float(cur["raw"])
    elif cur["raw"] is not None:
        raise DataFormatError("checkpoint carries ball curvature but the run is Euclidean")

    model_params = dict(model.named_parameters())
    records = {rec["name"]: rec for rec in doc["params"]}
    if set(model_params) != set(records):
        missing = sorted(set(model_params) - set(records))
        extra = sorted(set(records) - set(model_params))
        raise DataFormatError(f"parameter names mismatch: missing {missing}, unexpected {extra}")
    for name, p in model_params.items():
        rec = records[name]
        if isinstance(p, ManifoldParameter):
            expected_kind = "manifold"
            expected_man = "euclidean" if isinstance(p.manifold, Euclidean) else "poincare"
            target, man_dim = p.tensor, p.man_dim
        else:
            expected_kind, expected_man, man_dim = "euclidean", "none", None
            target = p
        if rec["kind"] != expected_kind or rec["manifold"] != expected_man:
            raise DataFormatError(
                f"param {name!r}: kind/manifold mismatch ({rec['kind']}/{rec['manifold']} vs "
                f"{expected_kind}/{expected_man})")
        if rec["man_dim"] != man_dim:
            raise DataFormatError(f"param {name!r}: man_dim {rec['man_dim']!r} != {man_dim!r}")
        if tuple(rec["shape"]) != target.shape:
            raise DataFormatError(f"param {name!r}: shape {tuple(rec['shape'])} != {target.shape}")
        target.data[...] = np.asarray(rec["data"], dtype=np.float64).reshape(target.shape)
