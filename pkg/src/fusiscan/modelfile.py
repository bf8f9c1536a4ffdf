"""The on-disk model artifact and the confidence-gated diagnosis rule.

File layout (all integers little-endian):

    offset  size  field
    0       4     magic "FUSI"
    4       2     format version (uint16)
    6       4     header length H (uint32)
    10      H     header JSON (UTF-8, canonical: sorted keys, no spaces)
    10+H    ...   payload: tensors as float32 little-endian, directory order
    last 4  4     CRC-32 of every preceding byte

The header carries the architecture name, input size, ordered class labels,
the preprocessing contract, the full layer graph, and a tensor directory of
{name, dims, byteOffset} records locating each weight in the payload.
Canonical JSON plus fixed tensor order makes save -> load -> save
byte-identical.
"""

from __future__ import annotations

import json
import time
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import layers
from .dataset import to_model_input
from .graph import LayerNode, ModelSpec, PoolParams, count_parameters, forward
from .imageio import ClassLabel, LabeledImage
from .tensor import ShapeError, Tensor

MAGIC = b"FUSI"
FORMAT_VERSION = 1
RETAKE_RECOMMENDATION = "Retake a clearer photo of the leaf"
DEFAULT_THRESHOLD = 0.70

_FIXED_PREFIX = 10  # magic + version + header length
_CRC_SIZE = 4


class ModelFormatError(ValueError):
    """Base class for every defect in a model file."""


class BadMagicError(ModelFormatError):
    pass


class UnsupportedVersionError(ModelFormatError):
    pass


class ChecksumError(ModelFormatError):
    pass


class TruncatedFileError(ModelFormatError):
    pass


class HeaderError(ModelFormatError):
    """Header JSON is unparseable; names the byte offset where the header starts."""


class InputImageError(ValueError):
    """The supplied image cannot be used for classification."""


class InferenceError(RuntimeError):
    """The model failed internally while classifying (distinct from bad input)."""


def _node_tensors(node: LayerNode) -> list[tuple[str, Tensor]]:
    p = node.params
    if node.kind == "conv":
        out = [(f"{node.id}.weights", p.weights)]
        if p.bias is not None:
            out.append((f"{node.id}.bias", p.bias))
        return out
    if node.kind == "dense":
        return [(f"{node.id}.weights", p.weights), (f"{node.id}.bias", p.bias)]
    if node.kind == "batchnorm":
        return [
            (f"{node.id}.gamma", p.gamma),
            (f"{node.id}.beta", p.beta),
            (f"{node.id}.moving_mean", p.moving_mean),
            (f"{node.id}.moving_var", p.moving_var),
        ]
    return []


def _node_meta(node: LayerNode) -> dict:
    meta = {"id": node.id, "kind": node.kind, "inputs": list(node.inputs)}
    p = node.params
    if node.kind == "conv":
        meta["stride"] = list(p.stride)
        meta["padding"] = list(p.padding)
        meta["hasBias"] = p.bias is not None
    elif node.kind == "batchnorm":
        meta["epsilon"] = p.epsilon
    elif node.kind in ("maxpool", "avgpool"):
        meta["window"] = list(p.window)
        meta["stride"] = list(p.stride)
        meta["padding"] = list(p.padding)
    return meta


def save_model(model: ModelSpec, path) -> None:
    """Write the deployment artifact; the byte stream is canonical for a given model."""
    directory = []
    payload = bytearray()
    for node in model.nodes:
        for name, tensor in _node_tensors(node):
            directory.append(
                {"name": name, "dims": list(tensor.dims), "byteOffset": len(payload)}
            )
            payload.extend(np.ascontiguousarray(tensor.array, dtype="<f4").tobytes())
    header = {
        "architectureName": model.architecture_name,
        "inputSize": model.input_size,
        "inputShape": list(model.input_shape),
        "classLabels": list(model.class_labels),
        "preprocessing": {"rescale": 1.0 / 255.0},
        "nodes": [_node_meta(n) for n in model.nodes],
        "tensors": directory,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    blob = bytearray()
    blob += MAGIC
    blob += FORMAT_VERSION.to_bytes(2, "little")
    blob += len(header_bytes).to_bytes(4, "little")
    blob += header_bytes
    blob += payload
    blob += zlib.crc32(bytes(blob)).to_bytes(4, "little")
    Path(path).write_bytes(bytes(blob))


def _parse_container(data: bytes) -> tuple[dict, bytes, int]:
    """Validate framing and CRC; returns (header dict, payload bytes, header length)."""
    if len(data) < _FIXED_PREFIX + _CRC_SIZE:
        raise TruncatedFileError(f"file is {len(data)} bytes; minimum container is "
                                 f"{_FIXED_PREFIX + _CRC_SIZE}")
    header_len = int.from_bytes(data[6:10], "little")
    if _FIXED_PREFIX + header_len + _CRC_SIZE > len(data):
        raise TruncatedFileError(
            f"declared header of {header_len} bytes overruns the {len(data)}-byte file"
        )
    stored_crc = int.from_bytes(data[-_CRC_SIZE:], "little")
    actual_crc = zlib.crc32(data[:-_CRC_SIZE])
    if stored_crc != actual_crc:
        raise ChecksumError(f"CRC mismatch: stored {stored_crc:#010x}, computed {actual_crc:#010x}")
    if data[:4] != MAGIC:
        raise BadMagicError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    version = int.from_bytes(data[4:6], "little")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"format version {version} unsupported (expected {FORMAT_VERSION})")
    header_bytes = data[_FIXED_PREFIX : _FIXED_PREFIX + header_len]
    try:
        header = json.loads(header_bytes.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise HeaderError(f"header JSON at byte offset {_FIXED_PREFIX} is corrupt: {exc}") from exc
    payload = data[_FIXED_PREFIX + header_len : -_CRC_SIZE]
    return header, payload, header_len


def _tensor_from_payload(payload: bytes, entry: dict) -> Tensor:
    dims = tuple(int(d) for d in entry["dims"])
    count = 1
    for d in dims:
        count *= d
    start = int(entry["byteOffset"])
    end = start + 4 * count
    if end > len(payload):
        raise TruncatedFileError(
            f"tensor {entry['name']!r} extends to byte {end} but payload is {len(payload)} bytes"
        )
    flat = np.frombuffer(payload, dtype="<f4", count=count, offset=start)
    return Tensor(flat.reshape(dims).copy())


def load_model(path) -> ModelSpec:
    """Read a model file back into a ModelSpec; weights round-trip bitwise."""
    header, payload, _ = _parse_container(Path(path).read_bytes())
    tensors = {e["name"]: _tensor_from_payload(payload, e) for e in header["tensors"]}

    def take(name: str) -> Tensor:
        if name not in tensors:
            raise ModelFormatError(f"tensor {name!r} missing from directory")
        return tensors[name]

    nodes = []
    for meta in header["nodes"]:
        kind = meta["kind"]
        nid = meta["id"]
        params = None
        if kind == "conv":
            bias = take(f"{nid}.bias") if meta.get("hasBias") else None
            params = layers.Conv2dParams(
                take(f"{nid}.weights"), bias, tuple(meta["stride"]), tuple(meta["padding"])
            )
        elif kind == "dense":
            params = layers.DenseParams(take(f"{nid}.weights"), take(f"{nid}.bias"))
        elif kind == "batchnorm":
            params = layers.BatchNormParams(
                take(f"{nid}.gamma"),
                take(f"{nid}.beta"),
                take(f"{nid}.moving_mean"),
                take(f"{nid}.moving_var"),
                float(meta["epsilon"]),
            )
        elif kind in ("maxpool", "avgpool"):
            params = PoolParams(
                tuple(meta["window"]), tuple(meta["stride"]), tuple(meta["padding"])
            )
        nodes.append(LayerNode(nid, kind, params, list(meta["inputs"])))
    return ModelSpec(
        nodes,
        tuple(header["inputShape"]),
        list(header["classLabels"]),
        header["architectureName"],
    )


def model_info(path) -> dict:
    """Header summary without materializing weights."""
    raw = Path(path).read_bytes()
    header, _, _ = _parse_container(raw)
    params = 0
    for entry in header["tensors"]:
        if entry["name"].endswith((".moving_mean", ".moving_var")):
            continue  # buffers, not learnable parameters
        count = 1
        for d in entry["dims"]:
            count *= int(d)
        params += count
    return {
        "architectureName": header["architectureName"],
        "inputSize": header["inputSize"],
        "classLabels": list(header["classLabels"]),
        "parameterCount": params,
        "fileSizeBytes": len(raw),
    }


@dataclass
class Diagnosis:
    """The unit of output shown to the user: label, confidence, retake advice."""

    label: ClassLabel
    confidence: float
    per_class: list[tuple[str, float]]
    recommendation: Optional[str]

    @property
    def label_name(self) -> str:
        """The winning label in the model's own vocabulary."""
        return self.per_class[int(self.label)][0]

    def to_response(self, model_name: str, latency_ms: float) -> dict:
        return {
            "label": self.label_name,
            "confidence": self.confidence,
            "per_class": {name: p for name, p in self.per_class},
            "recommendation": self.recommendation,
            "model": model_name,
            "latency_ms": latency_ms,
        }


def diagnose(probs, class_labels, threshold: float = DEFAULT_THRESHOLD) -> Diagnosis:
    """Apply the diagnosis rule to one probability row.

    The top class wins (lowest index on ties); a retake recommendation is
    attached exactly when confidence < threshold, so a confidence equal to
    the threshold passes without advice.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    p = np.asarray(probs, dtype=np.float64).reshape(-1)
    idx = int(np.argmax(p))
    confidence = float(p[idx])
    recommendation = RETAKE_RECOMMENDATION if confidence < threshold else None
    per_class = [(name, float(v)) for name, v in zip(class_labels, p)]
    return Diagnosis(ClassLabel(idx), confidence, per_class, recommendation)


def classify(model: ModelSpec, image, threshold: float = DEFAULT_THRESHOLD) -> Diagnosis:
    """Preprocess (resize to the model input, rescale 1/255), run, apply the rule."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    if isinstance(image, LabeledImage):
        pixels = image.pixels
    else:
        pixels = np.asarray(image)
    if pixels.ndim != 3 or pixels.shape[2] != 3 or pixels.dtype != np.uint8:
        raise InputImageError(f"expected uint8 HxWx3 pixels, got {pixels.dtype} {pixels.shape}")
    try:
        batch = to_model_input([pixels], model.input_size)
        probs = forward(model, batch).array[0]
    except (ShapeError, ValueError) as exc:
        raise InferenceError(f"model failed on a valid image: {exc}") from exc
    return diagnose(probs, model.class_labels, threshold)


def classify_timed(model: ModelSpec, image, threshold: float = DEFAULT_THRESHOLD):
    """classify() plus wall-clock latency in milliseconds (for service responses)."""
    t0 = time.perf_counter()
    diagnosis = classify(model, image, threshold)
    return diagnosis, (time.perf_counter() - t0) * 1000.0
