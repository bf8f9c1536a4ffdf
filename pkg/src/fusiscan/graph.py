"""Layer graphs: the model representation shared by training, serialization and serving.

A ModelSpec is a topologically ordered list of LayerNodes plus the input
shape and the ordered class labels.  Nodes reference their inputs by id; the
graph input is the reserved id "input".  Shape propagation validates every
structural rule at build time so a spec that constructs successfully is
guaranteed to execute.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import layers
from .tensor import Rng, ShapeError, Tensor

INPUT_ID = "input"

KINDS = (
    "conv",
    "batchnorm",
    "relu",
    "maxpool",
    "avgpool",
    "global_avgpool",
    "dense",
    "softmax",
    "concat",
    "add",
)


@dataclass
class PoolParams:
    window: tuple[int, int]
    stride: tuple[int, int]
    padding: tuple[int, int] = (0, 0)


@dataclass
class LayerNode:
    id: str
    kind: str
    params: object = None
    inputs: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ShapeError(f"unknown layer kind {self.kind!r}")


def node_parameter_count(node: LayerNode) -> int:
    """Learnable parameters of one node (batchnorm moving stats are buffers, not counted)."""
    p = node.params
    if node.kind == "conv":
        n = p.weights.size
        if p.bias is not None:
            n += p.bias.size
        return n
    if node.kind == "dense":
        return p.weights.size + p.bias.size
    if node.kind == "batchnorm":
        return p.gamma.size + p.beta.size
    return 0


class ModelSpec:
    """Immutable-by-convention layer graph with weights attached to each node."""

    def __init__(self, nodes, input_shape, class_labels, architecture_name):
        if not nodes:
            raise ShapeError("model graph must contain at least one node")
        self.nodes: list[LayerNode] = list(nodes)
        self.input_shape = tuple(int(d) for d in input_shape)  # (C, H, W)
        self.class_labels = list(class_labels)
        self.architecture_name = str(architecture_name)
        if len(self.input_shape) != 3:
            raise ShapeError(f"input shape must be (C,H,W), got {self.input_shape}")
        self._node_index = {}
        consumed = set()
        for node in self.nodes:
            if node.id == INPUT_ID or node.id in self._node_index:
                raise ShapeError(f"duplicate or reserved node id {node.id!r}")
            for src in node.inputs:
                if src != INPUT_ID and src not in self._node_index:
                    raise ShapeError(
                        f"node {node.id!r} references {src!r} before it is defined"
                    )
                consumed.add(src)
            self._node_index[node.id] = node
        outputs = [n for n in self.nodes if n.id not in consumed]
        if len(outputs) != 1:
            raise ShapeError(
                f"graph must have exactly one output node, found {[n.id for n in outputs]}"
            )
        self.output_id = outputs[0].id
        if outputs[0].kind != "softmax":
            raise ShapeError("output node must be softmax")
        shapes = propagate_shapes(self)
        out_dim = shapes[self.output_id][-1]
        if out_dim != len(self.class_labels):
            raise ShapeError(
                f"output size {out_dim} != number of class labels {len(self.class_labels)}"
            )

    def node(self, node_id: str) -> LayerNode:
        return self._node_index[node_id]

    @property
    def input_size(self) -> int:
        return self.input_shape[1]


def _node_output_shape(node: LayerNode, in_shapes: list[tuple]) -> tuple:
    kind = node.kind
    if kind in ("relu", "softmax"):
        return in_shapes[0]
    if kind == "conv":
        n, c, h, w = in_shapes[0]
        out_c, in_c, kh, kw = node.params.weights.dims
        if c != in_c:
            raise ShapeError(f"{node.id}: input has {c} channels, weights expect {in_c}")
        oh, ow = layers.conv_output_size(
            (h, w), (kh, kw), node.params.stride, node.params.padding
        )
        return (n, out_c, oh, ow)
    if kind in ("maxpool", "avgpool"):
        n, c, h, w = in_shapes[0]
        p = node.params
        oh, ow = layers.conv_output_size((h, w), p.window, p.stride, p.padding)
        return (n, c, oh, ow)
    if kind == "batchnorm":
        n, c, h, w = in_shapes[0]
        if node.params.gamma.dims != (c,):
            raise ShapeError(f"{node.id}: batchnorm channel mismatch")
        return in_shapes[0]
    if kind == "global_avgpool":
        n, c, h, w = in_shapes[0]
        return (n, c)
    if kind == "dense":
        n, f = in_shapes[0]
        out_f, in_f = node.params.weights.dims
        if f != in_f:
            raise ShapeError(f"{node.id}: input has {f} features, weights expect {in_f}")
        return (n, out_f)
    if kind == "concat":
        first = in_shapes[0]
        for s in in_shapes[1:]:
            if len(s) != 4 or s[0] != first[0] or s[2:] != first[2:]:
                raise ShapeError(
                    f"{node.id}: concat inputs must agree outside the channel dim, "
                    f"got {in_shapes}"
                )
        return (first[0], sum(s[1] for s in in_shapes), first[2], first[3])
    if kind == "add":
        first = in_shapes[0]
        for s in in_shapes[1:]:
            if s != first:
                raise ShapeError(f"{node.id}: add inputs must have equal shapes, got {in_shapes}")
        return first
    raise ShapeError(f"unknown kind {kind}")


def propagate_shapes(spec: ModelSpec, batch: int = 1) -> dict[str, tuple]:
    """Infer every node's output shape; raises ShapeError on any inconsistency."""
    shapes = {INPUT_ID: (batch,) + spec.input_shape}
    for node in spec.nodes:
        if not node.inputs:
            raise ShapeError(f"node {node.id!r} has no inputs")
        ins = [shapes[src] for src in node.inputs]
        if node.kind not in ("concat", "add") and len(ins) != 1:
            raise ShapeError(f"node {node.id!r} of kind {node.kind} takes exactly one input")
        shapes[node.id] = _node_output_shape(node, ins)
    return shapes


def _eval_node(node: LayerNode, ins: list[np.ndarray]) -> np.ndarray:
    kind = node.kind
    if kind == "conv":
        return layers.conv2d_forward(ins[0], node.params)
    if kind == "batchnorm":
        return layers.batchnorm_infer(ins[0], node.params)
    if kind == "relu":
        return layers.relu(ins[0])
    if kind == "maxpool":
        p = node.params
        return layers._pool2d(ins[0], p.window, p.stride, p.padding, "max")
    if kind == "avgpool":
        p = node.params
        return layers.avgpool2d(ins[0], p.window, p.stride, p.padding)
    if kind == "global_avgpool":
        return layers.global_avgpool(ins[0])
    if kind == "dense":
        return layers.dense_forward(ins[0], node.params)
    if kind == "softmax":
        return layers.softmax(ins[0])
    if kind == "concat":
        return np.concatenate(ins, axis=1)
    if kind == "add":
        out = ins[0]
        for extra in ins[1:]:
            out = out + extra
        return out
    raise ShapeError(f"unknown kind {kind}")


def forward(spec: ModelSpec, x: Tensor, until: Optional[str] = None):
    """Topological evaluation of the graph; returns softmax probabilities [N, K].

    `until` stops early and returns that node's output instead (used to cache
    frozen-backbone features during head training).
    """
    xa = x.array if isinstance(x, Tensor) else np.asarray(x, dtype=np.float32)
    if xa.ndim != 4 or xa.shape[1:] != spec.input_shape:
        raise ShapeError(
            f"input shape {xa.shape} does not match model input {spec.input_shape}"
        )
    remaining = _use_counts(spec, until)
    values: dict[str, np.ndarray] = {INPUT_ID: xa}
    for node in spec.nodes:
        ins = [values[src] for src in node.inputs]
        out = _eval_node(node, ins)
        out = out.array if isinstance(out, Tensor) else out
        values[node.id] = out
        if node.id == until:
            return Tensor(out)
        for src in node.inputs:
            remaining[src] -= 1
            if remaining[src] == 0 and src != INPUT_ID:
                del values[src]
    return Tensor(values[spec.output_id])


def _use_counts(spec: ModelSpec, until: Optional[str] = None) -> dict[str, int]:
    counts: dict[str, int] = {INPUT_ID: 0}
    for node in spec.nodes:
        counts[node.id] = 0
        for src in node.inputs:
            counts[src] += 1
        if node.id == until:
            break
    return counts


def count_parameters(spec: ModelSpec) -> int:
    """Exact learnable-parameter count over the whole graph."""
    return sum(node_parameter_count(n) for n in spec.nodes)


def count_weighted_layers(spec: ModelSpec, include_projections: bool = False) -> int:
    """Conv + dense layers on the main path.

    Shortcut projection convolutions carry "proj" in their node id and are
    excluded by default, matching the usual depth-naming convention for
    residual networks.
    """
    total = 0
    for node in spec.nodes:
        if node.kind not in ("conv", "dense"):
            continue
        if not include_projections and "proj" in node.id:
            continue
        total += 1
    return total


def estimate_memory_bytes(spec: ModelSpec, batch: int = 1) -> int:
    """4 bytes x (parameters + peak live activation elements at the given batch).

    Liveness follows topological execution order: a node's output stays live
    until its last consumer has executed.  This is a deterministic estimate
    for comparing architectures, not an allocator model.
    """
    shapes = propagate_shapes(spec, batch=batch)
    elems = {nid: int(np.prod(s)) for nid, s in shapes.items()}
    last_use = {INPUT_ID: -1}
    for i, node in enumerate(spec.nodes):
        last_use[node.id] = i  # outputs with no consumer die after their own step
        for src in node.inputs:
            last_use[src] = i
    live = {INPUT_ID}
    peak = elems[INPUT_ID]
    for i, node in enumerate(spec.nodes):
        live.add(node.id)
        peak = max(peak, sum(elems[nid] for nid in live))
        for nid in [n for n in live if last_use[n] <= i]:
            live.discard(nid)
    return 4 * (count_parameters(spec) + peak)


def inspect_dump(spec: ModelSpec) -> str:
    """One line per node: id, kind, output shape (batch dropped), parameter count."""
    shapes = propagate_shapes(spec)
    lines = []
    for node in spec.nodes:
        shape = "x".join(str(d) for d in shapes[node.id][1:])
        lines.append(f"{node.id}  {node.kind}  {shape}  {node_parameter_count(node)}")
    return "\n".join(lines)


def set_all_weights(spec: ModelSpec, value: float = 0.0):
    """Overwrite every learnable tensor in place (testing helper)."""
    for node in spec.nodes:
        p = node.params
        if node.kind == "conv":
            p.weights.array[:] = value
            if p.bias is not None:
                p.bias.array[:] = value
        elif node.kind == "dense":
            p.weights.array[:] = value
            p.bias.array[:] = value
        elif node.kind == "batchnorm":
            p.gamma.array[:] = value


class GraphBuilder:
    """Incremental builder with He-normal initialization for fresh weights."""

    def __init__(self, rng: Rng):
        self.rng = rng
        self.nodes: list[LayerNode] = []

    def _add(self, node_id, kind, params, inputs) -> str:
        self.nodes.append(LayerNode(node_id, kind, params, list(inputs)))
        return node_id

    def conv(self, name, src, in_c, out_c, kernel, stride=1, padding=0, bias=False) -> str:
        kh, kw = layers._pair(kernel)
        std = (2.0 / (in_c * kh * kw)) ** 0.5
        w = Tensor(self.rng.normal_array((out_c, in_c, kh, kw), 0.0, std))
        b = Tensor(np.zeros(out_c, dtype=np.float32)) if bias else None
        params = layers.Conv2dParams(w, b, layers._pair(stride), layers._pair(padding))
        return self._add(name, "conv", params, [src])

    def batchnorm(self, name, src, channels, epsilon=1e-3) -> str:
        params = layers.BatchNormParams(
            gamma=Tensor(np.ones(channels, dtype=np.float32)),
            beta=Tensor(np.zeros(channels, dtype=np.float32)),
            moving_mean=Tensor(np.zeros(channels, dtype=np.float32)),
            moving_var=Tensor(np.ones(channels, dtype=np.float32)),
            epsilon=epsilon,
        )
        return self._add(name, "batchnorm", params, [src])

    def relu(self, name, src) -> str:
        return self._add(name, "relu", None, [src])

    def maxpool(self, name, src, window, stride, padding=0) -> str:
        params = PoolParams(layers._pair(window), layers._pair(stride), layers._pair(padding))
        return self._add(name, "maxpool", params, [src])

    def avgpool(self, name, src, window, stride, padding=0) -> str:
        params = PoolParams(layers._pair(window), layers._pair(stride), layers._pair(padding))
        return self._add(name, "avgpool", params, [src])

    def global_avgpool(self, name, src) -> str:
        return self._add(name, "global_avgpool", None, [src])

    def dense(self, name, src, in_f, out_f) -> str:
        std = (2.0 / in_f) ** 0.5
        params = layers.DenseParams(
            weights=Tensor(self.rng.normal_array((out_f, in_f), 0.0, std)),
            bias=Tensor(np.zeros(out_f, dtype=np.float32)),
        )
        return self._add(name, "dense", params, [src])

    def softmax(self, name, src) -> str:
        return self._add(name, "softmax", None, [src])

    def concat(self, name, srcs) -> str:
        return self._add(name, "concat", None, list(srcs))

    def add(self, name, srcs) -> str:
        return self._add(name, "add", None, list(srcs))

    def conv_bn_relu(self, prefix, src, in_c, out_c, kernel, stride=1, padding=0) -> str:
        """The conv -> batchnorm -> relu unit both architectures are built from."""
        c = self.conv(f"{prefix}.conv", src, in_c, out_c, kernel, stride, padding)
        b = self.batchnorm(f"{prefix}.bn", c, out_c)
        return self.relu(f"{prefix}.relu", b)
