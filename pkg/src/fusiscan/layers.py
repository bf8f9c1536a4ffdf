"""Neural network layer kernels: forwards for inference, backwards for the head.

Each function accepts either a Tensor or a plain ndarray and returns the same
kind.  The ndarray path preserves dtype, which lets the gradient checker run
the exact same code on float64 shadow copies.  Convolution has two
implementations: an im2col + GEMM fast path and a naive loop used purely as a
testing oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .tensor import ShapeError, Tensor


class LabelError(ValueError):
    """A class label index is outside the valid range."""


def _arr(x) -> np.ndarray:
    return x.array if isinstance(x, Tensor) else np.asarray(x)


def _out(result: np.ndarray, like) -> "Tensor | np.ndarray":
    if isinstance(like, Tensor):
        return Tensor(result)
    return result


def _shape(t) -> tuple[int, ...]:
    return tuple(_arr(t).shape)


def _pair(v) -> tuple[int, int]:
    if isinstance(v, (tuple, list)):
        a, b = v
        return int(a), int(b)
    return int(v), int(v)


@dataclass
class Conv2dParams:
    """Weights [outC, inC, kH, kW], optional bias [outC], stride and symmetric zero padding."""

    weights: Tensor
    bias: Optional[Tensor] = None
    stride: tuple[int, int] = (1, 1)
    padding: tuple[int, int] = (0, 0)

    def __post_init__(self):
        self.stride = _pair(self.stride)
        self.padding = _pair(self.padding)
        w = _shape(self.weights)
        if len(w) != 4 or any(d < 1 for d in w):
            raise ShapeError(f"conv weights must be 4-D with positive dims, got {w}")
        if self.bias is not None and _shape(self.bias) != (w[0],):
            raise ShapeError(f"conv bias shape {_shape(self.bias)} != ({w[0]},)")
        if self.stride[0] < 1 or self.stride[1] < 1:
            raise ShapeError(f"stride must be positive, got {self.stride}")
        if self.padding[0] < 0 or self.padding[1] < 0:
            raise ShapeError(f"padding must be non-negative, got {self.padding}")


@dataclass
class BatchNormParams:
    """Per-channel affine normalization statistics for inference."""

    gamma: Tensor
    beta: Tensor
    moving_mean: Tensor
    moving_var: Tensor
    epsilon: float = 1e-3

    def __post_init__(self):
        c = _shape(self.gamma)
        for name in ("beta", "moving_mean", "moving_var"):
            if _shape(getattr(self, name)) != c:
                raise ShapeError(f"batchnorm {name} shape != gamma shape {c}")
        # epsilon 0 is tolerated so the exact-identity configuration
        # (gamma=1, beta=0, mean=0, var=1) can be expressed; graphs built by
        # this package always use a positive value
        if self.epsilon < 0:
            raise ShapeError("batchnorm epsilon must be >= 0")
        if np.any(_arr(self.moving_var) < 0):
            raise ShapeError("batchnorm moving variance must be >= 0")


@dataclass
class DenseParams:
    """Fully-connected layer: weights [outF, inF], bias [outF]."""

    weights: Tensor
    bias: Tensor

    def __post_init__(self):
        w = _shape(self.weights)
        if len(w) != 2:
            raise ShapeError(f"dense weights must be 2-D, got {w}")
        if _shape(self.bias) != (w[0],):
            raise ShapeError(f"dense bias shape {_shape(self.bias)} != ({w[0]},)")


def conv_output_size(in_hw, kernel_hw, stride_hw, pad_hw) -> tuple[int, int]:
    """Spatial output size of a convolution/pool: floor((in + 2p - k)/s) + 1."""
    out = []
    for x, k, s, p in zip(in_hw, kernel_hw, stride_hw, pad_hw):
        o = (x + 2 * p - k) // s + 1
        if o < 1:
            raise ShapeError(
                f"window {kernel_hw} stride {stride_hw} pad {pad_hw} "
                f"does not fit input {tuple(in_hw)}"
            )
        out.append(o)
    return tuple(out)


def _im2col(x: np.ndarray, kh, kw, sh, sw, ph, pw):
    """Unroll kernel-sized patches into columns: [N, C*kh*kw, outH*outW]."""
    n, c, h, w = x.shape
    oh, ow = conv_output_size((h, w), (kh, kw), (sh, sw), (ph, pw))
    if ph or pw:
        x = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    cols = np.empty((n, c, kh, kw, oh, ow), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, i, j] = x[:, :, i : i + sh * oh : sh, j : j + sw * ow : sw]
    return cols.reshape(n, c * kh * kw, oh * ow), oh, ow


def _check_conv_input(x: np.ndarray, p: Conv2dParams):
    if x.ndim != 4:
        raise ShapeError(f"conv input must be [N,C,H,W], got {x.shape}")
    in_c = _shape(p.weights)[1]
    if x.shape[1] != in_c:
        raise ShapeError(f"conv input has {x.shape[1]} channels, weights expect {in_c}")


def conv2d_forward(x, p: Conv2dParams):
    """Cross-correlation with zero padding via im2col + GEMM, float64 accumulation."""
    xa = _arr(x)
    _check_conv_input(xa, p)
    w = _arr(p.weights)
    out_c, _, kh, kw = w.shape
    cols, oh, ow = _im2col(xa, kh, kw, *p.stride, *p.padding)
    wm = w.reshape(out_c, -1).astype(np.float64)
    out = np.matmul(wm, cols.astype(np.float64))  # [N, outC, oh*ow]
    if p.bias is not None:
        out += _arr(p.bias).astype(np.float64)[:, None]
    out = out.reshape(xa.shape[0], out_c, oh, ow).astype(xa.dtype)
    return _out(out, x)


def conv2d_direct(x, p: Conv2dParams):
    """Same contract as conv2d_forward, computed by naive nested-loop summation.

    Deliberately slow; exists as the independent oracle for the fast path.
    """
    xa = _arr(x)
    _check_conv_input(xa, p)
    w = _arr(p.weights)
    out_c, in_c, kh, kw = w.shape
    sh, sw = p.stride
    ph, pw = p.padding
    n = xa.shape[0]
    oh, ow = conv_output_size(xa.shape[2:], (kh, kw), (sh, sw), (ph, pw))
    xp = np.pad(xa, ((0, 0), (0, 0), (ph, ph), (pw, pw))) if (ph or pw) else xa
    xl = xp.tolist()
    wl = w.tolist()
    bl = _arr(p.bias).tolist() if p.bias is not None else [0.0] * out_c
    out = np.empty((n, out_c, oh, ow), dtype=xa.dtype)
    for b in range(n):
        for oc in range(out_c):
            for oy in range(oh):
                for ox in range(ow):
                    acc = 0.0
                    for ic in range(in_c):
                        for ky in range(kh):
                            row = xl[b][ic][oy * sh + ky]
                            wrow = wl[oc][ic][ky]
                            for kx in range(kw):
                                acc += row[ox * sw + kx] * wrow[kx]
                    out[b, oc, oy, ox] = acc + bl[oc]
    return _out(out, x)


def _pool2d(x, window, stride, padding=(0, 0), kind="max"):
    xa = _arr(x)
    if xa.ndim != 4:
        raise ShapeError(f"pool input must be [N,C,H,W], got {xa.shape}")
    kh, kw = _pair(window)
    sh, sw = _pair(stride)
    ph, pw = _pair(padding)
    oh, ow = conv_output_size(xa.shape[2:], (kh, kw), (sh, sw), (ph, pw))
    if ph or pw:
        fill = -np.inf if kind == "max" else 0.0
        xa = np.pad(xa, ((0, 0), (0, 0), (ph, ph), (pw, pw)), constant_values=fill)
    n, c = xa.shape[:2]
    stack = np.empty((kh * kw, n, c, oh, ow), dtype=xa.dtype)
    for i in range(kh):
        for j in range(kw):
            stack[i * kw + j] = xa[:, :, i : i + sh * oh : sh, j : j + sw * ow : sw]
    if kind == "max":
        out = stack.max(axis=0)
    else:
        # zero padding is included in the divisor, matching the usual
        # count_include_pad convention
        out = stack.sum(axis=0, dtype=np.float64) / (kh * kw)
        out = out.astype(_arr(x).dtype)
    return _out(out, x)


def maxpool2d(x, window, stride):
    """Per-window, per-channel maximum."""
    return _pool2d(x, window, stride, (0, 0), "max")


def avgpool2d(x, window, stride, padding=(0, 0)):
    """Per-window, per-channel mean (zero padding counted in the divisor)."""
    return _pool2d(x, window, stride, padding, "avg")


def global_avgpool(x):
    """Mean over the spatial dims: [N,C,H,W] -> [N,C]."""
    xa = _arr(x)
    if xa.ndim != 4:
        raise ShapeError(f"global_avgpool input must be [N,C,H,W], got {xa.shape}")
    out = xa.mean(axis=(2, 3), dtype=np.float64).astype(xa.dtype)
    return _out(out, x)


def global_avgpool_backward(x, grad_out):
    """Gradient of global_avgpool: spread grad_out/(H*W) over each map."""
    xa = _arr(x)
    g = _arr(grad_out)
    n, c, h, w = xa.shape
    if g.shape != (n, c):
        raise ShapeError(f"grad shape {g.shape} != ({n},{c})")
    gx = np.broadcast_to((g / (h * w))[:, :, None, None], xa.shape).astype(xa.dtype)
    return _out(gx.copy(), x)


def batchnorm_infer(x, p: BatchNormParams):
    """out = gamma * (x - mean) / sqrt(var + eps) + beta, per channel of NCHW input."""
    xa = _arr(x)
    if xa.ndim != 4:
        raise ShapeError(f"batchnorm input must be [N,C,H,W], got {xa.shape}")
    c = xa.shape[1]
    if _shape(p.gamma) != (c,):
        raise ShapeError(f"batchnorm expects {_shape(p.gamma)[0]} channels, input has {c}")
    shape = (1, c, 1, 1)
    gamma = _arr(p.gamma).reshape(shape)
    beta = _arr(p.beta).reshape(shape)
    mean = _arr(p.moving_mean).reshape(shape)
    var = _arr(p.moving_var).reshape(shape)
    inv = gamma / np.sqrt(var + p.epsilon)
    out = ((xa - mean) * inv + beta).astype(xa.dtype)
    return _out(out, x)


def relu(x):
    xa = _arr(x)
    return _out(np.maximum(xa, 0), x)


def relu_backward(x, grad_out):
    """Mask gradients where the forward input was <= 0 (gradient 0 at x == 0)."""
    xa = _arr(x)
    g = _arr(grad_out)
    if xa.shape != g.shape:
        raise ShapeError(f"relu_backward shapes disagree: {xa.shape} vs {g.shape}")
    return _out(np.where(xa > 0, g, 0).astype(g.dtype), x)


def dense_forward(x, p: DenseParams):
    """out = x @ W^T + b, accumulated in float64."""
    xa = _arr(x)
    w = _arr(p.weights)
    if xa.ndim != 2:
        raise ShapeError(f"dense input must be [N,inF], got {xa.shape}")
    if xa.shape[1] != w.shape[1]:
        raise ShapeError(f"dense input has {xa.shape[1]} features, weights expect {w.shape[1]}")
    out = xa.astype(np.float64) @ w.astype(np.float64).T + _arr(p.bias).astype(np.float64)
    return _out(out.astype(xa.dtype), x)


def dense_backward(x, p: DenseParams, grad_out):
    """Analytic gradients (gradX, gradW, gradB) for the dense layer."""
    xa = _arr(x).astype(np.float64)
    w = _arr(p.weights).astype(np.float64)
    g = _arr(grad_out).astype(np.float64)
    if g.shape != (xa.shape[0], w.shape[0]):
        raise ShapeError(f"dense grad shape {g.shape} != ({xa.shape[0]},{w.shape[0]})")
    dtype = _arr(x).dtype
    grad_x = (g @ w).astype(dtype)
    grad_w = (g.T @ xa).astype(dtype)
    grad_b = g.sum(axis=0).astype(dtype)
    return _out(grad_x, x), _out(grad_w, x), _out(grad_b, x)


def softmax(logits):
    """Row-wise softmax with the max subtracted for stability."""
    z = _arr(logits)
    if z.ndim != 2:
        raise ShapeError(f"softmax expects [N,K] logits, got {z.shape}")
    z64 = z.astype(np.float64)
    z64 = z64 - z64.max(axis=1, keepdims=True)
    e = np.exp(z64)
    out = (e / e.sum(axis=1, keepdims=True)).astype(z.dtype)
    return _out(out, logits)


def _label_indices(labels, n: int, k: int) -> np.ndarray:
    la = _arr(labels)
    if la.ndim == 2:  # one-hot rows
        if la.shape != (n, k):
            raise ShapeError(f"one-hot labels shape {la.shape} != ({n},{k})")
        return la.argmax(axis=1)
    idx = la.astype(np.int64).reshape(-1)
    if idx.shape[0] != n:
        raise ShapeError(f"got {idx.shape[0]} labels for batch of {n}")
    if np.any(idx < 0) or np.any(idx >= k):
        raise LabelError(f"label index out of range [0, {k})")
    return idx


def cross_entropy(probs, labels) -> float:
    """Mean over the batch of -log(p[label]), with p clamped to >= 1e-12."""
    pa = _arr(probs)
    if pa.ndim != 2:
        raise ShapeError(f"cross_entropy expects [N,K] probabilities, got {pa.shape}")
    n, k = pa.shape
    idx = _label_indices(labels, n, k)
    picked = np.clip(pa[np.arange(n), idx].astype(np.float64), 1e-12, None)
    return float(-np.log(picked).mean())


def softmax_xent_backward(logits, labels):
    """Combined softmax + cross-entropy gradient: (softmax - onehot) / N."""
    z = _arr(logits)
    n, k = z.shape
    idx = _label_indices(labels, n, k)
    grad = _arr(softmax(z)).astype(np.float64)
    grad[np.arange(n), idx] -= 1.0
    grad /= n
    return _out(grad.astype(z.dtype), logits)


def grad_check(f, grad_fn, x, h: float = 1e-3) -> float:
    """Max relative error between analytic and central-difference gradients.

    f maps an ndarray to a scalar; grad_fn returns the analytic gradient at x.
    Differences run on float64 shadow copies; relative error divides by
    max(1, |analytic|, |numeric|) per coordinate.
    """
    x64 = _arr(x).astype(np.float64).copy()
    analytic = np.asarray(grad_fn(x64), dtype=np.float64).reshape(-1)
    flat = x64.reshape(-1)
    worst = 0.0
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        f_plus = float(f(x64))
        flat[i] = orig - h
        f_minus = float(f(x64))
        flat[i] = orig
        numeric = (f_plus - f_minus) / (2.0 * h)
        denom = max(1.0, abs(analytic[i]), abs(numeric))
        worst = max(worst, abs(analytic[i] - numeric) / denom)
    return worst
