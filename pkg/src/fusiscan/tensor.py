"""Dense float32 tensors and the deterministic random number generator.

Everything numeric in this package flows through these two types.  Tensors
are contiguous row-major float32 arrays (image batches use NCHW order);
heavier arithmetic accumulates in float64 before rounding back to float32.
The RNG is splitmix64, which is trivially portable and fully reproducible
from a 64-bit seed on any platform.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV_2_53 = 2.0 ** -53


class ShapeError(ValueError):
    """Tensor dimensions are invalid or incompatible for an operation."""


def _checked_dims(dims) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if len(dims) == 0:
        raise ShapeError("tensor must have at least one dimension")
    if any(d < 1 for d in dims):
        raise ShapeError(f"all dimensions must be >= 1, got {dims}")
    return dims


class Tensor:
    """Contiguous row-major float32 array.

    `dims` is the shape (outermost dimension varies slowest) and `data` is
    the flat element view.  4-D image batches are ordered (N, C, H, W).
    """

    __slots__ = ("array",)

    def __init__(self, array):
        arr = np.ascontiguousarray(array, dtype=np.float32)
        _checked_dims(arr.shape)
        self.array = arr

    @property
    def dims(self) -> tuple[int, ...]:
        return self.array.shape

    @property
    def data(self) -> np.ndarray:
        """Flat row-major view of the elements."""
        return self.array.reshape(-1)

    @property
    def size(self) -> int:
        return self.array.size

    def reshape(self, dims) -> "Tensor":
        dims = _checked_dims(dims)
        n = 1
        for d in dims:
            n *= d
        if n != self.array.size:
            raise ShapeError(
                f"reshape from {self.dims} to {dims} changes element count"
            )
        return Tensor(self.array.reshape(dims))

    def slice_dim(self, axis: int, start: int, stop: int) -> "Tensor":
        """Slice [start, stop) along one dimension."""
        if not 0 <= axis < self.array.ndim:
            raise ShapeError(f"axis {axis} out of range for {self.dims}")
        if not (0 <= start < stop <= self.dims[axis]):
            raise ShapeError(f"slice [{start}:{stop}) invalid for axis of size {self.dims[axis]}")
        index = [slice(None)] * self.array.ndim
        index[axis] = slice(start, stop)
        return Tensor(self.array[tuple(index)])

    def reduce_sum(self) -> float:
        return float(np.sum(self.array, dtype=np.float64))

    def reduce_mean(self) -> float:
        return float(np.mean(self.array, dtype=np.float64))

    def copy(self) -> "Tensor":
        return Tensor(self.array.copy())

    def tolist(self):
        return self.array.tolist()

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, Tensor):
            if other.dims != self.dims:
                raise ShapeError(f"elementwise op on {self.dims} vs {other.dims}")
            return other.array
        return np.float32(other)

    def __add__(self, other) -> "Tensor":
        return Tensor(self.array + self._coerce(other))

    def __sub__(self, other) -> "Tensor":
        return Tensor(self.array - self._coerce(other))

    def __mul__(self, other) -> "Tensor":
        return Tensor(self.array * self._coerce(other))

    __rmul__ = __mul__

    def scale(self, factor: float) -> "Tensor":
        return Tensor(self.array * np.float32(factor))

    def __repr__(self) -> str:
        return f"Tensor(dims={self.dims})"


def tensor_new(dims, fill: float = 0.0) -> Tensor:
    """Allocate a tensor of the given shape with every element equal to fill."""
    dims = _checked_dims(dims)
    return Tensor(np.full(dims, fill, dtype=np.float32))


def tensor_from(values) -> Tensor:
    """Build a tensor from nested sequences or an ndarray."""
    return Tensor(np.asarray(values, dtype=np.float32))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of two 2-D tensors, accumulated in float64."""
    if len(a.dims) != 2 or len(b.dims) != 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.dims} and {b.dims}")
    if a.dims[1] != b.dims[0]:
        raise ShapeError(f"matmul inner dims disagree: {a.dims} x {b.dims}")
    out = a.array.astype(np.float64) @ b.array.astype(np.float64)
    return Tensor(out.astype(np.float32))


def argmax(t: Tensor) -> int:
    """Index of the maximum element of a 1-D tensor; ties go to the lowest index."""
    if len(t.dims) != 1:
        raise ShapeError(f"argmax expects a 1-D tensor, got {t.dims}")
    return int(np.argmax(t.array))


def _mix_scalar(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def splitmix64(x: int) -> int:
    """One splitmix64 step: the generator output for state x."""
    return _mix_scalar((x + _GOLDEN) & _MASK64)


def _mix_array(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer over an owned uint64 array (mutated in place)."""
    tmp = np.empty_like(z)
    np.right_shift(z, np.uint64(30), out=tmp)
    z ^= tmp
    z *= np.uint64(_MIX1)
    np.right_shift(z, np.uint64(27), out=tmp)
    z ^= tmp
    z *= np.uint64(_MIX2)
    np.right_shift(z, np.uint64(31), out=tmp)
    z ^= tmp
    return z


class Rng:
    """splitmix64 stream seeded with a 64-bit integer.

    The k-th output is a pure function of (seed, k), so block generation via
    numpy is bit-identical to repeated scalar calls.  Instances are
    single-owner; parallel work takes `child()` streams instead of sharing.
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = int(seed) & _MASK64

    @property
    def state(self) -> int:
        return self._state

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return _mix_scalar(self._state)

    def next_u64_block(self, n: int) -> np.ndarray:
        """n outputs as uint64, identical to n successive next_u64() calls."""
        if n < 0:
            raise ValueError("block size must be >= 0")
        steps = np.arange(1, n + 1, dtype=np.uint64)
        steps *= np.uint64(_GOLDEN)
        steps += np.uint64(self._state)
        self._state = (self._state + n * _GOLDEN) & _MASK64
        return _mix_array(steps)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """Uniform real in [lo, hi), from the top 53 bits of one output."""
        u = (self.next_u64() >> 11) * _INV_2_53
        return lo + (hi - lo) * u

    def uniform_array(self, n: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        bits = self.next_u64_block(n) >> np.uint64(11)
        return lo + (hi - lo) * (bits.astype(np.float64) * _INV_2_53)

    def normal(self, mean: float = 0.0, std: float = 1.0) -> float:
        """Gaussian sample via Box-Muller; consumes exactly two outputs."""
        u1 = ((self.next_u64() >> 11) + 1) * _INV_2_53  # in (0, 1], keeps log finite
        u2 = (self.next_u64() >> 11) * _INV_2_53
        z = math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
        return mean + std * z

    def normal_array(self, shape, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
        """float32 array of Box-Muller samples; two outputs per element."""
        shape = tuple(int(d) for d in shape)
        n = 1
        for d in shape:
            n *= d
        block = self.next_u64_block(2 * n)
        u1 = ((block[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53
        u2 = (block[1::2] >> np.uint64(11)).astype(np.float64) * _INV_2_53
        z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
        return (mean + std * z).astype(np.float32).reshape(shape)

    def below(self, k: int) -> int:
        """Integer uniform in [0, k)."""
        if k < 1:
            raise ValueError("below() needs k >= 1")
        return self.next_u64() % k

    def shuffle(self, n: int) -> list[int]:
        """Fisher-Yates permutation of 0..n-1."""
        if n < 0:
            raise ValueError("shuffle length must be >= 0")
        perm = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.next_u64() % (i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def child(self, stream_id: int) -> "Rng":
        """Derived stream for parallel work: seeded with splitmix64(state + stream_id)."""
        return Rng(splitmix64((self._state + int(stream_id)) & _MASK64))


def rng_shuffle(rng: Rng, n: int) -> list[int]:
    return rng.shuffle(n)


def rng_uniform(rng: Rng, lo: float, hi: float) -> float:
    return rng.uniform(lo, hi)


def rng_normal(rng: Rng, mean: float, std: float) -> float:
    return rng.normal(mean, std)
