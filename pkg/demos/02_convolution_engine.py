"""The convolution fast path and its oracle.

conv2d_forward lowers every convolution to im2col + one GEMM; conv2d_direct
recomputes the same contract with naive nested loops.  The two must agree -
that equivalence is what lets the fast path be trusted everywhere else.
"""

import time

import numpy as np

from fusiscan.layers import Conv2dParams, conv2d_direct, conv2d_forward
from fusiscan.tensor import Rng, Tensor

rng = Rng(99)

x = Tensor(rng.normal_array((2, 3, 9, 9)))
params = Conv2dParams(
    weights=Tensor(rng.normal_array((8, 3, 3, 3), 0.0, 0.3)),
    bias=Tensor(rng.normal_array((8,), 0.0, 0.1)),
    stride=(2, 2),
    padding=(1, 1),
)

fast = conv2d_forward(x, params).array
slow = conv2d_direct(x, params).array
gap = np.max(np.abs(fast - slow))
print(f"im2col+GEMM vs direct loops on 2x3x9x9, 8 filters 3x3/s2/p1:")
print(f"  output shape {fast.shape}, max abs difference {gap:.2e}")

print("\ntiming on a bigger input (1x16x64x64, 32 filters 3x3):")
x = Tensor(rng.normal_array((1, 16, 64, 64)))
params = Conv2dParams(Tensor(rng.normal_array((32, 16, 3, 3), 0.0, 0.2)), None, (1, 1), (1, 1))
t0 = time.perf_counter()
conv2d_forward(x, params)
t_fast = time.perf_counter() - t0
t0 = time.perf_counter()
conv2d_direct(x, params)
t_slow = time.perf_counter() - t0
print(f"  fast path {t_fast * 1000:7.1f} ms")
print(f"  direct    {t_slow * 1000:7.1f} ms  ({t_slow / t_fast:.0f}x slower - oracle only)")
