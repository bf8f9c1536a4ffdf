"""Tensor basics and the reproducible RNG.

Everything in the stack runs on float32 tensors and a splitmix64 stream, so
any result - shuffles, augmented pixels, trained weights - can be reproduced
from a single 64-bit seed on any machine.
"""

import numpy as np

from fusiscan import Rng, Tensor, argmax, matmul, tensor_from, tensor_new

print("== tensors ==")
zeros = tensor_new([2, 3])
print(f"tensor_new([2,3]) -> dims {zeros.dims}, data {zeros.data.tolist()}")

a = tensor_from([[1, 2], [3, 4]])
b = tensor_from([[5, 6], [7, 8]])
print(f"matmul([[1,2],[3,4]], [[5,6],[7,8]]) = {matmul(a, b).tolist()}")

probs = tensor_from([0.1, 0.8, 0.1])
print(f"argmax({probs.tolist()}) = {argmax(probs)} (ties resolve to the lowest index)")

print("\n== reproducible randomness ==")
print(f"shuffle(8) with seed 42:      {Rng(42).shuffle(8)}")
print(f"shuffle(8) with seed 42 again: {Rng(42).shuffle(8)}")
print(f"shuffle(8) with seed 43:      {Rng(43).shuffle(8)}")

rng = Rng(7)
draws = rng.normal_array((100_000,), mean=0.0, std=1.0)
print(f"100k Box-Muller draws: mean {draws.mean():+.4f}, std {draws.std():.4f}")

parent = Rng(7)
print("child streams for parallel work:",
      parent.child(0).next_u64() % 1000,
      parent.child(1).next_u64() % 1000,
      parent.child(2).next_u64() % 1000)

scalar_rng = Rng(5)
scalar = [scalar_rng.next_u64() for _ in range(4)]
block = [int(v) for v in Rng(5).next_u64_block(4)]
print(f"\nvectorized block generation equals scalar calls: {scalar == block}")
