"""Building the two deployment-candidate networks and comparing their footprints.

The residual net wins on accuracy in the published comparison but the
inception net is the one that ships to phones: it needs far less memory.
This demo quantifies that tradeoff.  Pass --full to also build the 58M
parameter residual net (adds ~10s).
"""

import sys
import time

from fusiscan.architectures import build_inception_v3, build_resnet152, build_tiny
from fusiscan.graph import (
    count_parameters,
    count_weighted_layers,
    estimate_memory_bytes,
    forward,
    inspect_dump,
)
from fusiscan.tensor import Rng, Tensor


def describe(model):
    params = count_parameters(model)
    mem = estimate_memory_bytes(model)
    print(f"  {model.architecture_name:15s} {params:>12,} params  "
          f"{mem / 1e6:>8.1f} MB estimated  {count_weighted_layers(model):>4} weighted layers")
    return params, mem


print("== desk-scale presets ==")
tiny_r = build_tiny("tiny-residual", 3, 32, seed=1)
tiny_i = build_tiny("tiny-inception", 3, 32, seed=1)
describe(tiny_r)
describe(tiny_i)

x = Tensor(Rng(3).normal_array((1, 3, 32, 32), 0.5, 0.2))
t0 = time.perf_counter()
probs = forward(tiny_r, x)
print(f"\ntiny-residual forward on 1x3x32x32: {1000 * (time.perf_counter() - t0):.1f} ms, "
      f"probabilities {[round(p, 4) for p in probs.array[0].tolist()]}")

print("\nfirst lines of the inspect dump (id, kind, output shape, params):")
for line in inspect_dump(tiny_r).splitlines()[:6]:
    print(f"  {line}")

print("\n== full architectures ==")
t0 = time.perf_counter()
inception = build_inception_v3(3, 299, seed=2)
print(f"inception-v3 built in {time.perf_counter() - t0:.1f}s")
pi, mi = describe(inception)

if "--full" in sys.argv:
    t0 = time.perf_counter()
    resnet = build_resnet152(3, 224, seed=2)
    print(f"resnet-152 built in {time.perf_counter() - t0:.1f}s")
    pr, mr = describe(resnet)
    print(f"\ninception-v3 uses {pr / pi:.1f}x fewer parameters and "
          f"{mr / mi:.1f}x less estimated memory than resnet-152 - "
          "the reason it is the deployment choice.")
else:
    print("\n(rerun with --full to build resnet-152 and see the memory comparison)")
