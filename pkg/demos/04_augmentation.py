"""The augmentation recipe, step by step and end to end.

Each training image spawns augmented variants: optional horizontal flip,
zoom in [0.8, 1.2], shear in [-0.1, 0.1], a +/-20 degree (or zero) rotation,
and a 90% random crop resized back up.  Everything is driven by one seed, so
the expanded corpus is bit-reproducible.  A contact sheet is written next to
this script as augmentation_sheet.png.
"""

from pathlib import Path

import numpy as np

from fusiscan.augment import (
    AugmentationConfig,
    affine_transform,
    augment,
    horizontal_flip,
    random_crop,
    rotation_matrix,
    zoom_matrix,
)
from fusiscan.dataset import expand_with_augmentation
from fusiscan.imageio import ClassLabel, LabeledImage, write_image
from fusiscan.tensor import Rng


def leafy_image(size=96, seed=5):
    """A synthetic leaf: bright green ellipse with dark streak marks on noise."""
    rng = Rng(seed)
    px = rng.normal_array((size, size, 3), 70, 12)
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float32)
    cy = cx = (size - 1) / 2
    ellipse = ((xs - cx) / (size * 0.45)) ** 2 + ((ys - cy) / (size * 0.3)) ** 2 <= 1.0
    px[ellipse, 1] += 120  # green body
    for k in range(4):  # disease-like streaks
        band = (np.abs((xs - cx) - (ys - cy) * 0.5 + (k - 1.5) * 14) < 2) & ellipse
        px[band] = 35
    return LabeledImage(np.clip(px, 0, 255).astype(np.uint8), ClassLabel.BLACK_SIGATOKA,
                        source_path="demo/leaf.png")


img = leafy_image()
print(f"source image: {img.width}x{img.height}, label {img.label.display_name}")

steps = [
    ("original", img),
    ("flipped", horizontal_flip(img)),
    ("zoom 1.2", affine_transform(img, zoom_matrix(1.2))),
    ("rotate +20", affine_transform(img, rotation_matrix(20))),
    ("crop 0.9", random_crop(img, 0.9, Rng(3))),
]

cfg = AugmentationConfig()
variants = augment(img, cfg, Rng(41))
print(f"\naugment() with the default recipe produced {len(variants)} variants:")
for v in variants:
    print(f"  lineage: {v.lineage}")

sheet = np.concatenate(
    [s.pixels for _, s in steps] + [v.pixels for v in variants[:3]], axis=1
)
out = Path(__file__).with_name("augmentation_sheet.png")
write_image(out, sheet)
print(f"\ncontact sheet ({' | '.join(name for name, _ in steps)} | 3 variants)")
print(f"written to {out}")

corpus = [leafy_image(seed=s) for s in range(30)]
expanded = expand_with_augmentation(corpus, cfg, seed=9)
print(f"\ncorpus expansion: {len(corpus)} sources x (1 + {cfg.per_image_variants} variants) "
      f"= {len(expanded)} images")
print("the published corpus followed the same shape: 3000 sources -> 18000 images")
