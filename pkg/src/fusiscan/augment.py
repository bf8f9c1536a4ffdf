"""Deterministic image augmentation: flips, affine warps, crops.

All geometry is implemented here directly (inverse mapping with bilinear
interpolation about the image center, nearest-edge fill); codecs may be
borrowed but resampling may not.  Every operation is a pure function of
(pixels, parameters, rng draw), so a fixed seed reproduces augmented pixels
bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .imageio import LabeledImage
from .tensor import Rng


class TransformError(ValueError):
    """The requested geometric transform is degenerate."""


class ConfigError(ValueError):
    """An augmentation or split configuration violates its invariants."""


@dataclass
class AugmentationConfig:
    """The augmentation recipe: flip, zoom 0.2, shear 0.1, +/-20 degree rotations, crop, 1/255 rescale.

    Each source image yields `per_image_variants` augmented copies (plus
    itself under full-corpus expansion, so the default of 5 turns each source
    into 6 images).
    """

    horizontal_flip: bool = True
    zoom_range: float = 0.2
    shear_range: float = 0.1
    rotation_pair: tuple[float, float] = (20.0, -20.0)
    crop_fraction: float = 0.9
    rescale: float = 1.0 / 255.0
    per_image_variants: int = 5

    def __post_init__(self):
        if not 0.0 <= self.zoom_range < 1.0:
            raise ConfigError(f"zoom_range must be in [0,1), got {self.zoom_range}")
        if not 0.0 <= self.shear_range < 1.0:
            raise ConfigError(f"shear_range must be in [0,1), got {self.shear_range}")
        if not 0.0 < self.crop_fraction <= 1.0:
            raise ConfigError(f"crop_fraction must be in (0,1], got {self.crop_fraction}")
        if len(self.rotation_pair) != 2:
            raise ConfigError("rotation_pair needs exactly two angles")
        if self.per_image_variants < 0:
            raise ConfigError("per_image_variants must be >= 0")


def _pixels_of(img) -> np.ndarray:
    return img.pixels if isinstance(img, LabeledImage) else np.asarray(img)


def _rewrap(img, pixels: np.ndarray, lineage):
    if isinstance(img, LabeledImage):
        return img.with_pixels(pixels, lineage)
    return pixels


def horizontal_flip(img):
    """Reverse column order per row; applying it twice restores the input."""
    px = _pixels_of(img)
    return _rewrap(img, np.ascontiguousarray(px[:, ::-1]), "flip")


def zoom_matrix(factor: float) -> np.ndarray:
    """Inverse-map scaling: factor > 1 enlarges the image content."""
    if abs(factor) < 1e-9:
        raise TransformError("zoom factor too close to zero")
    return np.array([[1.0 / factor, 0.0, 0.0], [0.0, 1.0 / factor, 0.0]])


def shear_matrix(s: float) -> np.ndarray:
    """Horizontal shear: unit matrix with the upper off-diagonal set to s."""
    return np.array([[1.0, s, 0.0], [0.0, 1.0, 0.0]])


def rotation_matrix(degrees: float) -> np.ndarray:
    """Standard rotation about the image center."""
    t = math.radians(degrees)
    return np.array([[math.cos(t), -math.sin(t), 0.0], [math.sin(t), math.cos(t), 0.0]])


def compose(*matrices: np.ndarray) -> np.ndarray:
    """Combine 2x3 inverse maps; the first argument is applied to output coords first."""
    a = np.eye(3)
    for m in matrices:
        m3 = np.vstack([m, [0.0, 0.0, 1.0]])
        a = a @ m3
    return a[:2]


def _bilinear_sample(channels: np.ndarray, sx: np.ndarray, sy: np.ndarray) -> np.ndarray:
    """Sample HxWxC float data at fractional (x, y), clamping to the nearest edge."""
    h, w = channels.shape[:2]
    sx = np.clip(sx, 0.0, w - 1.0)
    sy = np.clip(sy, 0.0, h - 1.0)
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (sx - x0)[..., None]
    fy = (sy - y0)[..., None]
    top = channels[y0, x0] * (1.0 - fx) + channels[y0, x1] * fx
    bottom = channels[y1, x0] * (1.0 - fx) + channels[y1, x1] * fx
    return top * (1.0 - fy) + bottom * fy


def affine_transform(img, matrix) -> "LabeledImage | np.ndarray":
    """Warp by a 2x3 inverse map about the image center; output size equals input size.

    matrix maps output coordinates (x, y relative to the center) to source
    coordinates; out-of-bounds samples take the nearest edge pixel.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.shape != (2, 3):
        raise TransformError(f"affine matrix must be 2x3, got {m.shape}")
    if abs(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]) < 1e-9:
        raise TransformError("affine matrix is singular")
    px = _pixels_of(img)
    h, w = px.shape[:2]
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    ys, xs = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    dx = xs - cx
    dy = ys - cy
    sx = m[0, 0] * dx + m[0, 1] * dy + m[0, 2] + cx
    sy = m[1, 0] * dx + m[1, 1] * dy + m[1, 2] + cy
    out = _bilinear_sample(px.astype(np.float64), sx, sy)
    out = np.clip(np.rint(out), 0, 255).astype(np.uint8)
    return _rewrap(img, out, "affine")


def bilinear_resize(pixels: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize HxWxC data bilinearly (half-pixel centers); returns float64.

    When the output size equals the input size the sample grid hits pixel
    centers exactly, so values pass through unchanged.
    """
    if out_h < 1 or out_w < 1:
        raise TransformError(f"resize target {out_h}x{out_w} invalid")
    h, w = pixels.shape[:2]
    scale_y = h / out_h
    scale_x = w / out_w
    sy = (np.arange(out_h, dtype=np.float64) + 0.5) * scale_y - 0.5
    sx = (np.arange(out_w, dtype=np.float64) + 0.5) * scale_x - 0.5
    sx, sy = np.meshgrid(sx, sy)
    return _bilinear_sample(pixels.astype(np.float64), sx, sy)


def random_crop(img, fraction: float, rng: Rng):
    """Crop a fraction-sized window at an rng-chosen offset, then resize back up."""
    if not 0.0 < fraction <= 1.0:
        raise ConfigError(f"crop fraction must be in (0,1], got {fraction}")
    px = _pixels_of(img)
    h, w = px.shape[:2]
    ch = max(1, int(round(fraction * h)))
    cw = max(1, int(round(fraction * w)))
    oy = rng.below(h - ch + 1)
    ox = rng.below(w - cw + 1)
    lineage = f"crop={fraction:g}@({oy},{ox})"
    window = px[oy : oy + ch, ox : ox + cw]
    if (ch, cw) == (h, w):
        return _rewrap(img, window.copy(), lineage)
    out = np.clip(np.rint(bilinear_resize(window, h, w)), 0, 255).astype(np.uint8)
    return _rewrap(img, out, lineage)


def augment(img: LabeledImage, cfg: AugmentationConfig, rng: Rng) -> list[LabeledImage]:
    """Produce cfg.per_image_variants augmented copies of one image.

    Each variant draws: optional flip (p=0.5), zoom uniform in
    [1-zoom_range, 1+zoom_range], shear uniform in [-shear_range,
    +shear_range], a rotation angle from rotation_pair or 0, then a random
    crop.  The label is preserved and the draw is recorded as the lineage.
    """
    variants = []
    angles = tuple(cfg.rotation_pair) + (0.0,)
    for _ in range(cfg.per_image_variants):
        flipped = cfg.horizontal_flip and rng.uniform() < 0.5
        zoom = rng.uniform(1.0 - cfg.zoom_range, 1.0 + cfg.zoom_range)
        shear = rng.uniform(-cfg.shear_range, cfg.shear_range)
        angle = angles[rng.below(len(angles))]
        stage = horizontal_flip(img) if flipped else img
        matrix = compose(zoom_matrix(zoom), shear_matrix(shear), rotation_matrix(angle))
        stage = affine_transform(stage, matrix)
        stage = random_crop(stage, cfg.crop_fraction, rng)
        lineage = (
            f"flip={int(flipped)},zoom={zoom:.6f},shear={shear:.6f},"
            f"rot={angle:g},{stage.lineage}"
        )
        variants.append(img.with_pixels(stage.pixels, lineage))
    return variants
