"""Class labels, the labeled-image container, and image codecs.

PNG and JPEG decoding delegates to Pillow; PPM (P6) has a self-contained
reader/writer so golden tests need no codec dependency.  All geometric work
lives in `augment` - codecs only move bytes to and from uint8 HxWx3 arrays.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image, UnidentifiedImageError


class DecodeError(ValueError):
    """The byte stream is not a decodable image."""


class ClassLabel(IntEnum):
    """The three diagnosis classes, with stable integer codes."""

    BLACK_SIGATOKA = 0
    FUSARIUM_WILT_RACE1 = 1
    HEALTHY = 2

    @property
    def dir_name(self) -> str:
        return _DIR_NAMES[self]

    @property
    def display_name(self) -> str:
        return _DISPLAY_NAMES[self]

    @classmethod
    def from_dir_name(cls, name: str) -> "ClassLabel":
        for label, dir_name in _DIR_NAMES.items():
            if dir_name == name:
                return label
        raise KeyError(f"unknown class directory {name!r}")


_DIR_NAMES = {
    ClassLabel.BLACK_SIGATOKA: "black_sigatoka",
    ClassLabel.FUSARIUM_WILT_RACE1: "fusarium_wilt_race1",
    ClassLabel.HEALTHY: "healthy",
}

_DISPLAY_NAMES = {
    ClassLabel.BLACK_SIGATOKA: "Black Sigatoka",
    ClassLabel.FUSARIUM_WILT_RACE1: "Fusarium wilt race 1",
    ClassLabel.HEALTHY: "Healthy",
}

CANONICAL_DIRS = tuple(_DIR_NAMES[label] for label in ClassLabel)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".ppm")


@dataclass
class LabeledImage:
    """Decoded RGB pixels (uint8, HxWx3) with a class label and provenance."""

    pixels: np.ndarray
    label: ClassLabel
    source_path: str = ""
    lineage: Optional[str] = None

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] < 1 or px.shape[1] < 1:
            raise DecodeError(f"pixels must be HxWx3, got {px.shape}")
        if px.dtype != np.uint8:
            raise DecodeError(f"pixels must be uint8, got {px.dtype}")
        self.pixels = px

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def with_pixels(self, pixels: np.ndarray, lineage: Optional[str] = None) -> "LabeledImage":
        return LabeledImage(pixels, self.label, self.source_path, lineage)


def read_ppm(data: bytes) -> np.ndarray:
    """Parse a binary P6 PPM with maxval <= 255 into a uint8 HxWx3 array."""
    if not data.startswith(b"P6"):
        raise DecodeError("not a P6 PPM")
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] not in (0x0A, 0x0D):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise DecodeError(f"bad PPM header token {token!r}")
        fields.append(int(token))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise DecodeError(f"bad PPM size {width}x{height}")
    if maxval != 255:
        raise DecodeError(f"only maxval 255 supported, got {maxval}")
    need = width * height * 3
    raster = data[pos : pos + need]
    if len(raster) != need:
        raise DecodeError(f"PPM raster truncated: {len(raster)} of {need} bytes")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3).copy()


def write_ppm(pixels: np.ndarray) -> bytes:
    px = np.ascontiguousarray(pixels, dtype=np.uint8)
    h, w = px.shape[:2]
    return b"P6\n%d %d\n255\n" % (w, h) + px.tobytes()


def decode_image_bytes(data: bytes, allow_ppm: bool = True) -> np.ndarray:
    """Decode PNG/JPEG (via Pillow) or PPM bytes into a uint8 HxWx3 RGB array."""
    if not data:
        raise DecodeError("empty image payload")
    if data.startswith(b"P6"):
        if not allow_ppm:
            raise DecodeError("PPM not accepted here; send PNG or JPEG")
        return read_ppm(data)
    try:
        with Image.open(io.BytesIO(data)) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8).copy()
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(f"cannot decode image: {exc}") from exc


def read_image(path) -> np.ndarray:
    return decode_image_bytes(Path(path).read_bytes())


def write_image(path, pixels: np.ndarray):
    """Write uint8 HxWx3 pixels; the format follows the file suffix."""
    path = Path(path)
    if path.suffix.lower() == ".ppm":
        path.write_bytes(write_ppm(pixels))
    else:
        Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8), "RGB").save(path)


def load_labeled_image(path, label: ClassLabel) -> LabeledImage:
    return LabeledImage(read_image(path), label, source_path=str(path))
