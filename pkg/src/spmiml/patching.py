"""Grid patching of raster images and a fixed hand-crafted patch featurizer."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Bag, EmptyInputError, Instance, ParseError, ShapeError

DROP_PARTIAL = "drop_partial"
ZERO_PAD = "zero_pad"


@dataclass
class RasterImage:
    """Pixels as an (height, width, channels) float array with values in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim == 2:
            px = px[:, :, None]
        if px.ndim != 3 or px.shape[2] not in (1, 3):
            raise ShapeError(f"expected (h, w, 1|3) pixels, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ShapeError("image must be at least 1x1")
        if px.size and (px.min() < 0 or px.max() > 1):
            raise ShapeError("pixel values must lie in [0, 1]")
        self.pixels = px

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def channels(self):
        return self.pixels.shape[2]


@dataclass(frozen=True)
class PatchSpec:
    size: int = 448
    policy: str = DROP_PARTIAL

    def __post_init__(self):
        if self.size < 8:
            raise ShapeError(f"patch size must be >= 8, got {self.size}")
        if self.policy not in (DROP_PARTIAL, ZERO_PAD):
            raise ValueError(f"unknown patch policy {self.policy!r}")


def grid_shape(width, height, spec: PatchSpec):
    """(rows, cols) of the patch grid for an image of the given size."""
    if spec.policy == DROP_PARTIAL:
        return height // spec.size, width // spec.size
    return math.ceil(height / spec.size), math.ceil(width / spec.size)


def partition(image: RasterImage, spec: PatchSpec) -> list[np.ndarray]:
    """Split ``image`` into non-overlapping size x size blocks in row-major order."""
    rows, cols = grid_shape(image.width, image.height, spec)
    if rows == 0 or cols == 0:
        raise EmptyInputError(f"{image.width}x{image.height} image is smaller than one "
                              f"{spec.size}x{spec.size} patch")
    px = image.pixels
    s = spec.size
    if spec.policy == ZERO_PAD:
        padded = np.zeros((rows * s, cols * s, image.channels))
        padded[:image.height, :image.width] = px
        px = padded
    return [px[r * s:(r + 1) * s, c * s:(c + 1) * s].copy()
            for r in range(rows) for c in range(cols)]


def feature_dim(channels: int, bins: int = 8) -> int:
    return channels * bins + 4


def featurize(patch, bins: int = 8) -> np.ndarray:
    """Per-channel normalized intensity histogram followed by
    [mean, std, fraction of pixels > 0.5, mean gradient magnitude]."""
    patch = np.asarray(patch, dtype=np.float64)
    if patch.ndim == 2:
        patch = patch[:, :, None]
    hists = []
    for c in range(patch.shape[2]):
        h, _ = np.histogram(patch[:, :, c], bins=bins, range=(0.0, 1.0))
        hists.append(h / h.sum())
    gray = patch.mean(axis=2)
    if min(gray.shape) >= 2:
        gy, gx = np.gradient(gray)
        grad = float(np.mean(np.hypot(gx, gy)))
    else:
        grad = 0.0
    stats = [patch.mean(), patch.std(), np.mean(patch > 0.5), grad]
    return np.concatenate(hists + [np.array(stats, dtype=np.float64)])


def image_to_bag(image: RasterImage, label, bag_id: str, spec: PatchSpec = PatchSpec(),
                 bins: int = 8) -> Bag:
    patches = partition(image, spec)
    instances = [Instance(j, featurize(p, bins)) for j, p in enumerate(patches)]
    return Bag(bag_id, instances, np.asarray(label, dtype=np.int8))


# --- PGM/PPM (P5/P6, 8-bit) ---

def _read_token(data: bytes, pos: int):
    n = len(data)
    while pos < n:
        if data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif data[pos:pos + 1].isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace():
        pos += 1
    if start == pos:
        raise ParseError("truncated PNM header")
    return data[start:pos], pos


def read_pnm(path) -> RasterImage:
    data = Path(path).read_bytes()
    magic, pos = _read_token(data, 0)
    if magic not in (b"P5", b"P6"):
        raise ParseError(f"unsupported PNM magic {magic!r} (need P5 or P6)")
    fields = []
    for _ in range(3):
        tok, pos = _read_token(data, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise ParseError(f"bad PNM header field {tok!r}") from None
    width, height, maxval = fields
    if maxval != 255:
        raise ParseError(f"only maxval 255 is supported, got {maxval}")
    pos += 1  # single whitespace byte before the raster
    channels = 1 if magic == b"P5" else 3
    expected = width * height * channels
    raw = np.frombuffer(data[pos:pos + expected], dtype=np.uint8)
    if raw.size != expected:
        raise ParseError(f"raster has {raw.size} bytes, expected {expected}")
    return RasterImage(raw.reshape(height, width, channels) / 255.0)


def write_pnm(image: RasterImage, path) -> None:
    magic = b"P5" if image.channels == 1 else b"P6"
    raw = np.rint(image.pixels * 255).astype(np.uint8)
    header = b"%s\n%d %d\n255\n" % (magic, image.width, image.height)
    Path(path).write_bytes(header + raw.tobytes())
