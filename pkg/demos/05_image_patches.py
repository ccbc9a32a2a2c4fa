"""Turn labeled raster images into bags of patch feature vectors.

Draws two synthetic grayscale images with bright blobs, writes them as PGM,
tiles them into patches and featurizes each patch.
"""

import tempfile
from pathlib import Path

import numpy as np

from spmiml.patching import (PatchSpec, RasterImage, feature_dim, grid_shape, image_to_bag,
                             read_pnm, write_pnm)

rng = np.random.default_rng(0)


def blob_image(h, w, n_blobs):
    yy, xx = np.mgrid[:h, :w]
    img = rng.random((h, w)) * 0.1
    for _ in range(n_blobs):
        cy, cx = rng.integers(0, h), rng.integers(0, w)
        img += np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / 200.0)
    return RasterImage(np.clip(img, 0, 1)[:, :, None])


with tempfile.TemporaryDirectory() as tmp:
    spec = PatchSpec(size=64)
    for i, (h, w, labels) in enumerate([(200, 300, [0]), (256, 256, [1, 2])]):
        path = Path(tmp) / f"img{i}.pgm"
        write_pnm(blob_image(h, w, 6), path)
        img = read_pnm(path)
        rows, cols = grid_shape(w, h, spec)
        bag = image_to_bag(img, np.isin(np.arange(3), labels).astype(int), f"img{i}", spec)
        print(f"{path.name}: {w}x{h} -> {rows} rows x {cols} cols, {len(bag)} patches, "
              f"feature dim {feature_dim(1)}")
        feats = bag.feature_matrix()
        bright = int(np.argmax(feats[:, -4]))
        print(f"  brightest patch {bright}: mean {feats[bright, -4]:.3f}, "
              f"edge strength {feats[bright, -1]:.3f}")
