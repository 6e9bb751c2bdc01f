"""Dataset ingestion: IDX files and the synthetic bars task."""

from __future__ import annotations

import struct

import numpy as np

from ..errors import DataFormatError

IDX_IMAGES_MAGIC = 2051
IDX_LABELS_MAGIC = 2049


def _read_exact(f, n: int, what: str) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise DataFormatError(f"truncated IDX file while reading {what}")
    return buf


def load_idx(images_path: str, labels_path: str, center_crop: int | None = None,
             num_classes: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Parse an IDX image/label pair into float64 images in [0, 1].

    Images: big-endian magic 2051, then count/rows/cols uint32 and a ubyte
    payload.  Labels: magic 2049, count, ubyte payload.  Returns
    (N x 1 x H x W images, N labels); ``center_crop`` keeps the central
    crop x crop window.
    """
    with open(images_path, "rb") as f:
        magic, = struct.unpack(">i", _read_exact(f, 4, "image magic"))
        if magic != IDX_IMAGES_MAGIC:
            raise DataFormatError(f"bad image magic {magic}, expected {IDX_IMAGES_MAGIC}")
        count, rows, cols = struct.unpack(">iii", _read_exact(f, 12, "image header"))
        if count < 0 or rows <= 0 or cols <= 0:
            raise DataFormatError(f"bad image dimensions {count}x{rows}x{cols}")
        payload = _read_exact(f, count * rows * cols, "image payload")
    images = np.frombuffer(payload, dtype=np.uint8).astype(np.float64) / 255.0
    images = images.reshape(count, 1, rows, cols)

    with open(labels_path, "rb") as f:
        magic, = struct.unpack(">i", _read_exact(f, 4, "label magic"))
        if magic != IDX_LABELS_MAGIC:
            raise DataFormatError(f"bad label magic {magic}, expected {IDX_LABELS_MAGIC}")
        lcount, = struct.unpack(">i", _read_exact(f, 4, "label header"))
        labels = np.frombuffer(_read_exact(f, lcount, "label payload"), dtype=np.uint8)
    labels = labels.astype(np.int64)

    if lcount != count:
        raise DataFormatError(f"image/label count mismatch: {count} images vs {lcount} labels")
    if num_classes is not None and labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise DataFormatError(
            f"labels outside [0, {num_classes}): found range [{labels.min()}, {labels.max()}]")
    if center_crop is not None:
        if center_crop > rows or center_crop > cols:
            raise DataFormatError(f"center-crop {center_crop} exceeds image size {rows}x{cols}")
        r0 = (rows - center_crop) // 2
        c0 = (cols - center_crop) // 2
        images = images[:, :, r0:r0 + center_crop, c0:c0 + center_crop]
    return images, labels


def synthetic_bars(num_samples: int = 512, size: int = 16, seed: int = 0
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Two-class toy images: horizontal bars (label 0) vs vertical bars (label 1).

    Label-balanced, deterministic for a given seed.  Each image draws 1-3
    full-width bars at random positions with random intensity plus faint
    noise, clipped to [0, 1].
    """
    rng = np.random.default_rng(seed)
    images = np.zeros((num_samples, 1, size, size))
    labels = np.arange(num_samples) % 2
    for i in range(num_samples):
        n_bars = rng.integers(1, 4)
        positions = rng.choice(size, size=n_bars, replace=False)
        intensity = rng.uniform(0.6, 1.0, size=n_bars)
        for pos, val in zip(positions, intensity):
            if labels[i] == 0:
                images[i, 0, pos, :] = val
            else:
                images[i, 0, :, pos] = val
    images += rng.normal(0.0, 0.02, size=images.shape)
    np.clip(images, 0.0, 1.0, out=images)
    order = rng.permutation(num_samples)
    return images[order], labels[order].astype(np.int64)
