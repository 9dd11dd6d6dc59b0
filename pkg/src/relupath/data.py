"""MNIST IDX ingestion and pixel addressing.

Pixel index convention everywhere: index = 28 * row + col, row 0 at the
top of the image. Normalization maps byte values to [0, 1] by dividing by
255; the fixture trainer must use the same scheme so the weight file and
the attack range bounds agree.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
SIDE = 28


class IdxFormatError(ValueError):
    """IDX file has a bad magic number, bad dimensions, or a short payload."""


@dataclass(frozen=True)
class MnistSet:
    images: np.ndarray  # (count, 28, 28) uint8
    labels: np.ndarray  # (count,) uint8, values 0..9

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise ValueError(f"{len(self.images)} images but {len(self.labels)} labels")

    @property
    def count(self) -> int:
        return len(self.labels)


def read_idx_images(path) -> np.ndarray:
    """Read a big-endian IDX image file into a (count, 28, 28) uint8 array."""
    with open(path, "rb") as fh:
        payload = fh.read()
    if len(payload) < 16:
        raise IdxFormatError(f"{path}: truncated header")
    magic, count, rows, cols = struct.unpack(">IIII", payload[:16])
    if magic != IMAGE_MAGIC:
        raise IdxFormatError(f"{path}: bad magic {magic}, expected {IMAGE_MAGIC}")
    if rows != SIDE or cols != SIDE:
        raise IdxFormatError(f"{path}: unexpected dimensions {rows}x{cols}, expected {SIDE}x{SIDE}")
    body = payload[16:]
    if len(body) != count * SIDE * SIDE:
        raise IdxFormatError(f"{path}: payload holds {len(body)} bytes, header promises {count * SIDE * SIDE}")
    return np.frombuffer(body, dtype=np.uint8).reshape(count, SIDE, SIDE)


def read_idx_labels(path) -> np.ndarray:
    """Read a big-endian IDX label file into a (count,) uint8 array."""
    with open(path, "rb") as fh:
        payload = fh.read()
    if len(payload) < 8:
        raise IdxFormatError(f"{path}: truncated header")
    magic, count = struct.unpack(">II", payload[:8])
    if magic != LABEL_MAGIC:
        raise IdxFormatError(f"{path}: bad magic {magic}, expected {LABEL_MAGIC}")
    body = payload[8:]
    if len(body) != count:
        raise IdxFormatError(f"{path}: payload holds {len(body)} labels, header promises {count}")
    labels = np.frombuffer(body, dtype=np.uint8)
    if labels.size and labels.max() > 9:
        raise IdxFormatError(f"{path}: label {int(labels.max())} out of range 0..9")
    return labels


def load_mnist(prefix) -> MnistSet:
    """Load `<prefix>-images-idx3-ubyte` and `<prefix>-labels-idx1-ubyte`."""
    images = read_idx_images(f"{prefix}-images-idx3-ubyte")
    labels = read_idx_labels(f"{prefix}-labels-idx1-ubyte")
    return MnistSet(images=images, labels=labels)


def normalize(grid: np.ndarray) -> np.ndarray:
    """Row-major flatten of a 28x28 byte grid to floats in [0, 1] (byte/255)."""
    grid = np.asarray(grid)
    if grid.shape != (SIDE, SIDE):
        raise ValueError(f"grid has shape {grid.shape}, expected ({SIDE}, {SIDE})")
    return grid.reshape(-1).astype(np.float64) / 255.0


def denormalize(values: np.ndarray) -> np.ndarray:
    """Inverse of normalize: round(v * 255) back to a 28x28 byte grid."""
    values = np.asarray(values, dtype=np.float64)
    return np.round(values * 255.0).astype(np.uint8).reshape(SIDE, SIDE)


def select_image(selector: str, default_prefix: str) -> tuple[np.ndarray, int, str]:
    """Resolve a CLI image selector to (normalized pixels, label, description).

    `idx:<path-prefix>:<index>` picks by position from that IDX pair;
    `digit:<d>` picks the first image with label d from the default prefix.
    """
    parts = selector.split(":")
    if parts[0] == "idx":
        if len(parts) != 3:
            raise ValueError(f"bad selector '{selector}', expected idx:<path-prefix>:<index>")
        prefix, idx_text = parts[1], parts[2]
        try:
            index = int(idx_text)
        except ValueError:
            raise ValueError(f"bad selector index '{idx_text}'") from None
        dataset = load_mnist(prefix)
        if not 0 <= index < dataset.count:
            raise ValueError(f"index {index} out of range, dataset has {dataset.count} images")
        return normalize(dataset.images[index]), int(dataset.labels[index]), f"{prefix}[{index}]"
    if parts[0] == "digit":
        if len(parts) != 2:
            raise ValueError(f"bad selector '{selector}', expected digit:<d>")
        try:
            digit = int(parts[1])
        except ValueError:
            raise ValueError(f"bad selector digit '{parts[1]}'") from None
        if not 0 <= digit <= 9:
            raise ValueError(f"digit must be 0..9, got {digit}")
        dataset = load_mnist(default_prefix)
        matches = np.nonzero(dataset.labels == digit)[0]
        if matches.size == 0:
            raise ValueError(f"no image with label {digit} in {default_prefix}")
        index = int(matches[0])
        return normalize(dataset.images[index]), digit, f"{default_prefix}[{index}] (first {digit})"
    raise ValueError(f"bad selector '{selector}', expected idx:... or digit:<d>")


def write_idx_images(path, images: np.ndarray) -> None:
    """Write (count, 28, 28) bytes as an IDX image file (test/tool helper)."""
    images = np.asarray(images, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IMAGE_MAGIC, images.shape[0], SIDE, SIDE))
        fh.write(images.tobytes())


def write_idx_labels(path, labels: np.ndarray) -> None:
    """Write labels as an IDX label file (test/tool helper)."""
    labels = np.asarray(labels, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", LABEL_MAGIC, labels.shape[0]))
        fh.write(labels.tobytes())
