"""Image, depth-map and dataset I/O.

Only PNG and binary PGM/PPM rasters are accepted (8 or 16 bit). Color
images come back as H x W x 3 float64 arrays in [0, 1] in RGB order.
"""

import enum
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from .errors import (ChannelError, DatasetError, EmptyImageError, ImageReadError,
                     ImageWriteError, UnsupportedBitDepthError)

SUPPORTED_EXTENSIONS = (".png", ".pgm", ".ppm", ".pnm")


class Polarity(enum.Enum):
    NEAR_IS_LOW = "near-low"
    NEAR_IS_HIGH = "near-high"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"near-low": cls.NEAR_IS_LOW, "nearislow": cls.NEAR_IS_LOW,
                   "near-high": cls.NEAR_IS_HIGH, "nearishigh": cls.NEAR_IS_HIGH}
        if key not in aliases:
            raise ValueError(f"unknown depth polarity {value!r}; use near-low or near-high")
        return aliases[key]


@dataclass
class DepthMap:
    """A depth raster in [0, 1] and the convention its values follow."""

    data: np.ndarray
    polarity: Polarity = Polarity.NEAR_IS_LOW

    @property
    def shape(self):
        return self.data.shape

    def near_low(self):
        """Values in the near-is-low convention (camera-near pixels small)."""
        if self.polarity is Polarity.NEAR_IS_HIGH:
            return 1.0 - self.data
        return self.data


def _read_raw(path):
    path = Path(path)
    if path.suffix.lower() not in SUPPORTED_EXTENSIONS:
        raise ImageReadError(path, f"unsupported format {path.suffix!r}; expected PNG or PGM/PPM")
    if not path.is_file():
        raise ImageReadError(path, "no such file")
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ImageReadError(path, "decode failed (corrupt or truncated file)")
    if raw.size == 0 or min(raw.shape[:2]) == 0:
        raise EmptyImageError(path)
    if raw.dtype == np.uint8:
        scale = 255.0
    elif raw.dtype == np.uint16:
        scale = 65535.0
    else:
        raise UnsupportedBitDepthError(path, raw.dtype)
    return raw, scale


def load_rgb(path):
    """Load a color or grayscale raster as RGB floats in [0, 1].

    Grayscale is promoted to three identical channels; an alpha channel,
    if present, is dropped.
    """
    raw, scale = _read_raw(path)
    img = raw.astype(np.float64) / scale
    if img.ndim == 2:
        return np.repeat(img[:, :, None], 3, axis=2)
    if img.shape[2] == 1:
        return np.repeat(img, 3, axis=2)
    if img.shape[2] == 4:
        img = img[:, :, :3]
    return np.ascontiguousarray(img[:, :, ::-1])


def normalize_minmax(values):
    """Min-max normalize to [0, 1]; a constant input maps to all zeros."""
    values = np.asarray(values, dtype=np.float64)
    lo, hi = values.min(), values.max()
    if hi <= lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def load_gray(path):
    """Load a single-channel raster scaled by its format maximum."""
    raw, scale = _read_raw(path)
    if raw.ndim == 3:
        raise ChannelError(path, raw.shape[2])
    return raw.astype(np.float64) / scale


def load_saliency(path):
    """Load a saliency map; color files are averaged over their channels."""
    raw, scale = _read_raw(path)
    img = raw.astype(np.float64) / scale
    if img.ndim == 3:
        img = img[:, :, :3].mean(axis=2)
    return img


def load_depth(path, polarity=Polarity.NEAR_IS_LOW):
    """Load a single-channel depth raster, min-max normalized per image."""
    raw, _ = _read_raw(path)
    if raw.ndim == 3:
        raise ChannelError(path, raw.shape[2])
    return DepthMap(normalize_minmax(raw), Polarity.parse(polarity))


def load_mask(path):
    """Load a ground-truth mask binarized at 0.5."""
    raw, scale = _read_raw(path)
    if raw.ndim == 3:
        raw = raw[:, :, :3].max(axis=2)
    return (raw.astype(np.float64) / scale >= 0.5).astype(np.float64)


def _atomic_write(path, array):
    path = Path(path)
    if path.parent and not path.parent.exists():
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ImageWriteError(path, str(exc)) from exc
    fd, tmp = tempfile.mkstemp(suffix=".png", dir=path.parent or ".")
    os.close(fd)
    try:
        if not cv2.imwrite(tmp, array):
            raise ImageWriteError(path, "PNG encoding failed")
        os.replace(tmp, path)
    except (OSError, cv2.error) as exc:
        raise ImageWriteError(path, str(exc)) from exc
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def to_uint8(values):
    """Quantize [0, 1] floats to bytes with round-half-up."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)


def save_saliency(smap, path):
    """Write a [0, 1] map as an 8-bit grayscale PNG (byte = round(v * 255))."""
    smap = np.asarray(smap)
    if smap.ndim != 2:
        raise ValueError(f"saliency map must be 2-D, got shape {smap.shape}")
    _atomic_write(path, to_uint8(smap))


def save_rgb(img, path):
    """Write an RGB [0, 1] image as an 8-bit PNG."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected H x W x 3 image, got shape {img.shape}")
    _atomic_write(path, to_uint8(img)[:, :, ::-1])


@dataclass
class DatasetLayout:
    """Where the three kinds of raster live under a dataset root.

    A file ``<rgb_dir>/<id><rgb_suffix>.<ext>`` pairs with
    ``<depth_dir>/<id><depth_suffix>.<ext>`` and optionally
    ``<gt_dir>/<id><gt_suffix>.<ext>``.
    """

    rgb_dir: str = "rgb"
    depth_dir: str = "depth"
    gt_dir: str = "gt"
    rgb_suffix: str = ""
    depth_suffix: str = ""
    gt_suffix: str = ""
    extensions: tuple = SUPPORTED_EXTENSIONS


@dataclass
class DatasetEntry:
    id: str
    rgb: Path
    depth: Path
    gt: Path = None


@dataclass
class DatasetIndex:
    root: Path
    entries: list = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def _index_dir(directory, suffix, extensions):
    found = {}
    if not directory.is_dir():
        return found
    for p in sorted(directory.iterdir()):
        if not p.is_file() or p.suffix.lower() not in extensions:
            continue
        stem = p.stem
        if suffix:
            if not stem.endswith(suffix):
                continue
            stem = stem[: -len(suffix)]
        found.setdefault(stem, p)
    return found


def scan_dataset(root, layout=None):
    """Enumerate (rgb, depth, gt) triples under ``root``, sorted by id.

    Every RGB id needs a depth map with the same stem; ground truth is
    optional per entry.
    """
    root = Path(root)
    layout = layout or DatasetLayout()
    if not root.is_dir():
        raise DatasetError(f"dataset root {root} does not exist")
    rgb = _index_dir(root / layout.rgb_dir, layout.rgb_suffix, layout.extensions)
    depth = _index_dir(root / layout.depth_dir, layout.depth_suffix, layout.extensions)
    gt = _index_dir(root / layout.gt_dir, layout.gt_suffix, layout.extensions)
    missing = [i for i in sorted(rgb) if i not in depth]
    if missing:
        raise DatasetError("missing depth map for", missing)
    entries = [DatasetEntry(i, rgb[i], depth[i], gt.get(i)) for i in sorted(rgb)]
    return DatasetIndex(root, entries)


def list_images(directory):
    """Supported raster files in ``directory`` keyed by stem, sorted."""
    return _index_dir(Path(directory), "", SUPPORTED_EXTENSIONS)
