"""Saliency-driven object cut-out, recoloring, resizing and compositing.

Objects are premultiplied: the stored color is already the source color
times the matte, which is exactly what cutting out with a soft saliency map
produces.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError


@dataclass
class SegmentedObject:
    color: np.ndarray  # H x W x 3, premultiplied
    alpha: np.ndarray  # H x W in [0, 1]


def segment_object(img, sal, binarize=None):
    """Cut the salient object out of ``img`` using ``sal`` as the matte.

    With ``binarize`` set, the matte becomes ``sal >= binarize``.
    """
    img = np.asarray(img, dtype=np.float64)
    alpha = np.clip(np.asarray(sal, dtype=np.float64), 0.0, 1.0)
    if img.shape[:2] != alpha.shape:
        raise ShapeMismatchError(f"image {img.shape[:2]} and saliency {alpha.shape} differ")
    if binarize is not None:
        alpha = (alpha >= binarize).astype(np.float64)
    return SegmentedObject(img * alpha[:, :, None], alpha)


def recolor(obj, permutation=(0, 1, 2), gains=(1.0, 1.0, 1.0)):
    """Shuffle and scale the object's channels where its matte is non-zero.

    ``permutation[c]`` names the source channel written to output channel
    ``c``; gains must lie in [0, 2]. Results are clamped to the matte so the
    object stays a valid premultiplied image.
    """
    perm = tuple(int(p) for p in permutation)
    if sorted(perm) != [0, 1, 2]:
        raise ValueError(f"permutation must reorder (0, 1, 2), got {permutation}")
    gains = np.asarray(gains, dtype=np.float64)
    if gains.shape != (3,) or np.any(gains < 0) or np.any(gains > 2):
        raise ValueError(f"gains must be three values in [0, 2], got {gains.tolist()}")
    changed = obj.color[:, :, perm] * gains
    changed = np.minimum(np.clip(changed, 0.0, 1.0), obj.alpha[:, :, None])
    inside = (obj.alpha > 0)[:, :, None]
    return SegmentedObject(np.where(inside, changed, obj.color), obj.alpha.copy())


def _lerp(a, b, t):
    # a + (b - a) t is exact when a == b; the clamp absorbs last-bit rounding
    return np.clip(a + (b - a) * t, np.minimum(a, b), np.maximum(a, b))


def _axis_coords(src, dst):
    if dst == 1:
        return np.zeros(1)
    return np.arange(dst) * ((src - 1) / (dst - 1))


def resize_bilinear(img, new_w, new_h):
    """Bilinear resize with corner-aligned sampling.

    Destination index ``i`` samples source coordinate ``i * (src - 1) / (dst - 1)``;
    a one-pixel axis samples coordinate 0. Works on H x W and H x W x C arrays.
    """
    if new_w < 1 or new_h < 1:
        raise ValueError(f"target size must be at least 1 x 1, got {new_w} x {new_h}")
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    ys = _axis_coords(h, new_h)
    xs = _axis_coords(w, new_w)
    y0 = np.minimum(np.floor(ys).astype(int), h - 1)
    x0 = np.minimum(np.floor(xs).astype(int), w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = ys - y0
    fx = xs - x0
    if img.ndim == 3:
        fy = fy[:, None, None]
        fx = fx[None, :, None]
    else:
        fy = fy[:, None]
        fx = fx[None, :]
    top = _lerp(img[y0][:, x0], img[y0][:, x1], fx)
    bottom = _lerp(img[y1][:, x0], img[y1][:, x1], fx)
    return _lerp(top, bottom, fy)


def resize_object(obj, new_w, new_h):
    return SegmentedObject(resize_bilinear(obj.color, new_w, new_h),
                           resize_bilinear(obj.alpha, new_w, new_h))


def composite(bg, obj, at=(0, 0)):
    """Place ``obj`` over ``bg`` with its top-left corner at ``at = (x, y)``.

    Premultiplied over: ``out = color + (1 - alpha) * bg`` inside the
    placement window, clipped to the background.
    """
    bg = np.asarray(bg, dtype=np.float64)
    out = bg.copy()
    x, y = int(at[0]), int(at[1])
    oh, ow = obj.alpha.shape
    bh, bw = bg.shape[:2]
    x0, y0 = max(x, 0), max(y, 0)
    x1, y1 = min(x + ow, bw), min(y + oh, bh)
    if x0 >= x1 or y0 >= y1:
        raise ValueError(f"object of size {ow} x {oh} at {at} lies entirely outside the "
                         f"{bw} x {bh} background")
    win = (slice(y0, y1), slice(x0, x1))
    src = (slice(y0 - y, y1 - y), slice(x0 - x, x1 - x))
    a = obj.alpha[src][:, :, None]
    out[win] = obj.color[src] + (1.0 - a) * bg[win]
    return out
