"""Generated RGB-D scenes with known ground truth, for demos and tests."""

import numpy as np


def disk_scene(width=320, height=240, radius=None, center=None, seed=0,
               near=0.1, far=0.9, noise=0.02):
    """A bright disk close to the camera in front of a dark textured wall.

    Returns
    -------
    img : H x W x 3 array in [0, 1]
    depth : H x W array in [0, 1], near-is-low
    gt : H x W binary mask of the disk
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width]
    if radius is None:
        radius = min(width, height) // 5
    cx, cy = center if center is not None else (width * 0.52, height * 0.48)
    gt = ((xx - cx) ** 2 + (yy - cy) ** 2 <= radius ** 2).astype(np.float64)

    # low-frequency stripes plus a checkerboard, all in dim blue/green tones
    img = np.empty((height, width, 3))
    img[..., 0] = 0.10 + 0.06 * np.sin(xx / 9.0) * np.cos(yy / 13.0)
    img[..., 1] = 0.22 + 0.10 * np.sin((xx + 2 * yy) / 17.0)
    img[..., 2] = 0.30 + 0.12 * (((xx // 16) + (yy // 16)) % 2)
    img += noise * rng.standard_normal(img.shape)
    img[gt > 0] = (0.95, 0.85, 0.35)
    img = np.clip(img, 0.0, 1.0)

    depth = far + (1.0 - far) * (yy / max(height - 1, 1)) * 0.5
    depth = np.where(gt > 0, near, depth)
    return img, np.clip(depth, 0.0, 1.0), gt


def small_target_frames(n_frames=10, width=160, height=120, blob=5, seed=0):
    """Frames of a small dark blob drifting across a bright hazy sky.

    Yields ``(frame, gt)`` pairs; ``gt`` marks the blob pixels.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width]
    sky = np.empty((height, width, 3))
    sky[..., 0] = 0.78 + 0.10 * yy / height
    sky[..., 1] = 0.84 + 0.08 * yy / height
    sky[..., 2] = 0.92 + 0.05 * yy / height
    frames = []
    for t in range(n_frames):
        frame = sky + 0.01 * rng.standard_normal(sky.shape)
        x0 = int(width * 0.3 + t * width * 0.04)
        y0 = int(height * 0.35 + 0.1 * height * np.sin(t / 2.0))
        gt = np.zeros((height, width))
        gt[y0:y0 + blob, x0:x0 + blob] = 1.0
        frame[gt > 0] = (0.12, 0.10, 0.10)
        frames.append((np.clip(frame, 0.0, 1.0), gt))
    return frames
