"""Boundary-seeded background-contrast prior used as the center-bias map.

Regions touching the image border are taken as background seeds. The seeds
are grouped by color, and every region is scored by its color distance to
each seed group, discounted by spatial distance. Regions unlike the border
therefore score high. This is the seed/contrast core of the boundary-prior
method only; no cellular-automaton refinement is applied. An externally
computed map can be loaded instead with :func:`load_center_bias`.
"""

import numpy as np

from .errors import ShapeMismatchError
from .imageio import load_gray, normalize_minmax
from .segmentation import kmeans, rasterize

SEED_SIGMA2 = 0.4
DEFAULT_SEED_CLUSTERS = 3


def border_regions(labels):
    """Sorted indices of the regions that own at least one border pixel."""
    labels = np.asarray(labels)
    edge = np.concatenate([labels[0], labels[-1], labels[:, 0], labels[:, -1]])
    return np.unique(edge)


def _seed_groups(seed_lab, n_groups, seed):
    n = len(seed_lab)
    n_groups = min(n_groups, n)
    if n_groups < 2:
        return np.zeros(n, dtype=np.int64), max(n_groups, 1)
    res = kmeans(seed_lab, n_groups, seed=seed)
    return res.labels, n_groups


def region_center_bias(stats, seeds, n_seed_clusters=DEFAULT_SEED_CLUSTERS,
                       sigma2=SEED_SIGMA2, seed=42):
    """Per-region background-contrast scores in [0, 1].

    Parameters
    ----------
    stats : RegionStats
        Statistics of the decomposition; only ``mean_lab`` and ``centroid``
        are used.
    seeds : array of int
        Indices of the background seed regions.
    """
    seeds = np.asarray(seeds, dtype=np.int64)
    if seeds.size == 0:
        raise ValueError("no border-touching region to seed the background")
    lab = stats.mean_lab
    pos = stats.centroid
    groups, n_groups = _seed_groups(lab[seeds], n_seed_clusters, seed)

    color_d = np.linalg.norm(lab[:, None, :] - lab[None, seeds, :], axis=2)
    space_d = np.linalg.norm(pos[:, None, :] - pos[None, seeds, :], axis=2)
    contrast = color_d * np.exp(-space_d / sigma2)  # K x n_seeds

    maps = []
    for g in range(n_groups):
        members = groups == g
        if members.any():
            maps.append(normalize_minmax(contrast[:, members].mean(axis=1)))
    return normalize_minmax(np.mean(maps, axis=0))


def center_bias_map(img, decomp, n_seed_clusters=DEFAULT_SEED_CLUSTERS,
                    sigma2=SEED_SIGMA2, seed=42):
    """Pixel-level center-bias map for ``img`` from its region decomposition."""
    if decomp.labels.shape != np.asarray(img).shape[:2]:
        raise ShapeMismatchError(
            f"decomposition {decomp.labels.shape} does not match image {np.asarray(img).shape[:2]}")
    seeds = border_regions(decomp.labels)
    values = region_center_bias(decomp.regions, seeds, n_seed_clusters, sigma2, seed)
    return normalize_minmax(rasterize(values, decomp.labels))


def load_center_bias(path, shape=None):
    """Load an external center-bias raster, min-max normalized.

    ``shape`` is the (H, W) of the image the map will be paired with.
    """
    cb = normalize_minmax(load_gray(path))
    if shape is not None and cb.shape != tuple(shape[:2]):
        raise ShapeMismatchError(f"center-bias map {path} is {cb.shape}, image is {tuple(shape[:2])}")
    return cb
