"""Dark channel prior and the small-target mode built on it.

In small-target mode the normalized dark channel stands in for the depth
map: a dark, opaque target over a bright sky has a low dark channel, the
same way a camera-near object has low depth, so the ordinary three-layer
pipeline picks it out.
"""

import numpy as np
from scipy.ndimage import minimum_filter

from .imageio import DepthMap, Polarity, normalize_minmax
from .saliency import PipelineParams, detect

DEFAULT_PATCH = 15


def dark_channel(img, patch=DEFAULT_PATCH):
    """Per-pixel channel minimum followed by a ``patch`` x ``patch`` min filter.

    Windows are clipped at the image border.
    """
    if int(patch) != patch or patch < 1 or patch % 2 == 0:
        raise ValueError(f"patch must be an odd integer >= 1, got {patch}")
    img = np.asarray(img, dtype=np.float64)
    channel_min = img.min(axis=2) if img.ndim == 3 else img
    # edge replication never lowers a window minimum, so it equals clipping
    return minimum_filter(channel_min, size=int(patch), mode="nearest")


def small_target_detect(img, params=None, patch=DEFAULT_PATCH, polarity=Polarity.NEAR_IS_LOW,
                        w_c=None):
    """Detect small targets by running :func:`detect` with the dark channel as depth.

    ``polarity`` says how the normalized dark channel reads as depth; the
    default treats low values (dark, opaque targets) as near.
    """
    params = params or PipelineParams()
    dcp = normalize_minmax(dark_channel(img, patch))
    return detect(img, DepthMap(dcp, Polarity.parse(polarity)), params, w_c=w_c)
