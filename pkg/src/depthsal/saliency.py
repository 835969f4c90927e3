"""Three-layer RGB-D saliency with backward mixing of earlier layers.

Every layer segments its own color image into K regions and scores each
region by area- and proximity-weighted color and depth contrast, weighted
again by closeness to the image center and to the camera. Layer 1 works on
the original image; layer 2 on the image multiplied by depth; layer 3 on
the image multiplied by a background-filtered, polarized depth. Layers 2
and 3 fold the refined scores of the layers before them into their own.

Per-region values are plain float arrays indexed by region. Depth inputs
to the equations follow the near-is-low convention.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .centerbias import DEFAULT_SEED_CLUSTERS, center_bias_map
from .errors import ShapeMismatchError
from .imageio import DepthMap, Polarity, normalize_minmax
from .segmentation import (DEFAULT_K, DEFAULT_MAX_ITER, DEFAULT_SEED, DEFAULT_TOL,
                           kmeans_segment, rasterize, region_means)

IMAGE_CENTER = np.array([0.5, 0.5])


class Feature(enum.Enum):
    COLOR_LAB = "color"
    DEPTH = "depth"


class NegationMode(enum.Enum):
    # normalized depth weight: near regions get the larger factor
    INTENT = "intent"
    # 1 - DW, for comparison
    LITERAL = "literal"


@dataclass
class PipelineParams:
    k: int = DEFAULT_K
    sigma2: float = 0.4
    beta: float = 0.3
    polarity: Polarity = Polarity.NEAR_IS_LOW
    seed: int = DEFAULT_SEED
    n_seed_clusters: int = DEFAULT_SEED_CLUSTERS
    negation_mode: NegationMode = NegationMode.INTENT
    max_iter: int = DEFAULT_MAX_ITER
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        self.polarity = Polarity.parse(self.polarity)
        self.negation_mode = NegationMode(self.negation_mode)
        self.validate()

    def validate(self):
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be > 0, got {self.sigma2}")
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must satisfy 0 < beta <= 1, got {self.beta}")
        if int(self.k) != self.k or self.k < 2:
            raise ValueError(f"K must be an integer >= 2, got {self.k}")
        if self.n_seed_clusters < 1:
            raise ValueError(f"n_seed_clusters must be >= 1, got {self.n_seed_clusters}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.tol >= 0:
            raise ValueError(f"tol must be >= 0, got {self.tol}")


def _check_lengths(*arrays):
    n = {len(a) for a in arrays}
    if len(n) != 1:
        raise ShapeMismatchError(f"per-region vectors differ in length: {sorted(n)}")


def region_contrast(stats, feature=Feature.COLOR_LAB, sigma2=0.4):
    """Area- and proximity-weighted feature contrast of every region.

    S(k) = sum_{i != k} P_i * exp(-||c_k - c_i|| / sigma2) * D(k, i), where
    c are normalized centroids and D is the Lab distance (color) or the
    absolute mean-depth difference (depth).
    """
    feature = Feature(feature)
    if len(stats) < 2:
        raise ValueError("region contrast needs at least two regions")
    pos = stats.centroid
    spatial = np.exp(-np.linalg.norm(pos[:, None] - pos[None, :], axis=2) / sigma2)
    if feature is Feature.COLOR_LAB:
        diff = np.linalg.norm(stats.mean_lab[:, None] - stats.mean_lab[None, :], axis=2)
    else:
        diff = np.abs(stats.mean_depth[:, None] - stats.mean_depth[None, :])
    # the diagonal has zero feature distance, so i == k drops out on its own
    return (spatial * diff) @ stats.p


def depth_weight(stats, polarity=Polarity.NEAR_IS_LOW):
    """(max d - d_k) ** (1 / (max d - min d)) over region mean depths.

    Constant region depth gives a weight of 1 everywhere.
    """
    d = np.asarray(stats.mean_depth, dtype=np.float64)
    if Polarity.parse(polarity) is Polarity.NEAR_IS_HIGH:
        d = 1.0 - d
    span = d.max() - d.min()
    if span <= 0:
        return np.ones_like(d)
    return (d.max() - d) ** (1.0 / span)


def gaussian_kernel_normalize(values):
    """exp(-(v - min)^2 / (2 var)) over the population; flat input -> ones."""
    v = np.asarray(values, dtype=np.float64)
    var = v.var()
    if var <= 0:
        return np.ones_like(v)
    return np.exp(-((v - v.min()) ** 2) / (2.0 * var))


def center_depth_weight(stats, dw):
    """Center-closeness kernel divided by region size, times the depth weight."""
    _check_lengths(stats.n, dw)
    dist = np.linalg.norm(stats.centroid - IMAGE_CENTER, axis=1)
    return gaussian_kernel_normalize(dist) / stats.n * np.asarray(dw)


def layer_combine(s_c, s_d, w_cd):
    """min-max(S_c * W_cd + S_d * W_cd)."""
    _check_lengths(s_c, s_d, w_cd)
    s_c, s_d, w_cd = (np.asarray(a, dtype=np.float64) for a in (s_c, s_d, w_cd))
    return normalize_minmax(s_c * w_cd + s_d * w_cd)


def front_factor(dw, mode=NegationMode.INTENT):
    """The front-enhancement factor applied in layers 1 and 2.

    ``intent`` min-max normalizes the depth weight so camera-near regions get
    the largest factor (a flat weight gives ones); ``literal`` is 1 - DW.
    """
    dw = np.asarray(dw, dtype=np.float64)
    if NegationMode(mode) is NegationMode.LITERAL:
        return 1.0 - dw
    if dw.max() <= dw.min():
        return np.ones_like(dw)
    return normalize_minmax(dw)


def layer1_refine(s1, front, wc_region):
    """min-max(S_1 * F * mean W_c) per region.

    ``front`` is the output of :func:`front_factor` and ``wc_region`` the
    center-bias map averaged over each region.
    """
    _check_lengths(s1, front, wc_region)
    return normalize_minmax(np.asarray(s1) * np.asarray(front) * np.asarray(wc_region))


def extend_map(img, depth_like):
    """Multiply every color channel by a depth-like map."""
    img = np.asarray(img, dtype=np.float64)
    depth_like = np.asarray(depth_like, dtype=np.float64)
    if img.shape[:2] != depth_like.shape:
        raise ShapeMismatchError(f"image {img.shape[:2]} and map {depth_like.shape} differ")
    return img * depth_like[:, :, None]


def layer2_refine(s1hat, s2, front, normalize=True):
    """S1^2 + S1 * (1 - exp(-S2^2 * F)), then min-max unless ``normalize`` is False."""
    _check_lengths(s1hat, s2, front)
    s1hat, s2, front = (np.asarray(a, dtype=np.float64) for a in (s1hat, s2, front))
    raw = s1hat ** 2 + s1hat * (1.0 - np.exp(-(s2 ** 2) * front))
    return normalize_minmax(raw) if normalize else raw


def depth_filter(depth, beta=0.3):
    """Zero every pixel deeper than beta times the deepest pixel."""
    depth = np.asarray(depth, dtype=np.float64)
    return np.where(depth <= beta * depth.max(), depth, 0.0)


def depth_polarize(filtered):
    """1 - exp(-(1 - v)), strictly decreasing from 1 - 1/e at 0 to 0 at 1."""
    return 1.0 - np.exp(-(1.0 - np.asarray(filtered, dtype=np.float64)))


def layer3_combine(s1hat, s2hat, s3, normalize=True):
    """S2 * (S1 + S3) * (S3 + 1 - exp(-S1 * S3^2)), then min-max."""
    _check_lengths(s1hat, s2hat, s3)
    s1hat, s2hat, s3 = (np.asarray(a, dtype=np.float64) for a in (s1hat, s2hat, s3))
    raw = s2hat * (s1hat + s3) * (s3 + 1.0 - np.exp(-s1hat * s3 ** 2))
    return normalize_minmax(raw) if normalize else raw


@dataclass
class LayerResult:
    """Region-level state of one layer, kept for inspection and ablation."""

    decomp: object
    s_c: np.ndarray
    s_d: np.ndarray
    dw: np.ndarray
    w_cd: np.ndarray
    s_raw: np.ndarray
    refined: np.ndarray


@dataclass
class LayerOutputs:
    s1hat: np.ndarray
    s2hat: np.ndarray
    s_final: np.ndarray
    extended: np.ndarray
    depth_filtered: np.ndarray
    depth_polarized: np.ndarray
    reprocessed: np.ndarray
    center_bias: np.ndarray
    layers: list = field(default_factory=list)


def _score_layer(color_img, depth, params, decomp=None):
    if decomp is None:
        decomp = kmeans_segment(color_img, k=params.k, max_iter=params.max_iter,
                                tol=params.tol, seed=params.seed, depth=depth)
    stats = decomp.regions
    s_c = region_contrast(stats, Feature.COLOR_LAB, params.sigma2)
    s_d = region_contrast(stats, Feature.DEPTH, params.sigma2)
    dw = depth_weight(stats, Polarity.NEAR_IS_LOW)
    w_cd = center_depth_weight(stats, dw)
    return decomp, s_c, s_d, dw, w_cd, layer_combine(s_c, s_d, w_cd)


def _as_depth_array(depth):
    if isinstance(depth, DepthMap):
        return np.asarray(depth.near_low(), dtype=np.float64)
    return np.asarray(depth, dtype=np.float64)


def detect(img, depth, params=None, w_c=None):
    """Run all three layers on one RGB-D pair.

    Parameters
    ----------
    img : np.ndarray
        H x W x 3 RGB image in [0, 1].
    depth : DepthMap or np.ndarray
        Depth in [0, 1]. A bare array is read with ``params.polarity``.
    params : PipelineParams, optional
    w_c : np.ndarray, optional
        Center-bias map; computed from the layer-1 segmentation when omitted.

    Returns
    -------
    LayerOutputs
        Pixel maps of every layer's refined saliency plus the intermediate
        images.
    """
    params = params or PipelineParams()
    img = np.asarray(img, dtype=np.float64)
    if not isinstance(depth, DepthMap):
        depth = DepthMap(np.asarray(depth, dtype=np.float64), params.polarity)
    d = _as_depth_array(depth)
    if img.shape[:2] != d.shape:
        raise ShapeMismatchError(f"image {img.shape[:2]} and depth {d.shape} differ")
    if params.k > d.size:
        raise ValueError(f"K={params.k} exceeds the pixel count {d.size}")

    # layer 1: original image
    dec1, s_c, s_d, dw1, w_cd, s1 = _score_layer(img, d, params)
    if w_c is None:
        w_c = center_bias_map(img, dec1, params.n_seed_clusters, seed=params.seed)
    elif np.shape(w_c) != d.shape:
        raise ShapeMismatchError(f"center-bias map {np.shape(w_c)} and depth {d.shape} differ")
    wc_region = region_means(w_c, dec1.labels, dec1.k)
    s1hat = layer1_refine(s1, front_factor(dw1, params.negation_mode), wc_region)
    s1hat_px = rasterize(s1hat, dec1.labels)
    layers = [LayerResult(dec1, s_c, s_d, dw1, w_cd, s1, s1hat)]

    # layer 2: image extended by depth
    extended = extend_map(img, d)
    dec2, s_c, s_d, dw2, w_cd, s2 = _score_layer(extended, d, params)
    s1hat_on2 = region_means(s1hat_px, dec2.labels, dec2.k)
    s2hat = layer2_refine(s1hat_on2, s2, front_factor(dw2, params.negation_mode))
    s2hat_px = rasterize(s2hat, dec2.labels)
    layers.append(LayerResult(dec2, s_c, s_d, dw2, w_cd, s2, s2hat))

    # layer 3: image extended by the filtered, polarized depth
    filtered = depth_filter(d, params.beta)
    polarized = depth_polarize(filtered)
    reprocessed = extend_map(img, polarized)
    dec3, s_c, s_d, dw3, w_cd, s3 = _score_layer(reprocessed, d, params)
    s_final = layer3_combine(region_means(s1hat_px, dec3.labels, dec3.k),
                             region_means(s2hat_px, dec3.labels, dec3.k), s3)
    layers.append(LayerResult(dec3, s_c, s_d, dw3, w_cd, s3, s_final))

    return LayerOutputs(
        s1hat=s1hat_px,
        s2hat=s2hat_px,
        s_final=rasterize(s_final, dec3.labels),
        extended=extended,
        depth_filtered=filtered,
        depth_polarized=polarized,
        reprocessed=reprocessed,
        center_bias=np.asarray(w_c, dtype=np.float64),
        layers=layers,
    )
