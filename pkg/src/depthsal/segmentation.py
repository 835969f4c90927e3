"""Lab conversion, K-means color segmentation and per-region statistics.

The clustering core is an exact Lloyd iteration accelerated with Hamerly's
bounds: a pixel is only re-scanned when its bounds can no longer prove that
its current center is strictly the nearest, so labels match plain Lloyd
(ties resolved to the lowest center index).
"""

import os
from dataclasses import dataclass

import numpy as np
from numba import config, njit, prange

from .errors import ShapeMismatchError

# sRGB primaries -> XYZ, D65 reference white
_RGB2XYZ = np.array([
    [0.412453, 0.357580, 0.180423],
    [0.212671, 0.715160, 0.072169],
    [0.019334, 0.119193, 0.950227],
])
_D65 = np.array([0.95047, 1.0, 1.08883])

DEFAULT_K = 30
DEFAULT_SEED = 42
DEFAULT_MAX_ITER = 100
DEFAULT_TOL = 1e-3

# the system TBB is often too old for numba; fall through to OpenMP quietly
if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ and "NUMBA_THREADING_LAYER" not in os.environ:
    config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]

# slack on Hamerly bound tests so rounding can never skip a true reassignment
_BOUND_EPS = 1e-9


def rgb_to_lab(img):
    """Convert an sRGB image in [0, 1] to CIE L*a*b* (D65).

    Parameters
    ----------
    img : np.ndarray
        H x W x 3 float array.

    Returns
    -------
    np.ndarray
        H x W x 3 float64 array; L in [0, 100].
    """
    rgb = np.asarray(img, dtype=np.float64)
    lin = np.where(rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4)
    xyz = lin @ _RGB2XYZ.T / _D65
    delta = 6.0 / 29.0
    f = np.where(xyz > delta ** 3, np.cbrt(xyz), xyz / (3 * delta ** 2) + 4.0 / 29.0)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


@njit(cache=True)
def _sqdist(a, b):
    s = 0.0
    for c in range(a.shape[0]):
        t = a[c] - b[c]
        s += t * t
    return s


@njit(cache=True)
def _dist(a, b):
    return np.sqrt(_sqdist(a, b))


@njit(cache=True)
def _kmeanspp(x, w, first, uniforms):
    n, dim = x.shape
    k = uniforms.shape[0] + 1
    centers = np.empty((k, dim))
    centers[0] = x[first]
    d2 = np.empty(n)
    for i in range(n):
        t0 = x[i, 0] - centers[0, 0]
        t1 = x[i, 1] - centers[0, 1]
        t2 = x[i, 2] - centers[0, 2]
        d2[i] = t0 * t0 + t1 * t1 + t2 * t2
    for j in range(1, k):
        total = 0.0
        for i in range(n):
            total += w[i] * d2[i]
        idx = n - 1
        if total <= 0.0:
            idx = min(int(uniforms[j - 1] * n), n - 1)
        else:
            target = uniforms[j - 1] * total
            acc = 0.0
            for i in range(n):
                acc += w[i] * d2[i]
                if acc > target:
                    idx = i
                    break
        centers[j] = x[idx]
        c0 = centers[j, 0]
        c1 = centers[j, 1]
        c2 = centers[j, 2]
        for i in range(n):
            t0 = x[i, 0] - c0
            t1 = x[i, 1] - c1
            t2 = x[i, 2] - c2
            d = t0 * t0 + t1 * t1 + t2 * t2
            if d < d2[i]:
                d2[i] = d
    return centers


@njit(cache=True, parallel=True)
def _assign(x, centers, labels, upper, lower, half_sep, shift, top, second,
            moved, dd, first):
    n = x.shape[0]
    k = centers.shape[0]
    for i in prange(n):
        x0 = x[i, 0]
        x1 = x[i, 1]
        x2 = x[i, 2]
        a = labels[i]
        if not first:
            upper[i] += shift[a]
            lower[i] -= second if a == top else shift[top]
        t0 = x0 - centers[a, 0]
        t1 = x1 - centers[a, 1]
        t2 = x2 - centers[a, 2]
        du = t0 * t0 + t1 * t1 + t2 * t2
        u = np.sqrt(du)
        moved[i] = False
        if u + _BOUND_EPS >= max(half_sep[a], lower[i]):
            d1 = np.inf
            d2 = np.inf
            best = 0
            for j in range(k):
                t0 = x0 - centers[j, 0]
                t1 = x1 - centers[j, 1]
                t2 = x2 - centers[j, 2]
                d = t0 * t0 + t1 * t1 + t2 * t2
                if d < d1:
                    d2 = d1
                    d1 = d
                    best = j
                elif d < d2:
                    d2 = d
            if best != a:
                moved[i] = True
                labels[i] = best
            du = d1
            u = np.sqrt(d1)
            lower[i] = np.sqrt(d2)
        upper[i] = u
        dd[i] = du


@njit(cache=True)
def _lloyd(x, w, centers, max_iter, tol):
    n, dim = x.shape
    k = centers.shape[0]
    labels = np.zeros(n, np.int64)
    upper = np.full(n, np.inf)
    lower = np.zeros(n)
    moved = np.zeros(n, np.bool_)
    dd = np.zeros(n)
    history = np.empty(max_iter + 2)
    n_hist = 0
    half_sep = np.empty(k)
    members = np.zeros(k, np.int64)
    mass = np.zeros(k)
    sums = np.zeros((k, dim))
    shift = np.zeros(k)
    top = 0
    second = 0.0
    n_iter = 0
    first = True
    final = False
    while True:
        for j in range(k):
            m = np.inf
            for jj in range(k):
                if jj != j:
                    d = _dist(centers[j], centers[jj])
                    if d < m:
                        m = d
            half_sep[j] = 0.5 * m

        _assign(x, centers, labels, upper, lower, half_sep, shift, top, second,
                moved, dd, first)

        # fixed-order reduction keeps the result independent of thread count
        members[:] = 0
        mass[:] = 0.0
        sums[:, :] = 0.0
        changed = 0
        obj = 0.0
        for i in range(n):
            a = labels[i]
            if moved[i]:
                changed += 1
            obj += w[i] * dd[i]
            members[a] += 1
            mass[a] += w[i]
            sums[a, 0] += w[i] * x[i, 0]
            sums[a, 1] += w[i] * x[i, 1]
            sums[a, 2] += w[i] * x[i, 2]

        reseeded = False
        for j in range(k):
            if members[j] == 0:
                far_i = -1
                far_d = -1.0
                for i in range(n):
                    if members[labels[i]] > 1:
                        d = _sqdist(x[i], centers[labels[i]])
                        if d > far_d:
                            far_d = d
                            far_i = i
                members[labels[far_i]] -= 1
                obj -= w[far_i] * far_d
                labels[far_i] = j
                members[j] = 1
                centers[j] = x[far_i]
                reseeded = True
                changed += 1
        if reseeded:
            mass[:] = 0.0
            sums[:, :] = 0.0
            for i in range(n):
                mass[labels[i]] += w[i]
                for c in range(dim):
                    sums[labels[i], c] += w[i] * x[i, c]
            upper[:] = np.inf
            lower[:] = 0.0
        history[n_hist] = max(obj, 0.0)
        n_hist += 1

        if final or (changed == 0 and not first):
            break

        max_shift = 0.0
        for j in range(k):
            new = sums[j] / mass[j]
            shift[j] = _dist(new, centers[j])
            centers[j] = new
            if shift[j] > max_shift:
                max_shift = shift[j]
        if reseeded:
            shift[:] = 0.0
        top = 0
        for j in range(k):
            if shift[j] > shift[top]:
                top = j
        second = 0.0
        for j in range(k):
            if j != top and shift[j] > second:
                second = shift[j]
        first = False
        n_iter += 1
        if max_shift < tol or n_iter >= max_iter:
            final = True
    return labels, centers, history[:n_hist], n_iter


@dataclass
class KMeansResult:
    labels: np.ndarray  # one entry per input sample
    centers: np.ndarray
    objective: np.ndarray  # weighted objective after every assignment step
    n_iter: int


def kmeans(x, k, weights=None, max_iter=DEFAULT_MAX_ITER, tol=DEFAULT_TOL, seed=DEFAULT_SEED):
    """Deterministic weighted k-means++ / Lloyd clustering of the rows of ``x``.

    Empty clusters are re-seeded with the sample farthest from its center, so
    every one of the ``k`` clusters ends non-empty.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[0]
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of samples ({n})")
    w = np.ones(n) if weights is None else np.ascontiguousarray(weights, dtype=np.float64)
    rng = np.random.default_rng(seed)
    first = int(rng.integers(n))
    uniforms = rng.random(k - 1)
    centers = _kmeanspp(x, w, first, uniforms)
    labels, centers, history, n_iter = _lloyd(x, w, centers, int(max_iter), float(tol))
    return KMeansResult(labels, centers, history, int(n_iter))


@dataclass
class RegionStats:
    """Per-region statistics, one array entry per region index.

    ``centroid`` holds normalized (x, y) = (col / (W - 1), row / (H - 1)).
    """

    n: np.ndarray
    p: np.ndarray
    centroid: np.ndarray
    mean_lab: np.ndarray
    mean_depth: np.ndarray

    def __len__(self):
        return len(self.n)


@dataclass
class RegionDecomposition:
    labels: np.ndarray  # H x W int
    k: int
    regions: RegionStats
    objective: np.ndarray = None
    n_iter: int = 0


def region_stats(labels, lab, depth, k=None):
    """Pixel count, area ratio, centroid, mean Lab and mean depth per region."""
    labels = np.asarray(labels)
    lab = np.asarray(lab, dtype=np.float64)
    depth = np.asarray(depth, dtype=np.float64)
    if labels.shape != lab.shape[:2] or labels.shape != depth.shape:
        raise ShapeMismatchError(
            f"labels {labels.shape}, lab {lab.shape[:2]} and depth {depth.shape} differ")
    h, w = labels.shape
    if k is None:
        k = int(labels.max()) + 1
    flat = labels.ravel()
    n = np.bincount(flat, minlength=k)
    if np.any(n == 0):
        raise ValueError("every region index must own at least one pixel")
    rows, cols = np.indices((h, w))
    xs = cols.ravel() / (w - 1) if w > 1 else np.full(h * w, 0.5)
    ys = rows.ravel() / (h - 1) if h > 1 else np.full(h * w, 0.5)
    centroid = np.stack([np.bincount(flat, xs, k), np.bincount(flat, ys, k)], axis=1) / n[:, None]
    # sums are taken relative to the first pixel so that regions of identical
    # pixels get bit-identical means; otherwise rounding noise survives min-max
    lab_flat = lab.reshape(-1, 3)
    lab_ref = lab_flat[0]
    mean_lab = lab_ref + np.stack([np.bincount(flat, lab_flat[:, c] - lab_ref[c], k)
                                   for c in range(3)], axis=1) / n[:, None]
    d_flat = depth.ravel()
    mean_depth = d_flat[0] + np.bincount(flat, d_flat - d_flat[0], k) / n
    return RegionStats(n=n, p=n / (h * w), centroid=centroid, mean_lab=mean_lab,
                       mean_depth=np.clip(mean_depth, 0.0, 1.0))


def kmeans_segment(img, k=DEFAULT_K, max_iter=DEFAULT_MAX_ITER, tol=DEFAULT_TOL,
                   seed=DEFAULT_SEED, depth=None):
    """Split ``img`` into ``k`` color regions by K-means in Lab space.

    Only color is clustered; regions need not be spatially connected.
    ``depth`` (H x W, [0, 1]) feeds the per-region mean depth; it defaults
    to zeros when the caller only needs color statistics.
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    if k < 2:
        raise ValueError(f"K must be >= 2, got {k}")
    if k > h * w:
        raise ValueError(f"K={k} exceeds the pixel count {h * w}")
    # cluster the 8-bit color histogram: identical colors always share a
    # label, so weighting each distinct color by its count is exact
    q = np.round(np.clip(img, 0.0, 1.0) * 255).astype(np.uint32)
    codes = (q[..., 0] << 16 | q[..., 1] << 8 | q[..., 2]).ravel()
    uniq, inverse, counts = np.unique(codes, return_inverse=True, return_counts=True)
    if len(uniq) >= k:
        colors = np.stack([uniq >> 16, (uniq >> 8) & 255, uniq & 255], axis=1) / 255.0
        res = kmeans(rgb_to_lab(colors), k, weights=counts, max_iter=max_iter, tol=tol, seed=seed)
        res.labels = res.labels[inverse.ravel()]
    else:
        # fewer distinct colors than K: split at pixel level so all K regions exist
        res = kmeans(rgb_to_lab(q.reshape(-1, 3) / 255.0), k, max_iter=max_iter, tol=tol, seed=seed)
    labels = res.labels.reshape(h, w)
    if depth is None:
        depth = np.zeros((h, w))
    stats = region_stats(labels, rgb_to_lab(img), depth, k)
    return RegionDecomposition(labels=labels, k=k, regions=stats,
                               objective=res.objective, n_iter=res.n_iter)


def rasterize(values, labels):
    """Paint per-region ``values`` onto the pixels of ``labels``."""
    return np.asarray(values, dtype=np.float64)[labels]


def region_means(pixel_map, labels, k):
    """Mean of a pixel map over each region of ``labels``."""
    flat = labels.ravel()
    return np.bincount(flat, np.asarray(pixel_map, dtype=np.float64).ravel(), k) / np.bincount(flat, minlength=k)


def label_preview(labels):
    """8-bit debug rendering of a label map (index modulo 256)."""
    return (np.asarray(labels) % 256).astype(np.uint8)
