"""Saliency benchmark metrics: MAE, F-measure, PR and ROC curves.

Curves use the 256 thresholds t = i / 255 and binarize ``pred >= t``.
Pixel counts are pooled over the whole dataset before any ratio is taken.
"""

import csv
import enum
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DatasetError, ShapeMismatchError
from .imageio import list_images, load_mask, load_saliency

log = logging.getLogger(__name__)

THRESHOLDS = np.arange(256) / 255.0
ABLATION_STAGES = ("s1hat", "s2hat")


class FMode(enum.Enum):
    ADAPTIVE = "adaptive"
    CURVE_MAX = "curve-max"


def _pair(pred, gt):
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ShapeMismatchError(f"prediction {pred.shape} and ground truth {gt.shape} differ")
    return pred, gt


def mae(pred, gt):
    """Mean absolute per-pixel difference.

    The sum is exactly rounded, so the result does not depend on summation order.
    """
    pred, gt = _pair(pred, gt)
    return math.fsum(np.abs(pred - gt).ravel()) / pred.size


def f_score(precision, recall):
    """Harmonic mean of precision and recall; 0 when both are 0."""
    precision = np.asarray(precision, dtype=np.float64)
    recall = np.asarray(recall, dtype=np.float64)
    denom = precision + recall
    with np.errstate(invalid="ignore", divide="ignore"):
        f = np.where(denom > 0, 2 * precision * recall / np.where(denom > 0, denom, 1), 0.0)
    return f if f.ndim else float(f)


def _ratio(num, den, empty):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    return np.where(den > 0, num / np.where(den > 0, den, 1), empty)


def confusion_counts(pred, gt, thresholds=THRESHOLDS):
    """TP, FP, FN, TN at every threshold for one image (``pred >= t`` is positive)."""
    pred, gt = _pair(pred, gt)
    pos = np.sort(pred[gt > 0.5])
    neg = np.sort(pred[gt <= 0.5])
    tp = len(pos) - np.searchsorted(pos, thresholds, side="left")
    fp = len(neg) - np.searchsorted(neg, thresholds, side="left")
    return tp, fp, len(pos) - tp, len(neg) - fp


@dataclass
class Curves:
    thresholds: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    tpr: np.ndarray
    fpr: np.ndarray


def _pooled(preds, gts, thresholds=THRESHOLDS, ids=None):
    preds, gts = list(preds), list(gts)
    if not preds:
        raise ValueError("no images to evaluate")
    if len(preds) != len(gts):
        raise ValueError(f"{len(preds)} predictions but {len(gts)} ground-truth masks")
    ids = ids or [str(i) for i in range(len(preds))]
    tp = fp = fn = tn = 0
    used = 0
    for name, p, g in zip(ids, preds, gts):
        counts = confusion_counts(p, g, thresholds)
        if counts[0][0] + counts[2][0] == 0:
            log.warning("ground truth for %s has no positive pixels; excluded from curves", name)
            continue
        tp, fp, fn, tn = tp + counts[0], fp + counts[1], fn + counts[2], tn + counts[3]
        used += 1
    if used == 0:
        raise ValueError("no image has a non-empty ground truth")
    return tp, fp, fn, tn


def curves(preds, gts, thresholds=THRESHOLDS, ids=None):
    """Dataset-level PR and ROC samples at every threshold."""
    tp, fp, fn, tn = _pooled(preds, gts, thresholds, ids)
    return Curves(
        thresholds=np.asarray(thresholds, dtype=np.float64),
        precision=_ratio(tp, tp + fp, 1.0),
        recall=_ratio(tp, tp + fn, 0.0),
        tpr=_ratio(tp, tp + fn, 0.0),
        fpr=_ratio(fp, fp + tn, 0.0),
    )


def pr_curve(preds, gts, thresholds=THRESHOLDS):
    """List of (threshold, precision, recall); precision is 1 when nothing is predicted."""
    c = curves(preds, gts, thresholds)
    return list(zip(c.thresholds.tolist(), c.precision.tolist(), c.recall.tolist()))


def roc_curve(preds, gts, thresholds=THRESHOLDS):
    """List of (threshold, tpr, fpr)."""
    c = curves(preds, gts, thresholds)
    return list(zip(c.thresholds.tolist(), c.tpr.tolist(), c.fpr.tolist()))


def adaptive_threshold(pred):
    """Twice the mean saliency, capped at 1."""
    return min(2.0 * float(np.mean(pred)), 1.0)


def _adaptive_counts(pred, gt):
    pred, gt = _pair(pred, gt)
    hit = pred >= adaptive_threshold(pred)
    pos = gt > 0.5
    return np.count_nonzero(hit & pos), np.count_nonzero(hit & ~pos), np.count_nonzero(~hit & pos)


def f_measure(preds, gts, mode=FMode.ADAPTIVE):
    """Dataset F-measure.

    ``adaptive`` binarizes each image at twice its mean saliency and pools
    the counts; ``curve-max`` takes the best F over the PR curve.
    """
    preds, gts = list(preds), list(gts)
    if not preds:
        raise ValueError("no images to evaluate")
    if FMode(mode) is FMode.CURVE_MAX:
        c = curves(preds, gts)
        return float(np.max(f_score(c.precision, c.recall)))
    tp = fp = fn = 0
    for p, g in zip(preds, gts):
        a, b, c = _adaptive_counts(p, g)
        if a + c == 0:
            continue
        tp, fp, fn = tp + a, fp + b, fn + c
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return float(f_score(precision, recall))


@dataclass
class ImageRecord:
    id: str
    mae: float
    f_adaptive: float


@dataclass
class EvalReport:
    mae: float
    f_measure: float
    f_curve_max: float
    curves: Curves
    max_p: float
    min_p: float
    max_r: float
    min_r: float
    per_image: list = field(default_factory=list)

    @property
    def pr(self):
        c = self.curves
        return list(zip(c.thresholds.tolist(), c.precision.tolist(), c.recall.tolist()))

    @property
    def roc(self):
        c = self.curves
        return list(zip(c.thresholds.tolist(), c.tpr.tolist(), c.fpr.tolist()))

    def summary_rows(self):
        return [("mae", self.mae), ("f_measure", self.f_measure),
                ("f_measure_curve_max", self.f_curve_max),
                ("max_p", self.max_p), ("min_p", self.min_p),
                ("max_r", self.max_r), ("min_r", self.min_r)]


def evaluate(preds, gts, ids=None):
    """Full report over paired in-memory maps."""
    preds, gts = list(preds), list(gts)
    ids = list(ids) if ids is not None else [str(i) for i in range(len(preds))]
    c = curves(preds, gts, ids=ids)
    per_image = []
    for name, p, g in zip(ids, preds, gts):
        a, b, fn_ = _adaptive_counts(p, g)
        prec = a / (a + b) if a + b else 1.0
        rec = a / (a + fn_) if a + fn_ else 0.0
        per_image.append(ImageRecord(name, mae(p, g), float(f_score(prec, rec))))
    return EvalReport(
        mae=float(np.mean([r.mae for r in per_image])),
        f_measure=f_measure(preds, gts, FMode.ADAPTIVE),
        f_curve_max=float(np.max(f_score(c.precision, c.recall))),
        curves=c,
        max_p=float(c.precision.max()), min_p=float(c.precision.min()),
        max_r=float(c.recall.max()), min_r=float(c.recall.min()),
        per_image=per_image,
    )


def _load_pairs(pairs, pred_dir):
    pred_files = list_images(pred_dir)
    missing = [i for i, _ in pairs if i not in pred_files]
    if missing:
        raise DatasetError(f"no prediction in {pred_dir} for", missing)
    preds, gts, bad = [], [], []
    for i, gt_path in pairs:
        p, g = load_saliency(pred_files[i]), load_mask(gt_path)
        if p.shape != g.shape:
            bad.append(i)
        preds.append(p)
        gts.append(g)
    if bad:
        raise DatasetError("prediction and ground truth sizes differ for", bad)
    return preds, gts


def evaluate_dataset(index, pred_dir):
    """Evaluate ``<pred_dir>/<id>.png`` against every ground truth in ``index``."""
    pairs = [(e.id, e.gt) for e in index if e.gt is not None]
    no_gt = [e.id for e in index if e.gt is None]
    if no_gt:
        raise DatasetError("no ground truth for", no_gt)
    preds, gts = _load_pairs(pairs, pred_dir)
    return evaluate(preds, gts, [i for i, _ in pairs])


def evaluate_dirs(pred_dir, gt_dir):
    """Evaluate every mask in ``gt_dir`` against the same-stem file in ``pred_dir``."""
    gt_files = list_images(gt_dir)
    if not gt_files:
        raise DatasetError(f"no ground-truth images in {gt_dir}")
    pairs = sorted(gt_files.items())
    preds, gts = _load_pairs(pairs, pred_dir)
    return evaluate(preds, gts, [i for i, _ in pairs])


def evaluate_ablation(pred_dir, gt_dir):
    """Reports for the final maps and for any ``s1hat/``, ``s2hat/`` subdirectories.

    Keys are ``s1hat``, ``s2hat`` (when present) and ``s``, in layer order.
    """
    pred_dir = Path(pred_dir)
    reports = {}
    for stage in ABLATION_STAGES:
        if (pred_dir / stage).is_dir():
            reports[stage] = evaluate_dirs(pred_dir / stage, gt_dir)
    reports["s"] = evaluate_dirs(pred_dir, gt_dir)
    return reports


def _write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def _fmt(v):
    return f"{v:.10g}" if isinstance(v, float) else v


def write_report(report, prefix):
    """Write ``<prefix>_summary.csv``, ``_pr.csv``, ``_roc.csv`` and ``_per_image.csv``."""
    prefix = str(prefix)
    c = report.curves
    curve_rows = [[f"{t:.6f}", f"{p:.6f}", f"{r:.6f}", f"{tp:.6f}", f"{fp:.6f}"]
                  for t, p, r, tp, fp in zip(c.thresholds, c.precision, c.recall, c.tpr, c.fpr)]
    header = ["threshold", "precision", "recall", "tpr", "fpr"]
    return [
        _write_csv(prefix + "_summary.csv", ["metric", "value"],
                   [(k, _fmt(v)) for k, v in report.summary_rows()]),
        _write_csv(prefix + "_pr.csv", header, curve_rows),
        _write_csv(prefix + "_roc.csv", header, curve_rows),
        _write_csv(prefix + "_per_image.csv", ["id", "mae", "f_adaptive"],
                   [(r.id, _fmt(r.mae), _fmt(r.f_adaptive)) for r in report.per_image]),
    ]


def write_ablation(reports, prefix):
    """``<prefix>_ablation.csv`` with one row per pipeline stage."""
    rows = [(stage, _fmt(r.mae), _fmt(r.f_measure), _fmt(r.f_curve_max))
            for stage, r in reports.items()]
    return _write_csv(str(prefix) + "_ablation.csv",
                      ["stage", "mae", "f_adaptive", "f_curve_max"], rows)
