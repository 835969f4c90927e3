"""Multilayer RGB-D salient object detection."""

__version__ = "0.1.0"

from .darkchannel import dark_channel, small_target_detect
from .errors import (DatasetError, DepthsalError, ImageReadError, ImageWriteError,
                     ShapeMismatchError)
from .evaluation import EvalReport, evaluate, evaluate_dirs, f_measure, mae, pr_curve, roc_curve
from .imageio import DepthMap, Polarity, load_depth, load_rgb, save_saliency, scan_dataset
from .montage import SegmentedObject, composite, recolor, resize_bilinear, segment_object
from .saliency import LayerOutputs, NegationMode, PipelineParams, detect
from .segmentation import kmeans, kmeans_segment, rgb_to_lab

__all__ = [
    "DatasetError", "DepthMap", "DepthsalError", "EvalReport", "ImageReadError",
    "ImageWriteError", "LayerOutputs", "NegationMode", "PipelineParams", "Polarity",
    "SegmentedObject", "ShapeMismatchError", "composite", "dark_channel", "detect",
    "evaluate", "evaluate_dirs", "f_measure", "kmeans", "kmeans_segment", "load_depth",
    "load_rgb", "mae", "pr_curve", "recolor", "resize_bilinear", "rgb_to_lab", "roc_curve",
    "save_saliency", "scan_dataset", "segment_object", "small_target_detect",
]
