"""Command-line front end.

Pipeline parameters resolve in three steps: built-in defaults, then a
``key=value`` config file (``--config`` or the ``SALMAP_CONFIG``
environment variable), then explicit flags.
"""

import argparse
import logging
import multiprocessing
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .centerbias import load_center_bias
from .darkchannel import DEFAULT_PATCH, dark_channel, small_target_detect
from .errors import DepthsalError
from .evaluation import evaluate_ablation, write_ablation, write_report
from .imageio import (DatasetLayout, Polarity, list_images, load_depth, load_gray, load_rgb,
                      normalize_minmax, save_rgb, save_saliency, scan_dataset)
from .montage import (SegmentedObject, composite, recolor, resize_bilinear, resize_object,
                      segment_object)
from .saliency import PipelineParams, detect

log = logging.getLogger("depthsal")

CONFIG_ENV = "SALMAP_CONFIG"

# flag dest -> (PipelineParams field, parser)
PARAM_KEYS = {
    "k": ("k", int),
    "sigma2": ("sigma2", float),
    "beta": ("beta", float),
    "polarity": ("polarity", str),
    "negation_mode": ("negation_mode", str),
    "seed": ("seed", int),
    "n_seed_clusters": ("n_seed_clusters", int),
    "max_iter": ("max_iter", int),
    "tol": ("tol", float),
}


def read_config(path):
    """Parse a ``key = value`` file; blank lines and ``#`` comments are skipped."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.replace("-", "_").lower()] = value
    return values


def resolve_params(args):
    """PipelineParams from defaults, config file and flags (flags win)."""
    merged = {}
    config_path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    if config_path:
        for key, value in read_config(config_path).items():
            if key not in PARAM_KEYS:
                raise ValueError(f"unknown config key {key!r} in {config_path}")
            field, conv = PARAM_KEYS[key]
            merged[field] = conv(value)
    for dest, (field, _) in PARAM_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            merged[field] = value
    return PipelineParams(**merged)


def _add_param_flags(p):
    g = p.add_argument_group("pipeline parameters")
    g.add_argument("--k", type=int, help="regions per layer (default 30)")
    g.add_argument("--sigma2", type=float, help="spatial weight strength (default 0.4)")
    g.add_argument("--beta", type=float, help="depth filter fraction (default 0.3)")
    g.add_argument("--polarity", choices=["near-low", "near-high"],
                   help="how depth values encode distance (default near-low)")
    g.add_argument("--negation-mode", choices=["intent", "literal"],
                   help="front-enhancement factor (default intent)")
    g.add_argument("--seed", type=int, help="clustering seed (default 42)")
    g.add_argument("--n-seed-clusters", type=int, help="border seed color groups (default 3)")
    g.add_argument("--max-iter", type=int, help="K-means iteration cap (default 100)")
    g.add_argument("--tol", type=float, help="K-means centroid shift tolerance (default 1e-3)")
    g.add_argument("--config", help=f"key=value defaults file (else ${CONFIG_ENV})")


def build_parser():
    parser = argparse.ArgumentParser(prog="depthsal", description="Multilayer RGB-D saliency detection.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="saliency map for one RGB-D pair")
    p.add_argument("--rgb", required=True)
    p.add_argument("--depth", required=True)
    p.add_argument("--out", required=True, help="output PNG for the final map")
    p.add_argument("--center-bias-map", help="external center-bias raster to use instead")
    p.add_argument("--emit-intermediates", metavar="DIR",
                   help="also write every layer's map and the intermediate images")
    p.add_argument("--figure", metavar="PNG", help="render a panel of all stages")
    _add_param_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("detect-batch", help="saliency maps for a whole dataset")
    p.add_argument("--dataset", required=True, help="root holding rgb/, depth/ and gt/")
    p.add_argument("--out", required=True)
    p.add_argument("--ablation", action="store_true",
                   help="also write layer-1 and layer-2 maps to s1hat/ and s2hat/")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--rgb-dir", default="rgb")
    p.add_argument("--depth-dir", default="depth")
    p.add_argument("--gt-dir", default="gt")
    p.add_argument("--depth-suffix", default="", help="stem suffix of depth files, e.g. _depth")
    _add_param_flags(p)
    p.set_defaults(func=cmd_detect_batch)

    p = sub.add_parser("eval", help="benchmark metrics and curves")
    p.add_argument("--pred-dir", required=True)
    p.add_argument("--gt-dir", required=True)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--no-figures", action="store_true", help="skip the PR/ROC PNGs")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("dark-target", help="small-target detection on a directory of frames")
    p.add_argument("--frames", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--patch", type=int, default=DEFAULT_PATCH, help="dark channel window (odd)")
    p.add_argument("--dcp-polarity", choices=["near-low", "near-high"], default="near-low",
                   help="read low dark-channel values as near (default) or far")
    p.add_argument("--emit-dcp", action="store_true", help="also write the dark channel maps")
    p.add_argument("--jobs", type=int, default=1)
    _add_param_flags(p)
    p.set_defaults(func=cmd_dark_target)

    p = sub.add_parser("montage", help="object cut-out, recolor, resize and composite")
    msub = p.add_subparsers(dest="montage_command", required=True)
    m = msub.add_parser("segment", help="cut the salient object out of an image")
    m.add_argument("--rgb", required=True)
    m.add_argument("--saliency", required=True)
    m.add_argument("--out", required=True, help="prefix; writes <out>.png and <out>_alpha.png")
    m.add_argument("--binarize", type=float, metavar="T", help="hard matte at saliency >= T")
    m.set_defaults(func=cmd_segment)
    m = msub.add_parser("recolor", help="permute and scale an object's channels")
    m.add_argument("--object", required=True, help="object prefix")
    m.add_argument("--out", required=True, help="output object prefix")
    m.add_argument("--permutation", default="0,1,2", help="source channel per output channel")
    m.add_argument("--gains", default="1,1,1", help="per-channel gains in [0, 2]")
    m.set_defaults(func=cmd_recolor)
    m = msub.add_parser("resize", help="bilinear resize of an image or object")
    src = m.add_mutually_exclusive_group(required=True)
    src.add_argument("--image")
    src.add_argument("--object", help="object prefix")
    m.add_argument("--width", type=int, required=True)
    m.add_argument("--height", type=int, required=True)
    m.add_argument("--out", required=True, help="PNG path, or object prefix with --object")
    m.set_defaults(func=cmd_resize)
    m = msub.add_parser("composite", help="paste an object onto a background")
    m.add_argument("--bg", required=True)
    m.add_argument("--object", required=True, help="object prefix")
    m.add_argument("--x", type=int, default=0)
    m.add_argument("--y", type=int, default=0)
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_composite)
    return parser


def _write_outputs(out, outputs, out_dir=None, ablation_root=None, stem=None):
    save_saliency(outputs.s_final, out)
    if ablation_root is not None:
        save_saliency(outputs.s1hat, Path(ablation_root) / "s1hat" / f"{stem}.png")
        save_saliency(outputs.s2hat, Path(ablation_root) / "s2hat" / f"{stem}.png")
    if out_dir is not None:
        out_dir = Path(out_dir)
        save_saliency(outputs.s1hat, out_dir / "s1hat.png")
        save_saliency(outputs.s2hat, out_dir / "s2hat.png")
        save_rgb(outputs.extended, out_dir / "extended.png")
        save_saliency(outputs.depth_filtered, out_dir / "depth_filtered.png")
        save_saliency(outputs.depth_polarized, out_dir / "depth_polarized.png")
        save_rgb(outputs.reprocessed, out_dir / "reprocessed.png")
        save_saliency(outputs.center_bias, out_dir / "center_bias.png")


def cmd_detect(args, params):
    img = load_rgb(args.rgb)
    depth = load_depth(args.depth, params.polarity)
    w_c = load_center_bias(args.center_bias_map, img.shape) if args.center_bias_map else None
    outputs = detect(img, depth, params, w_c=w_c)
    _write_outputs(args.out, outputs, out_dir=args.emit_intermediates)
    if args.figure:
        from .plotting import plot_stages
        plot_stages(img, depth.data, outputs, args.figure)
    log.info("wrote %s", args.out)
    return 0


def _batch_one(entry, out, params, ablation):
    try:
        img = load_rgb(entry.rgb)
        depth = load_depth(entry.depth, params.polarity)
        outputs = detect(img, depth, params)
        _write_outputs(Path(out) / f"{entry.id}.png", outputs,
                       ablation_root=out if ablation else None, stem=entry.id)
        return entry.id, None
    except (DepthsalError, ValueError, OSError) as exc:
        return entry.id, str(exc)


def _run_jobs(fn, items, jobs):
    if jobs <= 1:
        return [fn(*item) for item in items]
    # fork is unsafe once the parent has started the JIT's OpenMP threads
    ctx = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as pool:
        return list(pool.map(fn, *zip(*items)))


def _report_failures(results):
    failed = [(i, err) for i, err in results if err]
    for i, err in failed:
        log.error("%s: %s", i, err)
    if failed:
        log.error("%d of %d items failed", len(failed), len(results))
        return 1
    return 0


def cmd_detect_batch(args, params):
    layout = DatasetLayout(rgb_dir=args.rgb_dir, depth_dir=args.depth_dir, gt_dir=args.gt_dir,
                           depth_suffix=args.depth_suffix)
    index = scan_dataset(args.dataset, layout)
    Path(args.out).mkdir(parents=True, exist_ok=True)
    items = [(e, args.out, params, args.ablation) for e in index]
    results = _run_jobs(_batch_one, items, args.jobs)
    log.info("processed %d images", len(results))
    return _report_failures(results)


def _frame_one(stem, path, out, params, patch, polarity, emit_dcp):
    try:
        img = load_rgb(path)
        outputs = small_target_detect(img, params, patch=patch, polarity=polarity)
        save_saliency(outputs.s_final, Path(out) / f"{stem}.png")
        if emit_dcp:
            dcp = normalize_minmax(dark_channel(img, patch))
            save_saliency(dcp, Path(out) / "dcp" / f"{stem}.png")
        return stem, None
    except (DepthsalError, ValueError, OSError) as exc:
        return stem, str(exc)


def cmd_dark_target(args, params):
    frames = list_images(args.frames)
    if not frames:
        raise DepthsalError(f"no PNG/PGM/PPM frames in {args.frames}")
    Path(args.out).mkdir(parents=True, exist_ok=True)
    items = [(stem, path, args.out, params, args.patch, args.dcp_polarity, args.emit_dcp)
             for stem, path in sorted(frames.items())]
    return _report_failures(_run_jobs(_frame_one, items, args.jobs))


def cmd_eval(args, params=None):
    reports = evaluate_ablation(args.pred_dir, args.gt_dir)
    final = reports["s"]
    paths = write_report(final, args.out_prefix)
    if len(reports) > 1:
        paths.append(write_ablation(reports, args.out_prefix))
    if not args.no_figures:
        from .plotting import plot_pr, plot_roc
        paths.append(plot_pr(reports, f"{args.out_prefix}_pr.png"))
        paths.append(plot_roc(reports, f"{args.out_prefix}_roc.png"))
    for p in paths:
        log.info("wrote %s", p)
    print(f"mae={final.mae:.4f} f_measure={final.f_measure:.4f} "
          f"f_curve_max={final.f_curve_max:.4f} images={len(final.per_image)}")
    return 0


def _object_paths(prefix):
    return Path(f"{prefix}.png"), Path(f"{prefix}_alpha.png")


def load_object(prefix):
    color_path, alpha_path = _object_paths(prefix)
    return SegmentedObject(load_rgb(color_path), load_gray(alpha_path))


def save_object(obj, prefix):
    color_path, alpha_path = _object_paths(prefix)
    save_rgb(obj.color, color_path)
    save_saliency(obj.alpha, alpha_path)


def _triple(text, conv, name):
    parts = [s for s in text.replace(" ", "").split(",") if s]
    if len(parts) != 3:
        raise ValueError(f"--{name} needs three comma-separated values, got {text!r}")
    return tuple(conv(s) for s in parts)


def cmd_segment(args, params=None):
    img = load_rgb(args.rgb)
    sal = load_gray(args.saliency)
    save_object(segment_object(img, sal, binarize=args.binarize), args.out)
    return 0


def cmd_recolor(args, params=None):
    obj = load_object(args.object)
    save_object(recolor(obj, args.permutation, args.gains), args.out)
    return 0


def cmd_resize(args, params=None):
    if args.object:
        save_object(resize_object(load_object(args.object), args.width, args.height), args.out)
    else:
        save_rgb(resize_bilinear(load_rgb(args.image), args.width, args.height), args.out)
    return 0


def cmd_composite(args, params=None):
    bg = load_rgb(args.bg)
    out = composite(bg, load_object(args.object), (args.x, args.y))
    save_rgb(np.clip(out, 0.0, 1.0), args.out)
    return 0


def check_flags(args):
    """Reject flag values that no command could accept, before touching any file."""
    if getattr(args, "jobs", 1) < 1:
        raise ValueError("--jobs must be >= 1")
    patch = getattr(args, "patch", None)
    if patch is not None and (patch < 1 or patch % 2 == 0):
        raise ValueError(f"--patch must be odd and >= 1, got {patch}")
    if getattr(args, "montage_command", None) == "recolor":
        args.permutation = _triple(args.permutation, int, "permutation")
        args.gains = _triple(args.gains, float, "gains")
        if sorted(args.permutation) != [0, 1, 2]:
            raise ValueError(f"--permutation must reorder 0,1,2, got {args.permutation}")
        if any(not 0 <= g <= 2 for g in args.gains):
            raise ValueError(f"--gains must lie in [0, 2], got {args.gains}")
    if getattr(args, "montage_command", None) == "resize" and min(args.width, args.height) < 1:
        raise ValueError("--width and --height must be >= 1")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    params = None
    try:
        check_flags(args)
        if hasattr(args, "k"):
            params = resolve_params(args)
    except (ValueError, OSError) as exc:
        parser.error(str(exc))
    try:
        return args.func(args, params)
    except (DepthsalError, ValueError, OSError) as exc:
        print(f"depthsal: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
