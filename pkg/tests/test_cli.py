import csv
import subprocess
import sys

import cv2
import numpy as np
import pytest

from depthsal.cli import main, read_config, resolve_params, build_parser
from depthsal.imageio import load_gray, load_rgb, save_rgb, save_saliency
from depthsal.synthetic import disk_scene, small_target_frames

SMALL = ["--k", "8"]


def write_pair(root, name, seed=0, w=96, h=72):
    img, depth, gt = disk_scene(width=w, height=h, seed=seed)
    for sub in ("rgb", "depth", "gt"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    save_rgb(img, root / "rgb" / f"{name}.png")
    cv2.imwrite(str(root / "depth" / f"{name}.png"), np.round(depth * 65535).astype(np.uint16))
    save_saliency(gt, root / "gt" / f"{name}.png")
    return root / "rgb" / f"{name}.png", root / "depth" / f"{name}.png"


@pytest.fixture
def pair(tmp_path):
    return write_pair(tmp_path / "ds", "a")


def test_detect_writes_map_and_intermediates(tmp_path, pair):
    rgb, depth = pair
    out = tmp_path / "s.png"
    code = main(["detect", "--rgb", str(rgb), "--depth", str(depth), "--out", str(out),
                 "--emit-intermediates", str(tmp_path / "inter"), "--figure",
                 str(tmp_path / "panel.png"), *SMALL])
    assert code == 0
    s = load_gray(out)
    assert s.shape == (72, 96) and s.min() >= 0 and s.max() <= 1
    for name in ("s1hat", "s2hat", "extended", "depth_filtered", "depth_polarized"):
        assert (tmp_path / "inter" / f"{name}.png").exists()
    assert (tmp_path / "panel.png").exists()


def test_missing_flag_exits_2(pair, capsys):
    with pytest.raises(SystemExit) as err:
        main(["detect", "--rgb", str(pair[0]), "--out", "x.png"])
    assert err.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_invalid_param_exits_2_naming_invariant(pair, capsys):
    with pytest.raises(SystemExit) as err:
        main(["detect", "--rgb", str(pair[0]), "--depth", str(pair[1]), "--out", "x.png",
              "--sigma2", "0"])
    assert err.value.code == 2
    assert "sigma2 must be > 0" in capsys.readouterr().err


def test_io_failure_exits_1(tmp_path, pair, capsys):
    code = main(["detect", "--rgb", str(tmp_path / "none.png"), "--depth", str(pair[1]),
                 "--out", str(tmp_path / "x.png")])
    assert code == 1
    assert "none.png" in capsys.readouterr().err


def test_center_bias_override(tmp_path, pair):
    save_saliency(np.ones((72, 96)), tmp_path / "cb.png")
    assert main(["detect", "--rgb", str(pair[0]), "--depth", str(pair[1]), "--out",
                 str(tmp_path / "s.png"), "--center-bias-map", str(tmp_path / "cb.png"),
                 *SMALL]) == 0
    save_saliency(np.ones((10, 10)), tmp_path / "bad.png")
    assert main(["detect", "--rgb", str(pair[0]), "--depth", str(pair[1]), "--out",
                 str(tmp_path / "s.png"), "--center-bias-map", str(tmp_path / "bad.png")]) == 1


def test_config_file_and_env(tmp_path, monkeypatch):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# defaults\nk = 12\nsigma2=0.5\nnegation-mode = literal\n")
    assert read_config(cfg) == {"k": "12", "sigma2": "0.5", "negation_mode": "literal"}
    parser = build_parser()
    args = parser.parse_args(["detect", "--rgb", "a", "--depth", "b", "--out", "c",
                              "--config", str(cfg), "--k", "20"])
    params = resolve_params(args)
    assert (params.k, params.sigma2, params.negation_mode.value) == (20, 0.5, "literal")
    monkeypatch.setenv("SALMAP_CONFIG", str(cfg))
    args = parser.parse_args(["detect", "--rgb", "a", "--depth", "b", "--out", "c"])
    assert resolve_params(args).k == 12


def test_config_with_bad_value_exits_2(tmp_path, pair, monkeypatch):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("beta = 0\n")
    monkeypatch.setenv("SALMAP_CONFIG", str(cfg))
    with pytest.raises(SystemExit) as err:
        main(["detect", "--rgb", str(pair[0]), "--depth", str(pair[1]), "--out", "x.png"])
    assert err.value.code == 2


def test_batch_and_eval(tmp_path):
    root = tmp_path / "ds"
    for i, name in enumerate("abc"):
        write_pair(root, name, seed=i)
    pred = tmp_path / "pred"
    assert main(["detect-batch", "--dataset", str(root), "--out", str(pred), "--ablation",
                 *SMALL]) == 0
    assert sorted(p.name for p in pred.glob("*.png")) == ["a.png", "b.png", "c.png"]
    assert len(list((pred / "s1hat").glob("*.png"))) == 3
    prefix = tmp_path / "rep" / "r"
    assert main(["eval", "--pred-dir", str(pred), "--gt-dir", str(root / "gt"),
                 "--out-prefix", str(prefix)]) == 0
    for suffix in ("_summary.csv", "_pr.csv", "_roc.csv", "_per_image.csv", "_ablation.csv",
                   "_pr.png", "_roc.png"):
        assert (tmp_path / "rep" / f"r{suffix}").exists()
    stages = [r["stage"] for r in csv.DictReader(open(f"{prefix}_ablation.csv"))]
    assert stages == ["s1hat", "s2hat", "s"]


def test_batch_skips_corrupt_image(tmp_path, caplog):
    root = tmp_path / "ds"
    write_pair(root, "a")
    write_pair(root, "b")
    (root / "rgb" / "b.png").write_bytes(b"not a png")
    code = main(["detect-batch", "--dataset", str(root), "--out", str(tmp_path / "p"),
                 "--jobs", "2", *SMALL])
    assert code == 1
    assert (tmp_path / "p" / "a.png").exists()
    assert "b" in caplog.text


def test_eval_self_and_missing(tmp_path, capsys):
    gt = tmp_path / "gt"
    rng = np.random.default_rng(0)
    for n in "ab":
        save_saliency((rng.random((8, 8)) > 0.5).astype(float), gt / f"{n}.png")
    assert main(["eval", "--pred-dir", str(gt), "--gt-dir", str(gt), "--out-prefix",
                 str(tmp_path / "self"), "--no-figures"]) == 0
    rows = dict(csv.reader(open(tmp_path / "self_summary.csv")))
    assert float(rows["mae"]) == 0 and float(rows["f_measure"]) == 1
    assert not (tmp_path / "self_pr.png").exists()
    pred = tmp_path / "pred"
    save_saliency(np.zeros((8, 8)), pred / "a.png")
    assert main(["eval", "--pred-dir", str(pred), "--gt-dir", str(gt), "--out-prefix",
                 str(tmp_path / "x")]) == 1
    assert "b" in capsys.readouterr().err.split(":")[-1]


def test_dark_target(tmp_path):
    frames = tmp_path / "frames"
    for i, (f, _) in enumerate(small_target_frames(n_frames=2, width=64, height=48)):
        save_rgb(f, frames / f"f{i}.png")
    out = tmp_path / "out"
    assert main(["dark-target", "--frames", str(frames), "--out", str(out), "--patch", "5",
                 "--emit-dcp", *SMALL]) == 0
    assert sorted(p.name for p in out.glob("*.png")) == ["f0.png", "f1.png"]
    assert (out / "dcp" / "f0.png").exists()
    with pytest.raises(SystemExit) as err:
        main(["dark-target", "--frames", str(frames), "--out", str(out), "--patch", "4"])
    assert err.value.code == 2


def test_montage_commands(tmp_path, rng):
    img = rng.random((10, 12, 3))
    save_rgb(img, tmp_path / "img.png")
    save_saliency(np.ones((10, 12)), tmp_path / "sal.png")
    save_rgb(np.zeros((20, 20, 3)), tmp_path / "bg.png")
    obj = str(tmp_path / "obj")
    assert main(["montage", "segment", "--rgb", str(tmp_path / "img.png"), "--saliency",
                 str(tmp_path / "sal.png"), "--out", obj]) == 0
    np.testing.assert_allclose(load_rgb(obj + ".png"), load_rgb(tmp_path / "img.png"))
    assert main(["montage", "recolor", "--object", obj, "--out", obj + "2",
                 "--permutation", "2,1,0", "--gains", "1,1,0.5"]) == 0
    assert main(["montage", "resize", "--object", obj + "2", "--width", "6", "--height", "5",
                 "--out", obj + "3"]) == 0
    assert load_gray(obj + "3_alpha.png").shape == (5, 6)
    assert main(["montage", "resize", "--image", str(tmp_path / "img.png"), "--width", "4",
                 "--height", "4", "--out", str(tmp_path / "small.png")]) == 0
    assert main(["montage", "composite", "--bg", str(tmp_path / "bg.png"), "--object",
                 obj + "3", "--x", "3", "--y", "4", "--out", str(tmp_path / "c.png")]) == 0
    c = load_rgb(tmp_path / "c.png")
    assert c[:4].max() == 0 and c[4:9, 3:9].max() > 0
    with pytest.raises(SystemExit) as err:
        main(["montage", "recolor", "--object", obj, "--out", "o", "--gains", "3,1,1"])
    assert err.value.code == 2


def test_module_entry_point(pair, tmp_path):
    out = tmp_path / "s.png"
    cmd = [sys.executable, "-m", "depthsal", "detect", "--rgb", str(pair[0]), "--depth",
           str(pair[1]), "--out", str(out), *SMALL]
    assert subprocess.run(cmd, capture_output=True).returncode == 0
    first = out.read_bytes()
    assert subprocess.run(cmd, capture_output=True).returncode == 0
    assert out.read_bytes() == first
