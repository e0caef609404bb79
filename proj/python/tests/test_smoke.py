import math

import numpy as np
import pytest

import echolab


def test_scene_round_trip_and_poses():
    scene = echolab.generate_scene_json(7)
    assert scene == echolab.generate_scene_json(7)
    count = echolab.navigable_pose_count(scene, spacing=1.0)
    assert count > 0
    assert count % 4 == 0


def test_render_shapes_and_ranges():
    scene = echolab.generate_scene_json(3)
    rgb, depth = echolab.render_rgbd(scene, 2.0, 2.0, 1.5, azimuth=90, size=32)
    assert rgb.shape == (32, 32, 3)
    assert depth.shape == (32, 32)
    assert rgb.min() >= 0.0 and rgb.max() <= 1.0
    assert depth.min() > 0.0


def test_chirp_and_echo():
    chirp = echolab.make_chirp()
    assert chirp.shape == (132,)
    assert chirp[0] == 0.0
    scene = echolab.generate_scene_json(5)
    echo = echolab.simulate_echo(scene, 2.0, 2.0, 1.5, azimuth=0, max_order=1)
    assert echo.shape == (2, 2646)
    assert np.abs(echo).max() > 0.0


def test_spectrogram_shape():
    wave = np.zeros((2, 2646))
    wave[:, 100] = 1.0
    spec = echolab.spectrogram(wave)
    assert spec.shape == (2, 257, 162)
    assert spec.min() >= 0.0


def test_depth_metrics_identity_and_scale():
    gt = np.random.default_rng(0).uniform(1.0, 5.0, size=(8, 8)).astype(np.float32)
    m = echolab.depth_metrics(gt, gt)
    assert m["rms"] == pytest.approx(0.0)
    assert m["delta1"] == pytest.approx(1.0)
    m = echolab.depth_metrics(1.3 * gt, gt)
    assert m["rel"] == pytest.approx(0.3, rel=1e-5)
    assert m["delta1"] == pytest.approx(0.0)
    assert m["delta2"] == pytest.approx(1.0)


def test_blob_round_trip(tmp_path):
    arr = np.random.default_rng(1).normal(size=(2, 3, 4)).astype(np.float32)
    path = tmp_path / "t.vets"
    echolab.write_blob(path, arr)
    back = echolab.read_blob(path)
    assert back.shape == arr.shape
    assert np.array_equal(back, arr)


def test_gradcheck_passes():
    results = echolab.gradcheck()
    assert len(results) >= 18
    for r in results:
        assert r["ok"], f"{r['name']} max_err {r['max_err']}"


def test_dataset_and_training(tmp_path):
    config = tmp_path / "tiny.toml"
    config.write_text(
        """
[dataset]
seed = 11
scenes = 3

[scene]
room_min_x = 3.0
room_max_x = 4.0
room_min_y = 3.0
room_max_y = 4.0
obstacles_min = 0
obstacles_max = 1

[grid]
spacing = 1.5

[camera]
width = 16
height = 16

[acoustics]
max_order = 1

[split]
train = 1
val = 1
test = 1

[model]
vis_widths = [4, 8, 8, 16]
audio_widths = [4, 8, 8, 16]
fusion_dim = 16

[train]
batch = 4
"""
    )
    dataset = tmp_path / "dataset"
    echolab.gen_dataset(config, dataset)
    assert (dataset / "manifest.jsonl").exists()
    out = tmp_path / "run"
    ckpt = echolab.train(dataset, "rgb2depth", seed=1, epochs=1, out=out)
    assert ckpt.exists()
    metrics = echolab.eval_depth(dataset, "rgb2depth", ckpt, split="test")
    assert metrics["pixels"] > 0
    assert 0.0 < metrics["rms"] < 10.0
