"""End-to-end smoke tests for the python bindings and the CLI."""

import json
import os
import subprocess
from pathlib import Path

import numpy as np
import pytest

import medgrad

CONFIG = {
    "model": {
        "image_size": 32,
        "patch_size": 8,
        "vision_layers": 1,
        "vision_heads": 2,
        "vision_dim": 16,
        "text_layers": 1,
        "text_heads": 2,
        "text_dim": 16,
        "context_length": 16,
        "embed_dim": 8,
        "mlp_ratio": 2,
    },
    "train": {"epochs": 1, "batch_size": 4, "lr": 0.001, "seed": 11, "split_fraction": 0.75},
    "data": {"n_pairs": 12, "k_classes": 3},
}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("medgrad")
    config = root / "config.json"
    config.write_text(json.dumps(CONFIG))

    data = root / "data"
    rc = medgrad.run_cli(["--config", str(config), "gen-data", "--out", str(data)])
    assert rc == 0

    ckpt = root / "model.ckpt"
    rc = medgrad.run_cli(
        ["--config", str(config), "train", "--data", str(data), "--out", str(ckpt)]
    )
    assert rc == 0
    return {"root": root, "config": config, "data": data, "ckpt": ckpt}


def test_dataset_on_disk(workspace):
    data = workspace["data"]
    manifest = (data / "manifest.jsonl").read_text().strip().splitlines()
    assert len(manifest) == 12
    row = json.loads(manifest[0])
    assert set(row) == {"id", "file", "mask", "class", "caption", "criteria"}
    img = medgrad.read_image(str(data / row["file"]))
    assert img.shape == (32, 32, 3)
    assert img.dtype == np.float32
    assert 0.0 <= img.min() <= img.max() <= 1.0


def test_model_encode_and_classify(workspace):
    model = medgrad.Model.load(str(workspace["ckpt"]))
    assert model.image_size == 32
    assert len(model.class_names) == 3

    img = medgrad.read_image(str(workspace["data"] / "images" / "pair-00000.png"))
    emb = model.encode_image(img)
    assert emb.shape == (model.embed_dim,)
    assert abs(np.linalg.norm(emb) - 1.0) < 1e-5

    txt = model.encode_text("melanoma, asymmetric")
    assert abs(np.linalg.norm(txt) - 1.0) < 1e-5

    probs = model.classify(img)
    assert len(probs) == 3
    assert abs(sum(probs) - 1.0) < 1e-6
    assert all(p >= 0 for p in probs)


def test_saliency_methods(workspace):
    model = medgrad.Model.load(str(workspace["ckpt"]))
    img = medgrad.read_image(str(workspace["data"] / "images" / "pair-00001.png"))
    for method in ("medgrad-eclip", "grad-eclip", "grad-cam"):
        sal = model.explain(img, "melanoma, asymmetric", method=method)
        assert sal.shape == (4, 4)
        assert sal.min() >= 0.0
        assert sal.max() <= 1.0

    with pytest.raises(medgrad.MedgradError):
        model.explain(img, "melanoma", method="lime")


def test_local_entropy_fast_equals_ref(workspace):
    rng = np.random.default_rng(3)
    gray = rng.random((24, 24), dtype=np.float32)
    fast = medgrad.local_entropy(gray, radius=3, bins=16, fast=True)
    ref = medgrad.local_entropy(gray, radius=3, bins=16, fast=False)
    assert np.array_equal(fast, ref)
    flat = np.full((16, 16), 0.25, dtype=np.float32)
    assert np.all(medgrad.local_entropy(flat, radius=2, bins=16) == 0.0)


def test_eval_and_explain_cli(workspace):
    root, config, data, ckpt = (
        workspace["root"],
        workspace["config"],
        workspace["data"],
        workspace["ckpt"],
    )
    report_path = root / "report.json"
    rc = medgrad.run_cli(
        ["--config", str(config), "eval", "--checkpoint", str(ckpt), "--data", str(data),
         "--split", "all", "--out", str(report_path)]
    )
    assert rc == 0
    report = json.loads(report_path.read_text())
    assert set(report) == {
        "accuracy", "loss", "precision", "recall", "f1",
        "sensitivity", "specificity", "clip_score", "n", "confusion",
    }
    assert report["n"] == 12

    panel = root / "panel.png"
    rc = medgrad.run_cli(
        ["--config", str(config), "explain", "--checkpoint", str(ckpt), "--image",
         str(data / "images" / "pair-00002.png"), "--caption", "melanoma", "--out", str(panel)]
    )
    assert rc == 0
    assert panel.exists()
    assert (root / "panel.medgrad-eclip.json").exists()


def test_cli_binary_if_available(workspace):
    cli = os.environ.get("MEDGRAD_CLI")
    if not cli or not Path(cli).exists():
        pytest.skip("MEDGRAD_CLI not set")
    out = subprocess.run(
        [cli, "inspect-checkpoint", str(workspace["ckpt"])],
        capture_output=True, text=True, timeout=120,
    )
    assert out.returncode == 0
    assert "total parameters" in out.stdout
