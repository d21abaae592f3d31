import json

import numpy as np
import pytest

import glpge


def test_render_and_degrade():
    page = glpge.render_document(3, 96, 128)
    assert page.shape == (96, 128, 3)
    assert page.dtype == np.float32
    assert 0.0 <= page.min() and page.max() <= 1.0
    assert np.array_equal(glpge.degrade(page, 0.0, 1), page)
    worse = glpge.degrade(page, 0.8, 1)
    assert glpge.ssim(worse, page) < glpge.ssim(glpge.degrade(page, 0.2, 1), page)
    assert np.array_equal(worse, glpge.degrade(page, 0.8, 1))


def test_metrics():
    a = np.full((32, 32, 3), 0.5, np.float32)
    assert glpge.psnr(a, a) == 99.0
    assert glpge.ssim(a, a) == pytest.approx(1.0)
    prof = glpge.spectral_profile(a)
    assert prof["dc_fraction"] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        glpge.ssim(a, np.zeros((16, 16, 3), np.float32))


def test_config_round_trip():
    cfg = json.loads(glpge.default_config())
    assert cfg["train"]["batch"] == 4
    assert cfg["reference"]["batch"] == 16
    model = glpge.Model.fresh(glpge.micro_config())
    assert json.loads(model.config) == json.loads(glpge.micro_config())
    cfg["train"]["typo"] = 1
    with pytest.raises(glpge.ConfigError):
        glpge.Model.fresh(json.dumps(cfg))


def test_fresh_model_enhance_and_bench():
    model = glpge.Model.fresh(glpge.micro_config())
    img = glpge.render_document(1, 100, 70)
    for mode in ("baseline", "fast"):
        out = model.enhance(img, mode=mode)
        assert out.shape == img.shape
    assert np.array_equal(model.enhance(img, stage_order="global_only"), img)
    rep = json.loads(model.bench([64, 128]))
    assert [r["coeff_flop_ratio"] for r in rep["rows"]] == [0.25, 0.25]
    with pytest.raises(ValueError):
        model.enhance(np.zeros((32, 32, 3), np.float32))


def test_train_evaluate_chain(tmp_path):
    data = tmp_path / "data"
    assert glpge.build_dataset(str(data), count=4, size=64, seed=9) == 4
    manifest = data / "manifest.csv"
    micro = glpge.micro_config()
    gpp = tmp_path / "gpp.glpge"
    joint = tmp_path / "joint.glpge"
    totals = glpge.train("gpp", manifest, gpp, config=micro)
    assert len(totals) == 10
    assert len(glpge.train("joint", manifest, joint, init=gpp)) == 10
    model = glpge.Model.load(joint)
    assert model.phase == "joint" and model.step == 20
    report = json.loads(glpge.evaluate(manifest, joint, spectrum=True))
    assert report["summary"]["count"] == 4
    identity = json.loads(glpge.evaluate(manifest))
    assert len(identity["rows"]) == 4
    with pytest.raises(glpge.VersionError):
        glpge.train("finetune", manifest, tmp_path / "x.glpge", init=gpp)


def test_images_and_report(tmp_path):
    page = glpge.render_document(2, 64, 64)
    glpge.save_image(page, tmp_path / "p.png")
    back = glpge.load_image(tmp_path / "p.png")
    assert np.abs(back - page).max() <= 0.5 / 255 + 1e-6
    strip = glpge.report_render([page, page, page], "SSIM 1.0")
    assert strip.shape[1] == 3 * 64 + 4 * 8
    with pytest.raises(glpge.IoError):
        glpge.load_image(tmp_path / "missing.png")


def test_cli():
    code, out, _ = glpge.run_cli(["config", "dump", "--micro"])
    assert code == 0 and json.loads(out) == json.loads(glpge.micro_config())
    code, _, err = glpge.run_cli(["nope"])
    assert code == 2 and "Usage" in err
