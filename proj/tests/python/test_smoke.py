import numpy as np
import pytest

import styler


def rng_feature(seed, c, h, w, scale=1.0):
    return (np.random.default_rng(seed).standard_normal((c, h, w)) * scale).astype(np.float32)


def rng_image(seed, h, w):
    return np.random.default_rng(seed).random((3, h, w), dtype=np.float32)


def channel_cov(f):
    x = f.reshape(f.shape[0], -1).astype(np.float64)
    return np.cov(x, bias=True)


def test_whiten_gives_identity_covariance():
    mix = rng_feature(1, 1, 6, 6)[0]
    f = np.einsum("ij,jhw->ihw", mix, rng_feature(2, 6, 10, 10)) + 0.5
    w = styler.whiten(f)
    assert w.shape == f.shape
    assert np.abs(channel_cov(w) - np.eye(6)).max() < 1e-3


def test_wct_transfers_style_statistics():
    content = rng_feature(3, 5, 12, 12)
    style = rng_feature(4, 5, 9, 9, scale=2.0) + 1.0
    out = styler.wct(content, style)
    assert out.shape == content.shape
    s = style.reshape(5, -1)
    o = out.reshape(5, -1)
    assert np.abs(o.mean(axis=1) - s.mean(axis=1)).max() < 1e-3
    assert np.abs(channel_cov(out) - channel_cov(style)).max() < 1e-3


def test_remd_worked_example_and_gradient_shape():
    s = np.array([[[1.0, 0.0]], [[0.0, 1.0]]], dtype=np.float32)
    x = np.array([[[1.0, 1.0]], [[0.0, 0.0]]], dtype=np.float32)
    value, grad = styler.remd_loss(s, x)
    assert value == pytest.approx(0.5, abs=1e-7)
    assert grad.shape == x.shape


def test_cost_matrix_entries_in_range():
    c = styler.cost_matrix(rng_feature(5, 3, 2, 3), rng_feature(6, 3, 4, 1))
    assert c.shape == (6, 4)
    assert c.min() >= 0.0 and c.max() <= 2.0


@pytest.mark.parametrize("loss", [styler.perceptual_loss, styler.gram_loss, styler.meanvar_loss])
def test_losses_vanish_on_identical_features(loss):
    f = rng_feature(7, 4, 3, 3)
    value, grad = loss(f, f)
    assert value == pytest.approx(0.0, abs=1e-12)
    assert np.abs(grad).max() < 1e-6


def test_perceptual_gradient_matches_closed_form():
    a = rng_feature(8, 2, 3, 3)
    b = rng_feature(9, 2, 3, 3)
    _, grad = styler.perceptual_loss(a, b)
    np.testing.assert_allclose(grad, 2.0 * (b - a) / a.size, rtol=1e-5, atol=1e-7)


def test_ssim_identity_and_symmetry():
    a = rng_image(10, 32, 32)
    b = rng_image(11, 32, 32)
    assert styler.ssim(a, a) == 1.0
    assert abs(styler.ssim(a, b) - styler.ssim(b, a)) < 1e-12


def test_invalid_input_raises():
    with pytest.raises(styler.InvalidInput):
        styler.wct(rng_feature(1, 3, 4, 4), rng_feature(2, 4, 4, 4))
    with pytest.raises(styler.StylerError):
        styler.ssim(rng_image(1, 16, 16), rng_image(2, 16, 20))


def test_stylize_shapes_and_determinism():
    model = styler.Stylizer.fresh_toy(3)
    content = rng_image(12, 64, 48)
    style = rng_image(13, 64, 64)
    out = model.stylize(content, style)
    assert out.shape == (3, 64, 48)
    assert out.min() >= 0.0 and out.max() <= 1.0
    np.testing.assert_array_equal(out, model.stylize(content, style))
    assert model.stylize_coarse(content, style).shape == (3, 32, 24)
    with pytest.raises(styler.InvalidInput):
        model.stylize(rng_image(1, 60, 64), style)


def test_archive_round_trip(tmp_path):
    path = tmp_path / "weights.nta"
    tensors = {"conv1.weight": rng_feature(14, 2, 3, 4), "conv1.bias": np.arange(2, dtype=np.float32)}
    styler.write_archive(path, tensors, {"kind": "test"})
    loaded, meta = styler.read_archive(path)
    assert meta == {"kind": "test"}
    assert set(loaded) == set(tensors)
    for name, value in tensors.items():
        np.testing.assert_array_equal(loaded[name], value)
    with pytest.raises(styler.IoError):
        styler.read_archive(tmp_path / "missing.nta")


def test_image_round_trip(tmp_path):
    img = np.round(rng_image(15, 16, 24) * 255) / 255
    styler.save_image(img, tmp_path / "x.png")
    np.testing.assert_allclose(styler.load_image(tmp_path / "x.png"), img, atol=1e-6)


def test_short_training_run(tmp_path):
    styler.make_toy_data(tmp_path / "data", 4, 32, seed=1)
    cfg = tmp_path / "cfg.toml"
    cfg.write_text(
        'profile = "toy"\n'
        'content_root = "data/content"\n'
        'style_image = "data/style.png"\n'
        "image_size = 32\n"
        "coarse_iters = 3\n"
        "fine_iters = 3\n"
        "checkpoint_every = 3\n"
        "log_every = 1\n"
        'out_dir = "out"\n'
    )
    coarse, coarse_csv = styler.train_coarse(cfg)
    fine, fine_csv = styler.train_fine(cfg, coarse)
    assert coarse.exists() and fine.exists()
    assert fine_csv.read_text().splitlines()[0] == "iter,l_p,l_r,l_g,l_m,total"
    model = styler.Stylizer.load(coarse, fine)
    assert model.stylize(rng_image(16, 32, 32), rng_image(17, 32, 32)).shape == (3, 32, 32)
    with pytest.raises(styler.ConfigError):
        cfg.write_text("image_size = 30\n")
        styler.train_coarse(cfg)
