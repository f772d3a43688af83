import numpy as np
import pytest

from chseg.tcn import TCN, Adam, TCNConfig, adam_step, forward, loss, param_count, param_shapes

from oracles import finite_difference_check, tiny_config


@pytest.mark.parametrize("task", ["vad", "scd"])
def test_gradients_match_finite_differences(task):
    checked, failed, worst = finite_difference_check(task)
    assert checked == TCN(tiny_config(task)).n_params
    assert failed == 0, f"worst relative error {worst:.2e}"


@pytest.mark.parametrize("f", [59, 316, 1087, 2115])
def test_param_count_matches_tensors(f):
    cfg = TCNConfig(input_dim=f)
    assert param_count(cfg) == sum(int(np.prod(s)) for s in param_shapes(cfg).values())
    assert param_count(cfg) == TCN(cfg).n_params


def test_param_count_scales_with_input_dim():
    a = param_count(TCNConfig(59))
    b = param_count(TCNConfig(59 + 2056))
    assert b - a == 2056 * 64
    assert b - a == pytest.approx(0.14e6, rel=0.1)


def test_receptive_field_arithmetic():
    cfg = TCNConfig(59)
    assert cfg.dilations == (1, 2, 4, 8, 16)
    assert 1 + 2 * sum(cfg.dilations) == 63
    assert cfg.receptive_field == 187


def test_receptive_field_by_probing():
    cfg = TCNConfig(4, bottleneck_dim=6, hidden_dim=8, dtype="float64")
    net = TCN(cfg, seed=1)
    t, centre = 401, 200
    x = np.random.default_rng(0).standard_normal((1, t, 4))
    base = net.forward(x)
    x2 = x.copy()
    x2[0, centre] += 1.0
    changed = np.flatnonzero(np.abs(net.forward(x2) - base).max(axis=2)[0] > 0)
    assert changed.min() == centre - 93 and changed.max() == centre + 93
    assert changed.max() - changed.min() + 1 == cfg.receptive_field


@pytest.mark.parametrize("t", [1, 200])
def test_same_length_output_and_softmax(t):
    net = TCN(TCNConfig(59))
    y = net.forward(np.random.default_rng(0).standard_normal((2, t, 59)))
    assert y.shape == (2, t, 2)
    np.testing.assert_allclose(y.sum(axis=2), 1.0, atol=1e-5)


def test_functional_forward_layout():
    cfg = TCNConfig.for_task("scd", 10)
    net = TCN(cfg, seed=3)
    feats = np.random.default_rng(1).standard_normal((10, 50))
    out = forward(net.weights, cfg, feats)
    assert out.shape == (1, 50)
    np.testing.assert_allclose(out, net.forward(feats.T[None])[0].T)
    with pytest.raises(ValueError):
        forward(net.weights, cfg, feats.T)


def test_translation_consistency_in_interior():
    cfg = TCNConfig(4, bottleneck_dim=6, hidden_dim=8, dtype="float64")
    net = TCN(cfg, seed=2)
    x = np.random.default_rng(3).standard_normal((1, 600, 4))
    s = 37
    a = net.forward(x[:, s:])
    b = net.forward(x)[:, s:]
    inner = slice(cfg.receptive_field, 600 - s - cfg.receptive_field)
    np.testing.assert_allclose(a[:, inner], b[:, inner], atol=1e-12)


def test_loss_examples():
    targets = np.array([0, 1, 1])
    onehot = np.eye(2)[targets].T
    assert loss(onehot, targets, "vad") == 0.0
    assert loss(np.full((2, 3), 0.5), targets, "osd") == pytest.approx(np.log(2))
    curve = np.array([[0.1, 0.9, 0.3]])
    assert loss(curve, curve[0], "scd") == 0.0
    with pytest.raises(ValueError):
        loss(curve, curve[0], "asr")


def test_weight_validation():
    cfg = TCNConfig(5)
    w = TCN(cfg).weights
    w["head.b"] = np.zeros(3)
    with pytest.raises(ValueError):
        TCN(cfg, w)
    with pytest.raises(ValueError):
        TCNConfig(5, kernel_size=4)


def test_backward_requires_forward():
    with pytest.raises(RuntimeError):
        TCN(TCNConfig(3)).backward(np.zeros((1, 2, 2)))


def test_non_finite_input_raises():
    net = TCN(TCNConfig(3, dtype="float64"))
    x = np.zeros((1, 5, 3))
    x[0, 2, 1] = np.nan
    with pytest.raises(FloatingPointError):
        net.loss_and_grads(x, np.zeros((1, 5), int), "vad")


def test_adam_zero_gradient_is_noop():
    w = {"a": np.array([1.0, -2.0])}
    adam_step(w, {"a": np.zeros(2)}, Adam())
    np.testing.assert_array_equal(w["a"], [1.0, -2.0])


def test_adam_first_step_size_is_lr():
    w = {"a": np.array([3.0])}
    Adam(lr=1e-3).step(w, {"a": np.array([6.0])})
    assert w["a"][0] == pytest.approx(3.0 - 1e-3, abs=1e-9)


def test_adam_descends_quadratic():
    w = {"a": np.array([3.0])}
    opt = Adam(lr=0.1)
    for _ in range(200):
        opt.step(w, {"a": 2 * w["a"]})
    assert abs(w["a"][0]) < 0.1
