import numpy as np
import pytest

from topocnn import Activation, LayerKind, LayerSpec, Model, ShapeError, build_model, mse_loss
from topocnn.ops import conv2d_forward, maxpool_forward, relu, tconv2d_forward

from .conftest import SMALL_SIDE, TINY_WIDTHS
from .utils import activation_pattern, expected_parameter_count, same_pattern

_BASE_SHAPES = [
    (100, 100, 128),
    (50, 50, 128),
    (50, 50, 256),
    (25, 25, 256),
    (25, 25, 512),
    (5, 5, 512),
    (12800,),
    (12800,),
    (5, 5, 512),
    (10, 10, 256),
    (50, 50, 128),
    (100, 100, 1),
]


def test_base_network_shapes():
    """The full-size network follows the encoder-decoder shape chain"""
    model = build_model(materialize=False)

    assert model.output_shapes() == _BASE_SHAPES
    assert [layer.spec.kind for layer in model.stack][:7] == [
        LayerKind.CONV,
        LayerKind.MAXPOOL,
        LayerKind.CONV,
        LayerKind.MAXPOOL,
        LayerKind.CONV,
        LayerKind.MAXPOOL,
        LayerKind.FLATTEN,
    ]


def test_base_network_parameter_count():
    """The full-size network has 168,606,465 parameters, mostly in the dense layer"""
    model = build_model(materialize=False)
    dense = next(layer for layer in model.stack if layer.spec.kind == LayerKind.DENSE)

    assert model.parameter_count() == 168_606_465
    assert model.parameter_count() == expected_parameter_count(100, (128, 256, 512))
    assert dense.param_shapes() == ((12800, 12800), (12800,))
    assert "Total params: 168,606,465" in model.summary()


@pytest.mark.parametrize("adaptive_n", [1000, 2000, 4000, 8000, 12000])
def test_adaptive_network_parameter_count(adaptive_n):
    """An adaptive layer of n units replaces the square bottleneck by 12800xn and nx12800"""
    model = build_model(adaptive_n, materialize=False)
    base = 168_606_465 - (12800 * 12800 + 12800)

    assert model.parameter_count() == base + (12800 * adaptive_n + adaptive_n) + (
        adaptive_n * 12800 + 12800
    )
    assert model.output_shapes()[7] == (adaptive_n,)
    assert model.output_shape == (100, 100, 1)


@pytest.mark.parametrize("adaptive_n", [0, 64, 128])
def test_desk_scale_network(adaptive_n):
    """A 40x40 network with narrow channels runs forward to a 40x40x1 output"""
    model = build_model(adaptive_n, 40, (8, 16, 32), seed=3)
    x = np.random.default_rng(0).random((2, 40, 40, 1))

    out, cache = model.forward(x)

    assert out.shape == (2, 40, 40, 1)
    assert len(cache) == len(model.layers)
    assert model.output_shapes()[6] == (128,)
    assert model.parameter_count() == expected_parameter_count(40, (8, 16, 32), adaptive_n)
    assert sum(p.size for p in model.parameters()) == model.parameter_count()


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(input_side=30),
        dict(input_side=0),
        dict(adaptive_n=-1),
        dict(channel_widths=(0, 4, 8)),
    ],
)
def test_build_model_rejects_bad_arguments(kwargs):
    """Sides must be multiples of 20, adaptive_n non-negative and widths positive"""
    with pytest.raises(ValueError):
        build_model(**{"channel_widths": TINY_WIDTHS, "input_side": SMALL_SIDE, **kwargs})


def test_forward_matches_manual_composition(tiny_model, rng):
    """The model output equals the kernels composed by hand"""
    x = rng.random((3, SMALL_SIDE, SMALL_SIDE, 1))
    w, b = tiny_model.weights, tiny_model.biases
    specs = [layer.spec.params for layer in tiny_model.stack]

    h = relu(conv2d_forward(x, w[0], b[0], specs[0]))
    h, _ = maxpool_forward(h, specs[1])
    h = relu(conv2d_forward(h, w[2], b[2], specs[2]))
    h, _ = maxpool_forward(h, specs[3])
    h = relu(conv2d_forward(h, w[4], b[4], specs[4]))
    h, _ = maxpool_forward(h, specs[5])
    h = h.reshape(3, -1)
    h = relu(h @ w[7].T + b[7])
    h = h.reshape(3, 1, 1, 8)
    h = relu(tconv2d_forward(h, w[9], b[9], specs[9]))
    h = relu(tconv2d_forward(h, w[10], b[10], specs[10]))
    h = relu(tconv2d_forward(h, w[11], b[11], specs[11]))

    out, _ = tiny_model.forward(x)

    np.testing.assert_allclose(out, h, rtol=1e-12, atol=1e-12)


def test_zero_weights_give_zero_output(tiny_model, rng):
    """With every weight and bias zero the output is exactly zero"""
    tiny_model.set_parameters([np.zeros_like(p) for p in tiny_model.parameters()])

    out, _ = tiny_model.forward(rng.random((2, SMALL_SIDE, SMALL_SIDE, 1)))

    assert not out.any()


def test_initialization_is_seeded():
    """The same seed draws the same weights; another seed draws others"""
    a = build_model(0, SMALL_SIDE, TINY_WIDTHS, seed=7)
    b = build_model(0, SMALL_SIDE, TINY_WIDTHS, seed=7)
    c = build_model(0, SMALL_SIDE, TINY_WIDTHS, seed=8)

    assert all(np.array_equal(x, y) for x, y in zip(a.parameters(), b.parameters()))
    assert not np.array_equal(a.parameters()[0], c.parameters()[0])
    assert all(not bias.any() for bias in a.parameters()[1::2])


def test_whole_model_gradient(tiny_model, rng):
    """Back-propagated gradients match central differences on sampled parameters

    Perturbations that flip a ReLU or a pooling winner are not differentiable
    and are skipped in favour of other samples.
    """
    x = rng.random((2, SMALL_SIDE, SMALL_SIDE, 1))
    target = rng.random((2, SMALL_SIDE, SMALL_SIDE, 1))
    params = tiny_model.parameters()
    pred, cache = tiny_model.forward(x)
    _, grad = mse_loss(pred, target)
    grads = tiny_model.backward(grad, cache)

    def loss():
        return mse_loss(tiny_model.forward(x)[0], target)[0]

    step = 1e-6
    reference = activation_pattern(tiny_model, x)
    analytic, numeric = [], []
    while len(analytic) < 50:
        k = int(rng.integers(len(params)))
        index = tuple(int(rng.integers(n)) for n in params[k].shape)
        original = params[k][index]
        params[k][index] = original + step
        plus, plus_pattern = loss(), activation_pattern(tiny_model, x)
        params[k][index] = original - step
        minus, minus_pattern = loss(), activation_pattern(tiny_model, x)
        params[k][index] = original
        if not (same_pattern(reference, plus_pattern) and same_pattern(reference, minus_pattern)):
            continue
        analytic.append(grads[k][index])
        numeric.append((plus - minus) / (2 * step))

    np.testing.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-9)


def test_backward_returns_gradients_in_parameter_order(tiny_model, rng):
    """Gradients line up with parameters() one to one"""
    x = rng.random((1, SMALL_SIDE, SMALL_SIDE, 1))
    pred, cache = tiny_model.forward(x)

    grads = tiny_model.backward(np.ones_like(pred), cache)

    assert [g.shape for g in grads] == [p.shape for p in tiny_model.parameters()]


def test_predict_clamps_to_unit_interval():
    """predict clips raw outputs into [0, 1]"""
    layer = LayerSpec.conv(1, 1, activation=Activation.NONE)
    model = Model(
        layers=[layer],
        input_shape=(2, 2, 1),
        weights=[np.full((1, 1, 1, 1), 1.3)],
        biases=[np.zeros(1)],
    )
    x = np.array([1.0, -1.0, 0.5, 0.0]).reshape(1, 2, 2, 1)

    raw, _ = model.forward(x)
    got = model.predict(x)

    assert raw[0, :, :, 0].tolist() == pytest.approx([[1.3, -1.3], [0.65, 0.0]])
    assert got[0, :, :, 0].tolist() == pytest.approx([[1.0, 0.0], [0.65, 0.0]])


def test_model_rejects_wrong_input(tiny_model):
    """Inputs whose sample shape differs from the model's raise ShapeError"""
    with pytest.raises(ShapeError):
        tiny_model.forward(np.zeros((1, 40, 40, 1)))
    with pytest.raises(ShapeError):
        tiny_model.forward(np.zeros((SMALL_SIDE, SMALL_SIDE, 1)))


def test_unmaterialized_model_cannot_run():
    """A model built without weights reports shapes but refuses to run"""
    model = build_model(0, SMALL_SIDE, TINY_WIDTHS, materialize=False)

    assert not model.is_materialized
    with pytest.raises(ValueError):
        model.forward(np.zeros((1, SMALL_SIDE, SMALL_SIDE, 1)))


def test_model_rejects_mismatched_parameters():
    """Parameters whose shapes disagree with the layers are refused"""
    with pytest.raises(ValueError):
        Model(
            layers=[LayerSpec.conv(2, 2)],
            input_shape=(4, 4, 1),
            weights=[np.zeros((2, 3, 3, 1))],
            biases=[np.zeros(2)],
        )


def test_layer_spec_validation():
    """Layer specs reject parameters of the wrong kind and 'same' transpose padding"""
    with pytest.raises(ValueError):
        LayerSpec(kind=LayerKind.DENSE, params={"window": 2})
    with pytest.raises(ValueError):
        LayerSpec.tconv(4, 2, stride=2, padding="same")
    with pytest.raises(ValueError):
        Model(layers=[LayerSpec.maxpool(3)], input_shape=(4, 4, 1))
