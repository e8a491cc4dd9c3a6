import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ed2lab.numcore import (
    MlpParams,
    Tensor,
    adam_init,
    adam_step,
    backward,
    concat,
    huber_loss,
    init_mlp,
    keep_large_blocks,
    load_arrays,
    mlp_forward,
    mse_loss,
    polyak_update,
    save_arrays,
)


def numeric_grad(f, arr, h=1e-5):
    """Central finite differences of scalar f() w.r.t. every entry of arr (mutated in place)."""
    out = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = arr[idx]
        arr[idx] = orig + h
        fp = f()
        arr[idx] = orig - h
        fm = f()
        arr[idx] = orig
        out[idx] = (fp - fm) / (2 * h)
    return out


def plain_forward(weights, biases, x):
    # straight-line oracle, no shared code with mlp_forward
    h = x
    for i, (w, b) in enumerate(zip(weights, biases)):
        h = np.dot(h, w) + b
        if i < len(weights) - 1:
            h = np.where(h > 0, h, 0.0)
    return h


def max_rel_error(a, b, floor=1e-6):
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))


# -- mlp_forward -------------------------------------------------------------


def test_zero_network_outputs_zero():
    rng = np.random.default_rng(0)
    params = init_mlp([3, 8, 8, 2], rng)
    for p in params.parameters():
        p.values[...] = 0.0
    out = mlp_forward(params, rng.normal(size=(5, 3)))
    assert np.all(out.values == 0.0)


def test_identity_single_layer():
    x = np.random.default_rng(1).normal(size=(4, 3))
    params = MlpParams([Tensor(np.eye(3), True)], [Tensor(np.zeros(3), True)])
    assert np.array_equal(mlp_forward(params, x).values, x)
    assert np.array_equal(mlp_forward(params, x, track=False), x)


def test_forward_matches_straight_line_oracle():
    rng = np.random.default_rng(2)
    params = init_mlp([5, 16, 7], rng)
    x = rng.normal(size=(9, 5))
    expected = plain_forward([w.values for w in params.weights], [b.values for b in params.biases], x)
    np.testing.assert_allclose(mlp_forward(params, x).values, expected, rtol=0, atol=1e-12)
    np.testing.assert_allclose(mlp_forward(params, x, track=False), expected, rtol=0, atol=1e-12)


def test_stacked_forward_equals_per_member_forward():
    rng = np.random.default_rng(3)
    params = init_mlp([4, 8, 8, 2], rng, members=3)
    x = rng.normal(size=(6, 4))
    out = mlp_forward(params, x, track=False)
    assert out.shape == (3, 6, 2)
    for k in range(3):
        ws = [w.values[k] for w in params.weights]
        bs = [b.values[k, 0] for b in params.biases]
        np.testing.assert_allclose(out[k], plain_forward(ws, bs, x), atol=1e-12)


def test_shape_mismatch_rejected():
    params = init_mlp([3, 4, 1], np.random.default_rng(0))
    with pytest.raises(ValueError, match="input width"):
        mlp_forward(params, np.zeros((2, 5)))


def test_unchained_layers_rejected():
    with pytest.raises(ValueError):
        MlpParams([Tensor(np.zeros((3, 4))), Tensor(np.zeros((5, 1)))], [Tensor(np.zeros(4)), Tensor(np.zeros(1))])


def test_shared_init_members_identical():
    params = init_mlp([3, 8, 2], np.random.default_rng(0), members=4, shared=True)
    for w in params.weights:
        assert all(np.array_equal(w.values[0], w.values[k]) for k in range(4))


def test_seeded_init_is_bitwise_reproducible():
    a = init_mlp([3, 16, 16, 1], np.random.default_rng(11), members=2)
    b = init_mlp([3, 16, 16, 1], np.random.default_rng(11), members=2)
    for p, q in zip(a.parameters(), b.parameters()):
        assert p.values.tobytes() == q.values.tobytes()


# -- backward ----------------------------------------------------------------


def test_constant_loss_gives_zero_gradients():
    params = init_mlp([2, 3, 1], np.random.default_rng(0))
    total = sum((p.sum() for p in params.parameters()), Tensor(0.0))
    loss = total * 0.0 + 7.0
    backward(loss)
    for p in params.parameters():
        assert np.all(p.grad == 0.0)


def test_sum_of_parameters_has_unit_gradients():
    params = init_mlp([2, 3, 1], np.random.default_rng(0))
    loss = sum((p.sum() for p in params.parameters()), Tensor(0.0))
    backward(loss)
    for p in params.parameters():
        assert np.all(p.grad == 1.0)


def test_non_scalar_loss_rejected():
    t = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ValueError, match="scalar"):
        backward(t * 2.0)


def test_graph_is_freed_after_backward():
    w = Tensor(np.ones((2, 2)), requires_grad=True)
    hidden = Tensor(np.ones((1, 2))) @ w
    loss = hidden.sum()
    backward(loss)
    assert hidden._parents == () and loss._parents == ()


def test_mlp_mse_gradients_match_finite_differences():
    rng = np.random.default_rng(4)
    params = init_mlp([4, 12, 12, 2], rng)
    x = rng.normal(size=(6, 4))
    y = rng.normal(size=(6, 2))

    def loss_value():
        out = plain_forward([w.values for w in params.weights], [b.values for b in params.biases], x)
        return float(np.mean((out - y) ** 2))

    backward(mse_loss(mlp_forward(params, x), Tensor(y)))
    for p in params.parameters():
        assert max_rel_error(p.grad, numeric_grad(loss_value, p.values)) < 1e-4


def test_elementwise_ops_against_finite_differences():
    rng = np.random.default_rng(5)
    a = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    b = Tensor(rng.normal(size=(4,)) + 3.0, requires_grad=True)

    def build():
        g = (a.abs().mean(axis=-1, keepdims=True)).maximum(0.5)
        return ((a / g).tanh() * b - b / (a * a + 1.0)).sum()

    backward(build())
    for t in (a, b):
        analytic = t.grad
        numeric = numeric_grad(lambda: build().item(), t.values)
        assert max_rel_error(analytic, numeric) < 1e-6


def test_concat_broadcasts_and_routes_gradients():
    s = Tensor(np.arange(6.0).reshape(3, 2))
    a = Tensor(np.ones((2, 3, 1)), requires_grad=True)
    out = concat([s, a])
    assert out.shape == (2, 3, 3)
    backward((out * out).sum())
    np.testing.assert_array_equal(a.grad, 2.0 * np.ones((2, 3, 1)))


# -- losses ------------------------------------------------------------------


def test_losses_zero_when_equal():
    x = Tensor(np.arange(4.0))
    assert mse_loss(x, x).item() == 0.0
    assert huber_loss(x, x).item() == 0.0


def test_losses_on_error_two():
    pred, target = Tensor([2.0]), Tensor([0.0])
    assert mse_loss(pred, target).item() == 4.0
    assert huber_loss(pred, target, delta=1.0).item() == 1.5


@given(st.lists(st.floats(-0.99, 0.99), min_size=1, max_size=20))
def test_huber_is_half_mse_inside_delta(errors):
    e = Tensor(np.array(errors))
    zero = Tensor(np.zeros(len(errors)))
    assert huber_loss(e, zero, 1.0).item() == pytest.approx(0.5 * mse_loss(e, zero).item(), abs=1e-15)


def test_loss_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        mse_loss(Tensor(np.zeros(3)), Tensor(np.zeros(4)))
    with pytest.raises(ValueError):
        huber_loss(Tensor(np.zeros(3)), Tensor(np.zeros((3, 1))))


def test_huber_gradient_matches_finite_differences():
    rng = np.random.default_rng(6)
    pred = Tensor(rng.normal(scale=2.0, size=10), requires_grad=True)
    target = rng.normal(size=10)
    backward(huber_loss(pred, Tensor(target), 0.7))
    numeric = numeric_grad(lambda: huber_loss(Tensor(pred.values), Tensor(target), 0.7).item(), pred.values)
    assert max_rel_error(pred.grad, numeric) < 1e-6


# -- adam / polyak -----------------------------------------------------------


def test_adam_zero_gradient_leaves_params():
    p = np.random.default_rng(0).normal(size=(3, 2))
    before = p.copy()
    state = adam_init([p])
    for _ in range(5):
        adam_step(state, [p], [np.zeros_like(p)])
    assert np.array_equal(p, before)
    assert state.step == 5


def test_adam_first_step_closed_form():
    p = np.array([0.5])
    state = adam_init([p], lr=1e-3)
    adam_step(state, [p], [np.array([1.0])])
    # m_hat = 1, v_hat = 1 -> step = lr * 1 / (1 + eps)
    assert p[0] == pytest.approx(0.5 - 1e-3 / (1 + 1e-8), abs=1e-15)


@given(st.floats(1e-3, 1e3), st.sampled_from([-1.0, 1.0]))
def test_adam_first_step_magnitude_independent_of_scale(scale, sign):
    p = np.zeros(4)
    state = adam_init([p], lr=1e-3)
    adam_step(state, [p], [np.full(4, sign * scale)])
    np.testing.assert_allclose(np.abs(p), 1e-3, rtol=1e-5)


def test_adam_rejects_shape_mismatch():
    p = np.zeros(3)
    state = adam_init([p])
    with pytest.raises(ValueError):
        adam_step(state, [p], [np.zeros(4)])


def test_polyak_extremes_and_midpoint():
    t, m = np.zeros(3), np.full(3, 2.0)
    polyak_update([t], [m], 1.0)
    assert np.all(t == 0.0)
    polyak_update([t], [m], 0.5)
    assert np.all(t == 1.0)
    polyak_update([t], [m], 0.0)
    assert np.array_equal(t, m)


def test_polyak_rejects_bad_rho():
    with pytest.raises(ValueError):
        polyak_update([np.zeros(1)], [np.zeros(1)], 1.5)


@given(st.floats(0.0, 0.999), st.integers(1, 50))
@settings(max_examples=50)
def test_polyak_converges_geometrically(rho, n):
    t, m = np.array([3.0]), np.array([-1.0])
    for _ in range(n):
        polyak_update([t], [m], rho)
    assert abs(t[0] - m[0]) == pytest.approx(4.0 * rho ** n, rel=1e-9, abs=1e-12)


# -- checkpoint --------------------------------------------------------------


def test_checkpoint_round_trip(tmp_path):
    params = init_mlp([3, 5, 2], np.random.default_rng(0), members=2)
    arrays = params.named_arrays("critic")
    path = tmp_path / "p.bin"
    save_arrays(path, arrays)
    loaded = load_arrays(path)
    assert list(loaded) == list(arrays)
    for name in arrays:
        assert loaded[name].tobytes() == arrays[name].tobytes()
    header = path.read_bytes().split(b"\n\n")[0].decode()
    assert header.splitlines()[1] == "critic.layer0.weight 2,3,5"


def test_allocator_tuning_is_idempotent_and_harmless():
    first = keep_large_blocks()
    assert keep_large_blocks() == first
    a = np.ones((10, 256, 64))
    assert float((a * 2.0).sum()) == 2.0 * a.size
