import numpy as np
import pytest

from redkit.errors import DivergenceError, InputError
from redkit.harness import xor_task
from redkit.net import (
    DenseNetwork,
    decode_net,
    dequantize,
    encode_net,
    forward,
    gradients,
    mse_loss,
    quantize,
    train,
)


def random_net(seed, sizes=None):
    rng = np.random.default_rng(seed)
    if sizes is None:
        sizes = (int(rng.integers(1, 4)), int(rng.integers(2, 6)), int(rng.integers(1, 3)))
    return DenseNetwork.initialize(sizes, seed), rng


class TestForward:
    def test_zero_weights_zero_output(self):
        net = DenseNetwork(
            (2, 3, 1),
            [np.zeros((3, 2)), np.zeros((1, 3))],
            [np.zeros(3), np.zeros(1)],
        )
        assert np.all(forward(net, [1.0, -1.0]) == 0.0)

    def test_affine_single_layer(self):
        net = DenseNetwork((1, 1), [np.array([[2.0]])], [np.array([1.0])])
        assert forward(net, [3.0])[0] == 7.0

    def test_dimension_mismatch(self):
        net = DenseNetwork.initialize((2, 2), 0)
        with pytest.raises(InputError):
            forward(net, [1.0, 2.0, 3.0])

    def test_quantized_forward_error_within_propagated_bound(self):
        rng = np.random.default_rng(2)
        for trial in range(100):
            net, _ = random_net(trial)
            q = quantize(net, 8)
            deq = dequantize(q)
            x = rng.standard_normal(net.layer_sizes[0])
            x = x / max(1.0, np.linalg.norm(x))
            exact = forward(net, x)
            approx = forward(deq, x)
            # interval propagation: activations bounded by 1 after tanh (and
            # the unit-norm input), tanh is 1-Lipschitz
            err = 0.0
            for layer, (w, ws, bs) in enumerate(
                zip(net.weights, q.weight_scales, q.bias_scales)
            ):
                fan_in = w.shape[1]
                gain = float(np.max(np.sum(np.abs(w), axis=1)))
                err = gain * err + fan_in * (ws / 2) + bs / 2
            assert np.max(np.abs(exact - approx)) <= err + 1e-9


class TestGradients:
    def test_matches_central_finite_differences(self):
        rng = np.random.default_rng(0)
        worst = 0.0
        for trial in range(10):
            net, _ = random_net(trial + 50)
            data = [
                (rng.standard_normal(net.layer_sizes[0]), rng.standard_normal(net.layer_sizes[-1]))
                for _ in range(6)
            ]
            _, grad_w, grad_b = gradients(net, data)
            h = 1e-4
            for li in range(len(net.weights)):
                for params, grads in ((net.weights, grad_w), (net.biases, grad_b)):
                    numeric = np.zeros_like(params[li])
                    for idx in np.ndindex(params[li].shape):
                        plus = net.copy()
                        plus_arr = plus.weights if params is net.weights else plus.biases
                        plus_arr[li][idx] += h
                        minus = net.copy()
                        minus_arr = minus.weights if params is net.weights else minus.biases
                        minus_arr[li][idx] -= h
                        numeric[idx] = (mse_loss(plus, data) - mse_loss(minus, data)) / (2 * h)
                    denom = np.linalg.norm(numeric) + np.linalg.norm(grads[li]) + 1e-12
                    worst = max(worst, float(np.linalg.norm(numeric - grads[li]) / denom))
        assert worst < 1e-4, worst


class TestTrain:
    def test_zero_epochs_unchanged(self):
        net, _ = random_net(1)
        trained = train(net, _fit_data(net), 0, 0.1)
        for w0, w1 in zip(net.weights, trained.weights):
            assert np.array_equal(w0, w1)

    def test_xor_pinned_seed(self):
        net = train(DenseNetwork.initialize((2, 4, 1), 42), xor_task(), 5000, 0.5)
        assert mse_loss(net, xor_task()) < 0.05
        for x, target in xor_task():
            assert abs(forward(net, x)[0] - target[0]) < 0.25

    def test_loss_non_increasing_at_small_rate(self):
        net = DenseNetwork.initialize((2, 4, 1), 0)
        data = xor_task()
        losses = [mse_loss(net, data)]
        for _ in range(200):
            net = train(net, data, 1, 1e-3)
            losses.append(mse_loss(net, data))
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    def test_divergence_detected(self):
        net = DenseNetwork.initialize((2, 4, 1), 0)
        with pytest.raises(DivergenceError):
            train(net, xor_task(), 2000, 1e6)

    def test_input_validation(self):
        net = DenseNetwork.initialize((2, 2), 0)
        with pytest.raises(InputError):
            train(net, xor_task(), 10, -1.0)
        with pytest.raises(InputError):
            train(net, [], 10, 0.1)


def _fit_data(net):
    rng = np.random.default_rng(0)
    return [
        (rng.standard_normal(net.layer_sizes[0]), rng.standard_normal(net.layer_sizes[-1]))
        for _ in range(4)
    ]


class TestQuantize:
    def test_all_zero_layer(self):
        net = DenseNetwork((1, 1), [np.zeros((1, 1))], [np.zeros(1)])
        q = quantize(net, 8)
        assert q.weight_scales == (0.0,)
        assert np.all(q.weight_codes[0] == 0)

    def test_single_unit_weight(self):
        net = DenseNetwork((1, 1), [np.array([[1.0]])], [np.zeros(1)])
        q = quantize(net, 8)
        assert q.weight_codes[0][0, 0] == 127
        assert q.weight_scales[0] == pytest.approx(1 / 127, rel=1e-6)

    def test_idempotent_on_grid(self):
        for seed in range(20):
            net, _ = random_net(seed)
            q = quantize(net, 8)
            again = quantize(dequantize(q), 8)
            assert q.weight_scales == again.weight_scales
            assert q.bias_scales == again.bias_scales
            for a, b in zip(q.weight_codes + q.bias_codes, again.weight_codes + again.bias_codes):
                assert np.array_equal(a, b)

    def test_error_at_most_half_scale(self):
        for seed in range(20):
            net, _ = random_net(seed)
            for bits in (2, 4, 8, 16):
                q = quantize(net, bits)
                for w, scale, codes in zip(net.weights, q.weight_scales, q.weight_codes):
                    assert np.all(np.abs(w - scale * codes) <= scale / 2 * (1 + 1e-9))
                for b, scale, codes in zip(net.biases, q.bias_scales, q.bias_codes):
                    if scale:
                        assert np.all(np.abs(b - scale * codes) <= scale / 2 * (1 + 1e-9))

    def test_code_range(self):
        net, _ = random_net(3)
        for bits in (2, 8, 16):
            q = quantize(net, bits)
            limit = 2 ** (bits - 1) - 1
            for codes in q.weight_codes + q.bias_codes:
                assert np.all(np.abs(codes) <= limit)

    def test_bits_validated(self):
        net, _ = random_net(4)
        with pytest.raises(InputError):
            quantize(net, 1)
        with pytest.raises(InputError):
            quantize(net, 17)


class TestEncoding:
    def test_one_by_one_pinned_size(self):
        # magic 2 + version 1 + layer count 1 + sizes 2 + bits 1
        # + scales 8 + one weight byte + one bias byte = 17
        net = DenseNetwork((1, 1), [np.array([[2.0]])], [np.array([1.0])])
        assert len(encode_net(quantize(net, 8))) == 17

    def test_equal_networks_identical_bytes(self):
        a = quantize(DenseNetwork.initialize((2, 3, 1), 9), 8)
        b = quantize(DenseNetwork.initialize((2, 3, 1), 9), 8)
        assert encode_net(a) == encode_net(b)

    def test_roundtrip(self):
        for seed in range(20):
            net, _ = random_net(seed)
            for bits in (2, 5, 8, 12, 16):
                q = quantize(net, bits)
                back = decode_net(encode_net(q))
                assert back.layer_sizes == q.layer_sizes
                assert back.bits == q.bits
                assert back.weight_scales == q.weight_scales
                assert back.bias_scales == q.bias_scales
                for x, y in zip(back.weight_codes + back.bias_codes, q.weight_codes + q.bias_codes):
                    assert np.array_equal(x, y)

    def test_flipping_one_code_changes_one_field(self):
        net, _ = random_net(6)
        q = quantize(net, 8)
        q.weight_codes[0][0, 0] += 1 if q.weight_codes[0][0, 0] < 100 else -1
        mutated = decode_net(encode_net(q))
        reference = decode_net(encode_net(quantize(net, 8)))
        diffs = []
        for li, (a, b) in enumerate(zip(mutated.weight_codes, reference.weight_codes)):
            for idx in np.ndindex(a.shape):
                if a[idx] != b[idx]:
                    diffs.append(("w", li, idx))
        for li, (a, b) in enumerate(zip(mutated.bias_codes, reference.bias_codes)):
            for idx in np.ndindex(a.shape):
                if a[idx] != b[idx]:
                    diffs.append(("b", li, idx))
        assert diffs == [("w", 0, (0, 0))]
        assert mutated.weight_scales == reference.weight_scales

    def test_bad_magic(self):
        with pytest.raises(InputError):
            decode_net(b"zz\x01\x02")
