import numpy as np
import pytest

from adscreen.errors import NonFiniteValue, ShapeMismatch
from adscreen.nn import (
    AdamState,
    DenseLayer,
    LstmCell,
    adam_update,
    mse_loss,
    softmax,
    softmax_xent,
)
from adscreen.nn import _kernels_py
from adscreen.nn import backend

H_STEP = 1e-6
REL_TOL = 1e-4


def central_diff(f, arr, idx, h=H_STEP):
    orig = arr[idx]
    arr[idx] = orig + h
    up = f()
    arr[idx] = orig - h
    down = f()
    arr[idx] = orig
    return (up - down) / (2 * h)


def max_rel_error(f, arrays_and_grads, rng, samples=25):
    worst = 0.0
    for arr, grad in arrays_and_grads:
        # coordinates with gradients below the central-difference noise floor
        # (~|loss| * eps / h) cannot be compared relatively; skip them
        floor = 1e-4 * (1.0 + float(np.max(np.abs(grad))))
        for _ in range(samples):
            idx = tuple(int(rng.integers(0, s)) for s in arr.shape)
            fd = central_diff(f, arr, idx)
            if max(abs(fd), abs(grad[idx])) < floor:
                continue
            denom = max(abs(fd), abs(grad[idx]))
            worst = max(worst, abs(fd - grad[idx]) / denom)
    return worst


class TestDense:
    def test_identity(self):
        layer = DenseLayer(2, 2, "linear")
        layer.w[...] = np.eye(2)
        out, _ = layer.forward([[3.0, -1.0]])
        np.testing.assert_allclose(out, [[3.0, -1.0]])

    def test_relu_gate(self):
        layer = DenseLayer(2, 2, "relu")
        layer.w[...] = np.eye(2)
        out, cache = layer.forward([[2.0, -5.0]])
        np.testing.assert_allclose(out, [[2.0, 0.0]])
        _, dx = layer.backward(cache, np.array([[1.0, 1.0]]))
        np.testing.assert_allclose(dx, [[1.0, 0.0]])

    def test_shape_mismatch(self):
        layer = DenseLayer(3, 2, "linear")
        with pytest.raises(ShapeMismatch):
            layer.forward(np.zeros((1, 4)))

    def test_nonfinite_detected(self):
        layer = DenseLayer(2, 2, "linear")
        layer.w[0, 0] = np.inf
        with pytest.raises(NonFiniteValue):
            layer.forward(np.ones((1, 2)))

    @pytest.mark.parametrize("activation", ["linear", "relu", "sigmoid", "tanh", "softmax"])
    @pytest.mark.parametrize("seed", range(4))
    def test_gradients(self, activation, seed):
        rng = np.random.default_rng(seed * 13 + 1)
        layer = DenseLayer(4, 3, activation, rng)
        x = rng.normal(size=(5, 4))
        proj = rng.normal(size=(5, 3))

        def loss():
            out, _ = layer.forward(x)
            return float(np.sum(out * proj))

        out, cache = layer.forward(x)
        (dw, db), dx = layer.backward(cache, proj)
        err = max_rel_error(
            loss, [(layer.w, dw), (layer.b, db), (x, dx)], rng, samples=15
        )
        assert err < REL_TOL


class TestLstm:
    def test_zero_fixed_point(self):
        cell = LstmCell(3, 4)
        h, _ = cell.forward(np.zeros((2, 8, 3)))
        np.testing.assert_allclose(h, 0.0)

    def test_deterministic(self):
        rng = np.random.default_rng(0)
        cell = LstmCell(3, 4, rng)
        x = np.tile(np.array([0.0, 0.0, 1.0]), (1, 32, 1))
        h1, _ = cell.forward(x)
        h2, _ = cell.forward(x.copy())
        np.testing.assert_array_equal(h1, h2)

    @pytest.mark.parametrize("seed", range(6))
    def test_gradients(self, seed):
        rng = np.random.default_rng(100 + seed)
        cell = LstmCell(3, 8, rng)
        x = np.ascontiguousarray(rng.normal(size=(4, 32, 3)))
        proj = rng.normal(size=(4, 8))

        def loss():
            h, _ = cell.forward(x)
            return float(np.sum(h * proj))

        h, cache = cell.forward(x)
        (dwx, dwh, db), dx = cell.backward(cache, proj)
        err = max_rel_error(
            loss,
            [(cell.wx, dwx), (cell.wh, dwh), (cell.b, db), (x, dx)],
            rng,
            samples=12,
        )
        assert err < REL_TOL

    def test_compiled_matches_pure(self):
        if not backend.COMPILED:
            pytest.skip("compiled kernels unavailable")
        rng = np.random.default_rng(42)
        B, T, I, H = 5, 16, 3, 7
        wx = rng.normal(size=(4 * H, I))
        wh = rng.normal(size=(4 * H, H)) * 0.3
        b = rng.normal(size=4 * H)
        x = rng.normal(size=(B, T, I))

        def run(mod):
            gates = np.empty((B, T, 4 * H))
            c = np.empty((B, T, H))
            h = np.empty((B, T, H))
            mod.lstm_forward_kernel(x, wx, wh, b, gates, c, h)
            dh = rng2.normal(size=(B, H))
            dwx = np.zeros_like(wx)
            dwh = np.zeros_like(wh)
            db = np.zeros_like(b)
            dx = np.empty_like(x)
            mod.lstm_backward_kernel(x, wx, wh, gates, c, h, dh, dwx, dwh, db, dx)
            return h, dwx, dwh, db, dx

        rng2 = np.random.default_rng(1)
        compiled = run(backend._impl if backend.COMPILED else _kernels_py)
        rng2 = np.random.default_rng(1)
        pure = run(_kernels_py)
        for a, b_ in zip(compiled, pure):
            np.testing.assert_allclose(a, b_, atol=1e-12)


class TestSoftmaxXent:
    def test_uniform(self):
        loss, _ = softmax_xent([[0.0, 0.0]], [[1.0, 0.0]])
        assert loss == pytest.approx(np.log(2.0), abs=1e-12)

    def test_saturated_correct(self):
        loss, grad = softmax_xent([[1000.0, 0.0]], [[1.0, 0.0]])
        assert loss == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(grad, 0.0, atol=1e-12)

    def test_rows_stochastic(self):
        rng = np.random.default_rng(1)
        p = softmax(rng.normal(size=(100, 2)) * 10)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_gradient(self, seed):
        rng = np.random.default_rng(seed)
        logits = rng.normal(size=(8, 2))
        labels = np.zeros((8, 2))
        labels[np.arange(8), rng.integers(0, 2, size=8)] = 1.0

        def loss():
            return softmax_xent(logits, labels)[0]

        _, grad = softmax_xent(logits, labels)
        err = max_rel_error(loss, [(logits, grad)], rng, samples=16)
        assert err < REL_TOL


class TestMse:
    def test_zero(self):
        loss, grad = mse_loss([1.0, 2.0], [1.0, 2.0])
        assert loss == 0.0
        np.testing.assert_array_equal(grad, 0.0)

    def test_hand_case(self):
        loss, _ = mse_loss([20.0, 25.0], [22.0, 23.0])
        assert loss == pytest.approx(4.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_gradient(self, seed):
        rng = np.random.default_rng(seed + 7)
        pred = rng.normal(size=16)
        target = rng.normal(size=16)

        def loss():
            return mse_loss(pred, target)[0]

        _, grad = mse_loss(pred, target)
        err = max_rel_error(loss, [(pred, grad)], rng, samples=16)
        assert err < 1e-6 * 100  # spec bound for mse is 1e-6 on abs fd error
        for idx in range(16):
            fd = central_diff(loss, pred, (idx,))
            assert abs(fd - grad[idx]) < 1e-6


class TestAdam:
    def test_zero_gradient_noop(self):
        p = np.array([1.0, -2.0])
        state = AdamState.for_params([p], lr=0.01)
        adam_update([p], [np.zeros(2)], state)
        np.testing.assert_array_equal(p, [1.0, -2.0])
        assert state.t == 1

    def test_first_step_hand_value(self):
        # t=1, g=1: m_hat = v_hat = 1, update = -lr / (1 + eps)
        p = np.array([0.0])
        state = AdamState.for_params([p], lr=0.01)
        adam_update([p], [np.ones(1)], state)
        expected = -0.01 * 1.0 / (1.0 + 1e-8)
        assert p[0] == pytest.approx(expected, abs=1e-15)

    def test_matches_reference_loop_on_quadratic(self):
        # loss = (p - 3)^2 on a scalar, independently coded Adam recurrence
        lr, b1, b2, eps = 0.05, 0.9, 0.999, 1e-8
        p_ref, m, v = 0.0, 0.0, 0.0
        trace_ref = []
        for t in range(1, 101):
            g = 2 * (p_ref - 3.0)
            m = b1 * m + (1 - b1) * g
            v = b2 * v + (1 - b2) * g * g
            p_ref -= lr * (m / (1 - b1**t)) / (np.sqrt(v / (1 - b2**t)) + eps)
            trace_ref.append(p_ref)

        p = np.array([0.0])
        state = AdamState.for_params([p], lr=lr)
        trace = []
        for _ in range(100):
            g = 2 * (p - 3.0)
            adam_update([p], [g], state)
            trace.append(p[0])
        np.testing.assert_allclose(trace, trace_ref, atol=1e-12)
        # monotone approach toward the minimizer
        dist = np.abs(np.array(trace) - 3.0)
        assert dist[-1] < dist[0]

    def test_shape_guard(self):
        p = np.zeros(2)
        state = AdamState.for_params([p], lr=0.1)
        with pytest.raises(ShapeMismatch):
            adam_update([p], [np.zeros(3)], state)
