"""Nets, trees, stacking, and the deterministic shallow fitter."""

import numpy as np
import pytest

from uaplab import activations as act
from uaplab.errors import DimensionMismatchError, FitSingularError
from uaplab.function_space import GridFunction
from uaplab.network import (
    AffineLayer,
    FeedForwardNet,
    TreeFunction,
    fit_shallow,
    identity_layer,
    net_eval,
    net_from_config,
    net_to_config,
    sparsity,
    stack,
    tree_eval,
)


def single_layer_identity():
    return FeedForwardNet(
        (AffineLayer(np.eye(1), np.zeros(1), False),), act.by_name("relu")
    )


class TestEval:
    def test_identity_single_layer(self):
        net = single_layer_identity()
        xs = np.linspace(-3, 3, 7)[:, None]
        assert np.array_equal(net.sample(xs), xs)

    def test_relu_hidden_example(self):
        # oracle: max(0, 2 - 1) = 1
        net = FeedForwardNet(
            (
                AffineLayer(np.array([[1.0]]), np.array([-1.0]), True),
                AffineLayer(np.array([[1.0]]), np.array([0.0]), False),
            ),
            act.by_name("relu"),
        )
        assert net_eval(net, 2.0) == pytest.approx(1.0)

    def test_dim_mismatch(self):
        net = single_layer_identity()
        with pytest.raises(DimensionMismatchError):
            net.sample(np.zeros((3, 2)))

    def test_final_layer_must_be_affine(self):
        with pytest.raises(ValueError):
            FeedForwardNet(
                (AffineLayer(np.eye(1), np.zeros(1), True),), act.by_name("relu")
            )


class TestSparsity:
    def test_identity(self):
        assert sparsity(AffineLayer(np.eye(3), np.zeros(3), False)) == (3, 0)

    def test_zero(self):
        assert sparsity(AffineLayer(np.zeros((2, 2)), np.zeros(2), False)) == (0, 0)

    def test_diagonal_with_zero(self):
        layer = AffineLayer(np.diag([1.1, 0.0, 2.0]), np.array([0.0, 1.0, 0.0]), False)
        assert sparsity(layer) == (2, 1)


class TestStack:
    def test_empty_stack_identical(self, leaky_shifted):
        net = FeedForwardNet(
            (AffineLayer(np.array([[2.0]]), np.array([0.5]), False),), leaky_shifted
        )
        stacked = stack(net, [])
        xs = np.linspace(-2, 2, 11)[:, None]
        assert np.array_equal(net.sample(xs), stacked.sample(xs))

    def test_single_front_layer(self, leaky_shifted):
        net = FeedForwardNet(
            (AffineLayer(np.array([[2.0]]), np.array([0.5]), False),), leaky_shifted
        )
        stacked = stack(net, [identity_layer(1, bias=1.0)])
        rng = np.random.default_rng(0)
        for x in rng.uniform(-10, 10, 100):
            want = net_eval(net, float(leaky_shifted(x + 1.0)))
            assert net_eval(stacked, x) == pytest.approx(want, abs=1e-12)

    def test_double_stack_equals_concatenation(self, leaky_shifted):
        net = FeedForwardNet(
            (AffineLayer(np.array([[1.0]]), np.array([0.0]), False),), leaky_shifted
        )
        a = identity_layer(1, bias=0.5)
        b = identity_layer(1, bias=2.0)
        twice = stack(stack(net, [a]), [b])
        once = stack(net, [b, a])
        xs = np.random.default_rng(1).uniform(-5, 5, (64, 1))
        assert np.array_equal(twice.sample(xs), once.sample(xs))

    def test_stack_dim_mismatch(self, leaky_shifted):
        net = FeedForwardNet(
            (AffineLayer(np.array([[1.0]]), np.array([0.0]), False),), leaky_shifted
        )
        with pytest.raises(DimensionMismatchError):
            stack(net, [identity_layer(2)])


class TestFitShallow:
    def test_affine_target_easy(self, leaky_shifted):
        target = GridFunction.from_scalar(lambda x: 2 * x + 1, unbounded=True)
        res = fit_shallow(target, 8, leaky_shifted, 1.0, seed=3, ridge=1e-10,
                          grid_points=501)
        assert res.sup_residual < 1e-3

    def test_zero_target_zero_net(self, leaky_shifted):
        res = fit_shallow(GridFunction.zero(), 16, leaky_shifted, 1.0, seed=0,
                          ridge=1e-9, grid_points=301)
        assert res.sup_residual == 0.0
        assert np.all(res.net.layers[1].matrix == 0.0)
        assert np.all(res.net.layers[1].bias == 0.0)

    def test_nested_widths_improve(self, leaky_shifted, sin_fn):
        r1 = fit_shallow(sin_fn, 1, leaky_shifted, 3.0, seed=5, grid_points=601)
        r64 = fit_shallow(sin_fn, 64, leaky_shifted, 3.0, seed=5, grid_points=601)
        assert r64.sup_residual <= r1.sup_residual
        # prefix property: feature 0 identical across widths
        assert np.array_equal(r1.net.layers[0].matrix[0], r64.net.layers[0].matrix[0])
        assert r1.net.layers[0].bias[0] == r64.net.layers[0].bias[0]

    def test_deterministic_bit_identical(self, leaky_shifted, cos_fn):
        a = fit_shallow(cos_fn, 32, leaky_shifted, 2.0, seed=11, grid_points=401)
        b = fit_shallow(cos_fn, 32, leaky_shifted, 2.0, seed=11, grid_points=401)
        for la, lb in zip(a.net.layers, b.net.layers):
            assert np.array_equal(la.matrix, lb.matrix)
            assert np.array_equal(la.bias, lb.bias)

    def test_singular_without_ridge(self, leaky_shifted, sin_fn):
        # more features than training points leaves the gram singular
        with pytest.raises(FitSingularError):
            fit_shallow(sin_fn, 64, leaky_shifted, 1.0, seed=0, ridge=0.0,
                        grid_points=5)

    def test_kink_injection_places_breakpoints(self, leaky_shifted):
        target = GridFunction.from_scalar(lambda x: np.abs(x - 0.7), unbounded=True)
        res = fit_shallow(target, 4, leaky_shifted, 2.0, seed=0,
                          grid_points=801, extra_kinks=[0.7])
        w = res.net.layers[0].matrix[-1, 0]
        b = res.net.layers[0].bias[-1]
        # the injected unit kinks exactly at x = 0.7
        assert (0.0 - b) / w == pytest.approx(0.7, abs=1e-12)
        assert res.sup_residual < 1e-2


class TestTrees:
    def test_empty_tree(self):
        assert tree_eval(TreeFunction(()), 0.3) == 0.0

    def test_membership(self):
        t = TreeFunction(((2.0, 0.0, 1.0),))
        assert tree_eval(t, 0.5) == 2.0

    def test_open_interval_endpoints(self):
        t = TreeFunction(((2.0, 0.0, 1.0),))
        assert tree_eval(t, 1.0) == 0.0
        assert tree_eval(t, 0.0) == 0.0

    def test_piecewise_constant_between_breakpoints(self):
        rng = np.random.default_rng(7)
        terms = []
        for _ in range(8):
            b = rng.uniform(-2, 2)
            terms.append((rng.uniform(-1, 1), b, b + rng.uniform(0.1, 2)))
        t = TreeFunction(tuple(terms))
        bps = t.breakpoints
        for lo, hi in zip(bps, bps[1:]):
            xs = np.linspace(lo + 1e-9, hi - 1e-9, 13)
            vals = t.sample(xs[:, None])[:, 0]
            assert np.max(np.abs(vals - vals[0])) == 0.0

    def test_invalid_term(self):
        with pytest.raises(ValueError):
            TreeFunction(((1.0, 2.0, 1.0),))


class TestSerialization:
    def test_round_trip_builtin_activation(self, leaky_shifted):
        net = FeedForwardNet(
            (
                AffineLayer(np.array([[1.5], [0.5]]), np.array([0.1, -0.2]), True),
                AffineLayer(np.array([[1.0, 2.0]]), np.array([0.0]), False),
            ),
            leaky_shifted,
        )
        back = net_from_config(net_to_config(net))
        xs = np.random.default_rng(0).uniform(-3, 3, (50, 1))
        assert np.array_equal(net.sample(xs), back.sample(xs))

    def test_round_trip_custom_activation(self):
        import math

        custom = act.ActivationSpec(
            "custom",
            [
                act.Branch(-math.inf, 0.0, "affine", (0.3, 0.2)),
                act.Branch(0.0, math.inf, "affine", (1.2, 0.2)),
            ],
        )
        net = FeedForwardNet(
            (
                AffineLayer(np.array([[1.0]]), np.array([0.0]), True),
                AffineLayer(np.array([[1.0]]), np.array([0.0]), False),
            ),
            custom,
        )
        cfg = net_to_config(net)
        assert isinstance(cfg["activation"], dict)
        back = net_from_config(cfg)
        xs = np.linspace(-2, 2, 21)[:, None]
        assert np.array_equal(net.sample(xs), back.sample(xs))
