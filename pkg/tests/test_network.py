import numpy as np
import pytest

from conftest import central_diff, simple_channel, rel_err
from wlcomp.augmented import full_allocation, make_allocation, to_augmented
from wlcomp.channel import ChannelModel
from wlcomp.constellation import make_square_qam
from wlcomp.errors import ConfigurationError, ShapeError
from wlcomp.layers import CFO, FIR, IQImbalance, QSPhaseNoise, WienerPhaseNoise
from wlcomp.network import CompensationNetwork, CompLayer, build_mirror, detect

QAM16 = make_square_qam(16)


def naive_jacobian(net, y0, alloc):
    """-(I_2 (x) P) H_L ... H_{l+1} L_l per trainable layer, all dense."""
    n = alloc.n
    sel = np.kron(np.eye(2), alloc.dense())
    outputs = [np.asarray(y0, float)]
    for cl in net.layers:
        outputs.append(cl.layer.compensation_matrix(cl.params, n) @ outputs[-1])
    blocks = []
    for i, cl in enumerate(net.layers):
        if cl.frozen:
            continue
        down = np.eye(2 * n)
        for later in net.layers[i + 1:]:
            down = later.layer.compensation_matrix(later.params, n) @ down
        local = cl.layer.local_jacobian(cl.params, outputs[i])
        blocks.append(-sel @ down @ local)
    return np.hstack(blocks)


def random_net(rng, kinds, frozen=()):
    layers = []
    for i, kind in enumerate(kinds):
        if kind == "iq":
            layer, p = IQImbalance(), [1, 0, 0, 1] + 0.3 * rng.standard_normal(4)
        elif kind == "cfo":
            layer, p = CFO(), 0.02 * rng.standard_normal(1)
        elif kind == "fir":
            layer = FIR(int(rng.integers(1, 6)))
            p = 0.3 * rng.standard_normal(layer.n_params)
            p[0] += 1.0
        else:
            layer = QSPhaseNoise(int(rng.integers(1, 5)))
            p = rng.uniform(-1, 1, layer.n_params)
        layers.append(CompLayer(layer, p, frozen=i in frozen))
    return CompensationNetwork(layers, QAM16)


def fd_jacobian(net, y0, pilots, alloc):
    theta0 = net.theta

    def f(theta):
        net.theta = theta
        return net.residual(y0, pilots, alloc)

    jac = central_diff(f, theta0)
    net.theta = theta0
    return jac


class TestForward:
    def test_identity_params(self, rng):
        layers = [CompLayer(l, l.identity_params()) for l in (IQImbalance(), CFO(), FIR(3), QSPhaseNoise(2))]
        y0 = rng.standard_normal(16)
        np.testing.assert_allclose(CompensationNetwork(layers, QAM16).output(y0), y0)

    def test_dense_oracle(self, rng):
        net = random_net(rng, ["iq", "cfo", "fir", "qspn"])
        y0 = rng.standard_normal(16)
        h = np.eye(16)
        for cl in net.layers:
            h = cl.layer.compensation_matrix(cl.params, 8) @ h
        np.testing.assert_allclose(net.output(y0), h @ y0, atol=1e-12)

    def test_trace_consistency(self, rng):
        net = random_net(rng, ["iq", "fir", "cfo"])
        trace = net.forward(rng.standard_normal(20))
        for i, cl in enumerate(net.layers):
            np.testing.assert_array_equal(trace.outputs[i + 1], cl.layer.compensate(cl.params, trace.outputs[i]))

    def test_theta_round_trip(self, rng):
        net = random_net(rng, ["iq", "cfo", "fir"], frozen={1})
        theta = rng.standard_normal(net.n_trainable)
        net.theta = theta
        np.testing.assert_array_equal(net.theta, theta)
        assert net.n_trainable == 4 + net.layers[2].layer.n_params
        with pytest.raises(ShapeError):
            net.theta = np.zeros(net.n_trainable + 1)


class TestMirror:
    def test_simple_chain_layer_order(self):
        net = build_mirror(simple_channel(), QAM16)
        assert [cl.layer.name for cl in net.layers] == ["iq", "cfo", "fir"]

    def test_cfo_negated(self):
        net = build_mirror(ChannelModel(((CFO(), [0.005]),)), QAM16)
        np.testing.assert_array_equal(net.layers[0].params, [-0.005])

    def test_noiseless_round_trip(self, rng):
        s = QAM16.draw(100, rng)
        model = simple_channel()
        net = build_mirror(model, QAM16)
        y0 = model.propagate(s)
        assert np.max(np.abs(net.output(y0) - to_augmented(s))) < 1e-10
        np.testing.assert_array_equal(net(y0), s)

    @pytest.mark.parametrize("strategy", ["preamble", "periodic", "mixed"])
    def test_clairvoyant_residual_zero(self, strategy, rng):
        model = ChannelModel(((IQImbalance(), [0.9, 0.4, -0.4, 0.6]), (WienerPhaseNoise(1e-3), None),
                              (FIR(2), FIR.params_from_taps([1, 0.3j])))).realize(60, rng)
        s = QAM16.draw(60, rng)
        alloc = make_allocation(strategy, 60, 12)
        net = build_mirror(model, QAM16)
        y0 = model.propagate(s)
        assert np.max(np.abs(net.residual(y0, to_augmented(s[alloc.indices]), alloc))) < 1e-10
        np.testing.assert_array_equal(net(y0), s)

    def test_requires_pinned_noise(self):
        with pytest.raises(ConfigurationError):
            build_mirror(ChannelModel(((WienerPhaseNoise(1e-3), None),)), QAM16)


class TestDetect:
    def test_on_constellation(self, rng):
        s = QAM16.draw(50, rng)
        np.testing.assert_array_equal(detect(to_augmented(s), QAM16), s)

    def test_single_coordinate(self):
        assert detect(np.array([0.5, -0.5]), QAM16)[0] == pytest.approx(0.31622777 - 0.31622777j)


class TestResidual:
    def test_full_allocation_identity_net(self, rng):
        net = CompensationNetwork([CompLayer(CFO(), [0.0])], QAM16)
        x0, y0 = rng.standard_normal(12), rng.standard_normal(12)
        np.testing.assert_allclose(net.residual(y0, x0, full_allocation(6)), x0 - y0)

    def test_dense_selection_oracle(self, rng):
        net = random_net(rng, ["iq", "fir"])
        alloc = make_allocation("periodic", 10, 3)
        y0, pilots = rng.standard_normal(20), rng.standard_normal(6)
        sel = np.kron(np.eye(2), alloc.dense())
        np.testing.assert_allclose(net.residual(y0, pilots, alloc), pilots - sel @ net.output(y0))

    def test_pilot_length(self, rng):
        net = random_net(rng, ["cfo"])
        with pytest.raises(ShapeError):
            net.residual(np.zeros(20), np.zeros(5), make_allocation("preamble", 10, 3))


class TestJacobian:
    def test_single_cfo(self, rng):
        net = CompensationNetwork([CompLayer(CFO(), [0.01])], QAM16)
        alloc = make_allocation("periodic", 40, 8)
        y0, pilots = rng.standard_normal(80), rng.standard_normal(16)
        jac = net.jacobian(net.forward(y0), alloc).data
        assert jac.shape == (16, 1)
        assert rel_err(jac, fd_jacobian(net, y0, pilots, alloc)) < 1e-6

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_naive_product(self, seed):
        rng = np.random.default_rng(seed)
        kinds = list(rng.choice(["iq", "cfo", "fir", "qspn"], size=rng.integers(2, 6)))
        net = random_net(rng, kinds)
        n = 16
        alloc = make_allocation("periodic", n, 6)
        y0 = rng.standard_normal(2 * n)
        jac = net.jacobian(net.forward(y0), alloc).data
        np.testing.assert_allclose(jac, naive_jacobian(net, y0, alloc), atol=1e-10)

    def test_simple_mirror_random_theta(self, rng):
        net = random_net(rng, ["iq", "cfo", "fir"])
        alloc = make_allocation("preamble", 64, 50)
        y0 = simple_channel(30).propagate(QAM16.draw(64, rng), rng)
        pilots = rng.standard_normal(100)
        jac = net.jacobian(net.forward(y0), alloc).data
        assert rel_err(jac, fd_jacobian(net, y0, pilots, alloc)) < 1e-6

    def test_frozen_layer_columns(self, rng):
        net = random_net(rng, ["iq", "fir", "cfo"])
        alloc = make_allocation("periodic", 30, 10)
        y0 = rng.standard_normal(60)
        full = net.jacobian(net.forward(y0), alloc)
        net.layers[1].frozen = True
        part = net.jacobian(net.forward(y0), alloc)
        assert part.blocks[1] is None
        np.testing.assert_array_equal(part.data, np.hstack([full.data[:, full.blocks[0]],
                                                            full.data[:, full.blocks[2]]]))

    def test_frozen_leading_layers(self, rng):
        net = random_net(rng, ["fir", "iq", "cfo"], frozen={0, 1})
        alloc = make_allocation("periodic", 20, 5)
        y0, pilots = rng.standard_normal(40), rng.standard_normal(10)
        jac = net.jacobian(net.forward(y0), alloc).data
        assert jac.shape == (10, 1)
        assert rel_err(jac, fd_jacobian(net, y0, pilots, alloc)) < 1e-6

    def test_trace_shape_check(self, rng):
        net = random_net(rng, ["cfo"])
        with pytest.raises(ShapeError):
            net.jacobian(net.forward(np.zeros(10)), make_allocation("preamble", 4, 2))
