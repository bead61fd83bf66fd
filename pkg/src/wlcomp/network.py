"""Model-based compensation network.

The network mirrors a channel: compensation layer ``l`` undoes channel layer
``L - l + 1``. It is followed by a hard-decision stage that projects every
real coordinate onto the constellation levels.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .augmented import AllocationMatrix, extract, from_augmented
from .channel import ChannelModel
from .constellation import Constellation
from .errors import ConfigurationError, ShapeError
from .layers import Layer


@dataclass
class CompLayer:
    layer: Layer
    params: np.ndarray
    frozen: bool = False

    def __post_init__(self):
        self.params = np.array(self.layer.check_params(self.params), dtype=float)


@dataclass
class ForwardTrace:
    """Layer outputs ``[y_0, y_1, ..., y_L]`` of one forward pass."""

    outputs: list

    @property
    def output(self) -> np.ndarray:
        return self.outputs[-1]


@dataclass
class NetworkJacobian:
    """Jacobian of the pilot residual w.r.t. the trainable parameters.

    ``blocks[l]`` is the column slice owned by layer ``l`` (``None`` for
    frozen layers).
    """

    data: np.ndarray
    blocks: list = field(default_factory=list)


class CompensationNetwork:
    """Ordered compensation layers plus a hard-decision detector.

    Parameters
    ----------
    layers : list of CompLayer
        In application order (first element sees the received signal).
    constellation : Constellation
    """

    def __init__(self, layers, constellation: Constellation):
        self.layers = list(layers)
        self.constellation = constellation

    def __repr__(self):
        kinds = ", ".join(cl.layer.name + ("*" if cl.frozen else "") for cl in self.layers)
        return f"CompensationNetwork([{kinds}], {self.constellation.name})"

    def copy(self) -> "CompensationNetwork":
        return CompensationNetwork(
            [CompLayer(cl.layer, cl.params.copy(), cl.frozen) for cl in self.layers],
            self.constellation,
        )

    @property
    def n_trainable(self) -> int:
        return sum(cl.layer.n_params for cl in self.layers if not cl.frozen)

    @property
    def theta(self) -> np.ndarray:
        parts = [cl.params for cl in self.layers if not cl.frozen]
        return np.concatenate(parts) if parts else np.zeros(0)

    @theta.setter
    def theta(self, value):
        value = np.asarray(value, dtype=float).ravel()
        if value.size != self.n_trainable:
            raise ShapeError(f"expected {self.n_trainable} parameters, got {value.size}")
        k = 0
        for cl in self.layers:
            if cl.frozen:
                continue
            m = cl.layer.n_params
            cl.params = value[k:k + m].copy()
            k += m

    def forward(self, y0) -> ForwardTrace:
        outputs = [np.asarray(y0, dtype=float)]
        for cl in self.layers:
            outputs.append(cl.layer.compensate(cl.params, outputs[-1]))
        return ForwardTrace(outputs)

    def output(self, y0) -> np.ndarray:
        return self.forward(y0).output

    def detect(self, y_l) -> np.ndarray:
        return detect(y_l, self.constellation)

    def __call__(self, y0) -> np.ndarray:
        """Detected symbols for a received augmented block."""
        return self.detect(self.output(y0))

    def residual(self, y0, pilots, alloc: AllocationMatrix, trace=None) -> np.ndarray:
        """``x_P - (I_2 (x) P) y_L``."""
        pilots = np.asarray(pilots, dtype=float)
        if pilots.size != 2 * alloc.n_pilots:
            raise ShapeError(f"pilot vector has length {pilots.size}, expected {2 * alloc.n_pilots}")
        if trace is None:
            trace = self.forward(y0)
        return pilots - extract(alloc, trace.output)

    def jacobian(self, trace: ForwardTrace, alloc: AllocationMatrix) -> NetworkJacobian:
        """Backpropagated Jacobian of :meth:`residual`.

        Starts from ``B = -(I_2 (x) P)`` (``2N_p`` rows) and walks the layers
        backwards: ``J_l = B L_l`` then ``B <- B H_l``.
        """
        n2 = trace.outputs[0].shape[-1]
        if n2 != 2 * alloc.n:
            raise ShapeError(f"trace length {n2} does not match allocation over {alloc.n} samples")
        rows = alloc.augmented_indices()
        b = np.zeros((rows.size, n2))
        b[np.arange(rows.size), rows] = -1.0

        offsets, k = [], 0
        for cl in self.layers:
            if cl.frozen:
                offsets.append(None)
            else:
                offsets.append(slice(k, k + cl.layer.n_params))
                k += cl.layer.n_params
        jac = np.zeros((rows.size, k))
        first_trainable = next((i for i, o in enumerate(offsets) if o is not None), len(offsets))

        for i in range(len(self.layers) - 1, first_trainable - 1, -1):
            cl = self.layers[i]
            if offsets[i] is not None:
                local = cl.layer.local_jacobian(cl.params, trace.outputs[i], trace.outputs[i + 1])
                jac[:, offsets[i]] = b @ local
            if i > first_trainable:
                b = cl.layer.compensate_t(cl.params, b)
        return NetworkJacobian(jac, offsets)


def detect(y_l, constellation: Constellation) -> np.ndarray:
    """Project the compensated block onto the alphabet and return complex
    symbols."""
    return constellation.project(from_augmented(y_l))


def build_mirror(model: ChannelModel, constellation: Constellation) -> CompensationNetwork:
    """Clairvoyant network: reversed layer order, each layer set to undo its
    channel counterpart exactly."""
    if not model.is_deterministic:
        raise ConfigurationError("pin stochastic layers with ChannelModel.realize() first")
    layers = [CompLayer(layer, layer.mirror_params(params)) for layer, params in reversed(model.layers)]
    return CompensationNetwork(layers, constellation)

