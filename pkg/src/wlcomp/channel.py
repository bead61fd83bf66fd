"""Forward simulation of a layered channel and the clairvoyant reference."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .augmented import to_augmented
from .errors import ConfigurationError, SingularLayerError
from .layers import AWGN, Layer


def noise_variance_from_snr(snr_db: float) -> float:
    """Noise variance for a unit-power constellation at ``snr_db``."""
    return float(10.0 ** (-snr_db / 10.0))


def snr_from_noise_variance(variance: float) -> float:
    return float(-10.0 * np.log10(variance))


@dataclass(frozen=True)
class ChannelModel:
    """Ordered widely-linear layers followed by additive white noise.

    ``layers`` holds ``(layer, params)`` pairs in propagation order.
    Stochastic layers (``layer.trainable`` false, e.g. Wiener phase noise)
    carry ``None`` as params and are redrawn on every :meth:`propagate`.
    """

    layers: tuple = ()
    noise_variance: float = 0.0

    def __post_init__(self):
        layers = []
        for item in self.layers:
            layer, params = item
            if isinstance(layer, AWGN):
                raise ConfigurationError("noise is set through noise_variance, not as a layer")
            if layer.trainable:
                params = layer.check_params(params)
                params.setflags(write=False)
            layers.append((layer, params))
        object.__setattr__(self, "layers", tuple(layers))
        if self.noise_variance < 0:
            raise ConfigurationError("noise variance must be >= 0")

    @classmethod
    def from_layers(cls, items):
        """Build from a list that may end with an :class:`AWGN` layer."""
        items = list(items)
        variance = 0.0
        for i, (layer, _) in enumerate(items):
            if isinstance(layer, AWGN):
                if i != len(items) - 1:
                    raise ConfigurationError("the noise layer must come last")
                variance = layer.variance
        items = [it for it in items if not isinstance(it[0], AWGN)]
        return cls(tuple(items), variance)

    @property
    def is_deterministic(self) -> bool:
        return all(layer.trainable for layer, _ in self.layers)

    @property
    def n_params(self) -> int:
        return sum(layer.n_params for layer, _ in self.layers)

    def with_noise(self, variance: float) -> "ChannelModel":
        return replace(self, noise_variance=float(variance))

    def with_snr(self, snr_db: float) -> "ChannelModel":
        return self.with_noise(noise_variance_from_snr(snr_db))

    def realize(self, n: int, rng) -> "ChannelModel":
        """Draw every stochastic layer once and pin it as a fixed rotation."""
        layers = []
        for layer, params in self.layers:
            if layer.trainable:
                layers.append((layer, params))
            else:
                layers.append(layer.realize(n, rng))
        return replace(self, layers=tuple(layers))

    def noiseless_output(self, x0, rng=None):
        x = np.asarray(x0, dtype=float)
        for layer, params in self.layers:
            if layer.trainable:
                x = layer.transfer(params, x)
            else:
                if rng is None:
                    raise ConfigurationError(f"stochastic {layer.name} layer needs an rng")
                x = layer.apply(x, rng)
        return x

    def propagate(self, s, rng=None) -> np.ndarray:
        """Received augmented block for transmitted complex symbols ``s``."""
        rng = np.random.default_rng(rng)
        x = self.noiseless_output(to_augmented(np.asarray(s, dtype=complex)), rng)
        return AWGN(self.noise_variance).apply(x, rng)

    def accumulated_transfer(self, n: int) -> np.ndarray:
        """Dense ``F_L ... F_1`` for block length ``n``."""
        if not self.is_deterministic:
            raise ConfigurationError("pin stochastic layers with realize() first")
        f = np.eye(2 * n)
        for layer, params in self.layers:
            f = layer.transfer_matrix(params, n) @ f
        return f

    def clairvoyant_mse(self, n: int) -> float:
        """Expected per-symbol MSE of exact zero-forcing compensation,
        ``sigma^2 / (2N) * trace(F^-1 F^-T)``."""
        f = self.accumulated_transfer(n)
        try:
            finv = np.linalg.inv(f)
        except np.linalg.LinAlgError as exc:
            raise SingularLayerError("accumulated transfer matrix is singular") from exc
        if not np.all(np.isfinite(finv)) or np.linalg.cond(f) > 1e14:
            raise SingularLayerError("accumulated transfer matrix is singular")
        return float(self.noise_variance / (2 * n) * np.sum(finv * finv))


def propagate(model: ChannelModel, s, rng=None):
    return model.propagate(s, rng)


def accumulated_transfer(model: ChannelModel, n: int):
    return model.accumulated_transfer(n)


def clairvoyant_mse(model: ChannelModel, n: int) -> float:
    return model.clairvoyant_mse(n)


def layer_chain(*items: tuple[Layer, object]) -> ChannelModel:
    """Shorthand: ``layer_chain((FIR(8), h), (CFO(), [0.005]), ...)``."""
    return ChannelModel.from_layers(items)
