"""Scenario files.

A scenario is a YAML mapping (``format_version: 1``) with scalar settings
and two ordered layer lists, ``channel`` and ``network``::

    format_version: 1
    name: simple
    constellation: qam16        # qam4 | qam16 | qam64 | qam256 | psk<M>
    n: 500                      # block length
    n_pilots: 50
    allocation: preamble        # preamble | periodic | mixed
    preamble_fraction: 0.5      # mixed only
    sweep: snr                  # snr | pilots
    grid: [0, 10, 20, 30, 40]   # SNR values in dB (sweep: snr)
    snr_db: 30                  # fixed SNR (sweep: pilots)
    pilots_grid: [20, 50, 80]   # pilot counts (sweep: pilots)
    trials: 100
    seed: 2021
    kp: 10                      # value substituted for ``blocks: kp``
    truncate: null              # train on the first N_t samples only
    dense_fir: false            # invert FIR layers densely
    methods: [clairvoyant, phycom1, phycom2]
    channel:
      - {kind: fir, taps: ["0.9+0.1j", "0.3+0.3j"]}
      - {kind: cfo, params: [0.005]}
      - {kind: iq, params: [1.8, 0.1, 0.13, 0.8]}   # or a1/a2 complex
      - {kind: wiener, variance: 3.1416e-4}
      - {kind: qspn, blocks: 4, params: [0, 0.1, 0.2, 0.3]}
    network:                    # application order
      - {kind: iq, init: zeros}             # zeros | identity | [values]
      - {kind: cfo, init: zeros}
      - {kind: fir, taps: 8, init: identity, frozen: false}
      - {kind: qspn, blocks: kp, init: zeros}
    lm: {max_iterations: 100, ftol: 1.0e-8, xtol: 1.0e-8, gtol: 1.0e-8}

If ``network`` is omitted the channel is mirrored, every layer starting at
identity and Wiener layers replaced by ``kp``-block quasi-static layers.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .channel import ChannelModel
from .constellation import get_constellation
from .errors import ConfigurationError
from .layers import CFO, FIR, IQImbalance, QSPhaseNoise, WienerPhaseNoise
from .network import CompensationNetwork, CompLayer
from .trainer import LMConfig

FORMAT_VERSION = 1
METHODS = ("clairvoyant", "phycom1", "phycom2")
BUILTIN = ("simple", "phase_noise")


def _complex_list(values):
    return np.array([complex(str(v).replace(" ", "")) for v in values])


def _channel_layer(entry):
    kind = entry["kind"].lower()
    if kind == "iq":
        layer = IQImbalance()
        if "params" in entry:
            return layer, np.asarray(entry["params"], dtype=float)
        a1, a2 = _complex_list([entry["a1"], entry["a2"]])
        return layer, IQImbalance.from_complex(a1, a2)
    if kind == "cfo":
        return CFO(), np.asarray(entry["params"], dtype=float)
    if kind == "fir":
        if "taps" in entry and not isinstance(entry["taps"], int):
            h = _complex_list(entry["taps"])
            return FIR(h.size), FIR.params_from_taps(h)
        p = np.asarray(entry["params"], dtype=float)
        return FIR(p.size // 2), p
    if kind == "qspn":
        p = np.asarray(entry["params"], dtype=float)
        return QSPhaseNoise(int(entry.get("blocks", p.size))), p
    if kind == "wiener":
        return WienerPhaseNoise(float(entry["variance"])), None
    raise ConfigurationError(f"unknown channel layer kind {kind!r}")


def _initial(layer, init):
    if init is None or init == "identity":
        return layer.identity_params()
    if init == "zeros":
        return layer.zero_params()
    return np.asarray(init, dtype=float)


@dataclass(frozen=True)
class Scenario:
    name: str
    channel: tuple
    network: tuple | None = None
    constellation: str = "qam16"
    n: int = 500
    n_pilots: int = 50
    allocation: str = "preamble"
    preamble_fraction: float = 0.5
    sweep: str = "snr"
    grid: tuple = (30,)
    snr_db: float = 30.0
    pilots_grid: tuple = (50,)
    trials: int = 100
    seed: int = 0
    kp: int = 0
    truncate: int | None = None
    dense_fir: bool = False
    methods: tuple = METHODS
    lm: dict = field(default_factory=dict)
    self_training: bool = True
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        if self.format_version != FORMAT_VERSION:
            raise ConfigurationError(f"unsupported scenario format_version {self.format_version}")
        if self.sweep not in ("snr", "pilots"):
            raise ConfigurationError(f"sweep must be 'snr' or 'pilots', got {self.sweep!r}")
        if not self.sweep_values:
            raise ConfigurationError("empty sweep grid")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ConfigurationError(f"unknown methods {sorted(unknown)}")
        self.channel_model()  # validate early

    @property
    def sweep_values(self) -> tuple:
        return tuple(self.grid if self.sweep == "snr" else self.pilots_grid)

    def point(self, x):
        """``(snr_db, n_pilots)`` at sweep value ``x``."""
        return (float(x), self.n_pilots) if self.sweep == "snr" else (self.snr_db, int(x))

    def get_constellation(self):
        return get_constellation(self.constellation)

    def lm_config(self) -> LMConfig:
        return LMConfig(**self.lm)

    def channel_model(self, snr_db=None) -> ChannelModel:
        model = ChannelModel(tuple(_channel_layer(dict(e)) for e in self.channel))
        return model if snr_db is None else model.with_snr(snr_db)

    def _network_entries(self):
        if self.network is not None:
            return [dict(e) for e in self.network]
        entries = []
        for e in reversed(self.channel):
            e = dict(e)
            if e["kind"] == "wiener":
                entries.append({"kind": "qspn", "blocks": "kp"})
            elif e["kind"] == "fir":
                layer, _ = _channel_layer(e)
                entries.append({"kind": "fir", "taps": layer.taps})
            elif e["kind"] == "qspn":
                entries.append({"kind": "qspn", "blocks": int(e.get("blocks", len(e["params"])))})
            else:
                entries.append({"kind": e["kind"]})
        return entries

    def build_network(self) -> CompensationNetwork:
        """Trainable network at its configured starting point."""
        layers = []
        for e in self._network_entries():
            kind = e["kind"].lower()
            if kind == "iq":
                layer = IQImbalance()
            elif kind == "cfo":
                layer = CFO()
            elif kind == "fir":
                layer = FIR(int(e["taps"]), dense=self.dense_fir)
            elif kind == "qspn":
                blocks = self.kp if e.get("blocks") == "kp" else int(e["blocks"])
                if blocks == 0:
                    continue
                layer = QSPhaseNoise(blocks)
            else:
                raise ConfigurationError(f"unknown network layer kind {kind!r}")
            layers.append(CompLayer(layer, _initial(layer, e.get("init")), bool(e.get("frozen", False))))
        return CompensationNetwork(layers, self.get_constellation())

    def with_overrides(self, **kw) -> "Scenario":
        kw = {k: v for k, v in kw.items() if v is not None}
        if "lm" in kw:
            kw["lm"] = {**self.lm, **kw["lm"]}
        return replace(self, **kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("channel", "network"):
            if d[key] is not None:
                d[key] = [dict(e) for e in d[key]]
        for key in ("grid", "pilots_grid", "methods"):
            d[key] = list(d[key])
        return d


def _freeze_entries(entries):
    if entries is None:
        return None
    return tuple(dict(e) for e in entries)


def scenario_from_dict(d: dict) -> Scenario:
    d = dict(d)
    if "channel" not in d:
        raise ConfigurationError("scenario has no channel")
    d["channel"] = _freeze_entries(d["channel"])
    d["network"] = _freeze_entries(d.get("network"))
    for key in ("grid", "pilots_grid", "methods"):
        if key in d:
            d[key] = tuple(d[key])
    d["lm"] = dict(d.get("lm") or {})
    known = set(Scenario.__dataclass_fields__)
    extra = set(d) - known
    if extra:
        raise ConfigurationError(f"unknown scenario keys {sorted(extra)}")
    return Scenario(**d)


def load_scenario(source) -> Scenario:
    """Load a scenario from a YAML path or a builtin name (``simple``,
    ``phase_noise``)."""
    text = None
    if isinstance(source, str) and source in BUILTIN:
        text = resources.files("wlcomp").joinpath(f"scenarios/{source}.yaml").read_text()
    else:
        path = Path(source)
        if not path.exists():
            raise ConfigurationError(f"no scenario file or builtin named {source!r}")
        text = path.read_text()
    return scenario_from_dict(yaml.safe_load(text))
