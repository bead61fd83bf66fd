"""Widely-linear impairment simulation and model-based compensation."""

__version__ = "0.1.0"

from .augmented import (AllocationMatrix, extract, extract_complement, from_augmented,
                        full_allocation, make_allocation, to_augmented, underline)
from .bench import compute_mse, compute_ser, run_scenario
from .channel import ChannelModel, accumulated_transfer, clairvoyant_mse, layer_chain, propagate
from .constellation import Constellation, draw_symbols, get_constellation, make_psk, make_square_qam
from .errors import (BenchmarkError, ConfigurationError, NotIsomorphicError, ShapeError,
                     SingularLayerError, TrainingError)
from .layers import AWGN, CFO, FIR, IQImbalance, QSPhaseNoise, WienerPhaseNoise
from .network import CompensationNetwork, CompLayer, build_mirror, detect
from .scenario import Scenario, load_scenario
from .trainer import LMConfig, TrainReport, lm_minimize, semi_supervised_train, supervised_train
