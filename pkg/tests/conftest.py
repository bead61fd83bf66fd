import numpy as np
import pytest

from wlcomp.augmented import to_augmented
from wlcomp.channel import ChannelModel
from wlcomp.layers import CFO, FIR, IQImbalance

SIMPLE_TAPS = np.array([0.9 + 0.1j, 0.3 + 0.3j, 0.1 + 0.05j, 0.02 + 0.1j,
                      0.1 - 0.05j, 0.02 - 0.1j, 0.1 + 0.03j, 0.04 - 0.012j])
SIMPLE_IQ = np.array([1.8, 0.1, 0.13, 0.8])


def simple_channel(snr_db=None):
    model = ChannelModel((
        (FIR(8), FIR.params_from_taps(SIMPLE_TAPS)),
        (CFO(), [0.005]),
        (IQImbalance(), SIMPLE_IQ),
    ))
    return model if snr_db is None else model.with_snr(snr_db)


def central_diff(fun, theta, rel_step=1e-6):
    """Central finite-difference Jacobian of ``fun`` at ``theta``."""
    theta = np.asarray(theta, dtype=float)
    f0 = fun(theta)
    jac = np.zeros((f0.size, theta.size))
    for k in range(theta.size):
        h = rel_step * max(1.0, abs(theta[k]))
        tp, tm = theta.copy(), theta.copy()
        tp[k] += h
        tm[k] -= h
        jac[:, k] = (fun(tp) - fun(tm)) / (2 * h)
    return jac


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


def random_complex(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def aug_signal(rng):
    return to_augmented(random_complex(rng, 16))
