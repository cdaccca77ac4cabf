import numpy as np
import pytest

from tgextrap.extrapolation import Window
from tgextrap.problems import LinearProcess, make_contractive_op


def linear_window(seed, shape=(3, 2), width=3, rho=0.8, skip=0):
    """Window from a random contractive process, with the process itself."""
    rng = np.random.default_rng(seed)
    proc = LinearProcess(make_contractive_op(shape, rho, seed), rng.standard_normal(shape))
    x = rng.standard_normal(shape)
    terms = [x]
    for k in range(skip + width + 1):
        terms.append(proc(terms[-1], k))
    return Window.from_sequence(terms, skip, width), proc


@pytest.fixture
def scalar_window():
    return Window((np.array(0.0), np.array(1.0), np.array(1.5)))
