import numpy as np
import pytest

from npf.grid import Grid
from npf.nonlocal_op import KernelSpec, NonlocalOperator


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid1():
    return Grid((128,))


@pytest.fixture
def grid2():
    return Grid((16, 24), (2.0, 0.5))


@pytest.fixture
def gauss1(grid1):
    return NonlocalOperator(KernelSpec("gaussian", 0.1, 1.0), grid1)
