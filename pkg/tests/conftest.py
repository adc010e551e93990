import numpy as np
import pytest

from nomfsim.model import imc
from nomfsim.model.frame import EbbiFrame
from nomfsim.model.geometry import SensorGeometry


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20231)


@pytest.fixture
def make_frame(rng):
    """Random frames of the given size and density of ones"""

    def make(width: int = 32, height: int = 32, density: float = 0.5) -> EbbiFrame:
        return EbbiFrame.from_array(rng.random((height, width)) < density)

    return make


@pytest.fixture
def make_margin_frame(rng):
    """Frames whose 3x3 tiles all hold 0, 1, 2, 7, 8 or 9 ones, i.e. a kernel margin of at least 5"""

    def make(tiles_x: int = 10, tiles_y: int = 8) -> EbbiFrame:
        bits = np.zeros((3 * tiles_y, 3 * tiles_x), dtype=np.uint8)
        for ty in range(tiles_y):
            for tx in range(tiles_x):
                k = rng.choice([0, 1, 2, 7, 8, 9])
                tile = np.zeros(9, dtype=np.uint8)
                tile[rng.choice(9, size=k, replace=False)] = 1
                bits[3 * ty:3 * ty + 3, 3 * tx:3 * tx + 3] = tile.reshape(3, 3)
        return EbbiFrame.from_array(bits)

    return make


@pytest.fixture
def small_geometry() -> SensorGeometry:
    return SensorGeometry(64, 48)


@pytest.fixture(scope='session')
def calibrated() -> imc.MismatchModel:
    return imc.calibrate_mismatch(imc.DEFAULT_TARGETS, imc.MismatchModel(sigma_c_rel=0.01))
