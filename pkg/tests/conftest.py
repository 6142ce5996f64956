import numpy as np
import pytest
import skimage.data as skdata


def _unit(img):
    return np.asarray(img, dtype=np.float64) / 255.0


@pytest.fixture(scope="session")
def gray_images():
    """Three 512x512 grayscale test planes."""
    return {
        "camera": _unit(skdata.camera()),
        "astronaut_g": _unit(skdata.astronaut()[..., 1]),
        "coffee_r": _unit(skdata.coffee()[:400, 50:562, 0]),
    }


@pytest.fixture(scope="session")
def rgb_image():
    return _unit(skdata.chelsea())


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(1234))
