import numpy as np
import pytest

from bmstream import ImagePlane, RgbImage, rgb_to_luma


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def astronaut_rgb() -> RgbImage:
    from skimage import data

    return RgbImage(data.astronaut())


@pytest.fixture(scope="session")
def astronaut_luma(astronaut_rgb) -> ImagePlane:
    return rgb_to_luma(astronaut_rgb)


@pytest.fixture(scope="session")
def astronaut_crop_256(astronaut_luma) -> ImagePlane:
    return ImagePlane(astronaut_luma.pixels[100:356, 120:376])


def random_plane(rng, height, width) -> ImagePlane:
    return ImagePlane(rng.integers(0, 256, size=(height, width)))
