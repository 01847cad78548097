import numpy as np
import pytest

from cxdenoise.signal import StftConfig
from cxdenoise.swin import SwinConfig


def tiny_swin_config(**kw) -> SwinConfig:
    base = dict(image_size=64, embed_dim=8, window_size=4, heads=(1, 2, 2, 4))
    base.update(kw)
    return SwinConfig(**base)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_cfg():
    return tiny_swin_config()


@pytest.fixture
def tiny_stft():
    return StftConfig.for_image_size(64)
