import numpy as np
import pytest

from hankelmusic.signal_model import FrequencyModel, save_model
from hankelmusic.statistics.rvs import make_generator


@pytest.fixture(autouse=True)
def log_to_tmp(tmp_path, monkeypatch):
    """Keep the rotating log file of `set_logger` inside the test folder"""
    monkeypatch.setenv("XDG_CACHE_HOME", str(tmp_path))


@pytest.fixture
def rng():
    return make_generator(1234, 0)


@pytest.fixture
def three_tones():
    """Three well separated tones with distinct amplitudes"""
    return FrequencyModel(
        np.array([0.1, 0.37, 0.72]),
        np.array([1.0, 0.5 + 0.5j, -2.0]),
    )


@pytest.fixture
def model_file(tmp_path, three_tones):
    fname = tmp_path / "model.json"
    save_model(str(fname), three_tones, 64)
    return str(fname)
