import numpy as np
import pytest

from topocnn import build_model, generate_dataset, write_dataset
from topocnn.simp import Preset

TINY_WIDTHS = (2, 4, 8)
SMALL_SIDE = 20
SMALL_MAXIT = 25
SMALL_SWEEP = dict(vf_start=0.3, vf_end=0.6, vf_step=0.1)


def pytest_addoption(parser):
    parser.addoption(
        "--run-slow", action="store_true", default=False, help="run the slow tests"
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="Requires --run-slow.")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    """A seeded random generator"""
    yield np.random.default_rng(1234)


@pytest.fixture
def tiny_model():
    """A 20x20 encoder-decoder with 2, 4 and 8 channels"""
    yield build_model(0, SMALL_SIDE, TINY_WIDTHS, seed=0)


@pytest.fixture(scope="session")
def small_dataset():
    """Four optimized 20x20 cantilever designs at volume fractions 0.3 to 0.6"""
    yield generate_dataset(
        Preset.CANTILEVER_END_LOAD,
        SMALL_SIDE,
        SMALL_SIDE,
        **SMALL_SWEEP,
        seed=0,
        maxit=SMALL_MAXIT,
    )


@pytest.fixture(scope="session")
def small_dataset_dir(small_dataset, tmp_path_factory):
    """The small dataset written to disk"""
    root = tmp_path_factory.mktemp("cantilever-end")
    write_dataset(small_dataset, root)
    yield root
