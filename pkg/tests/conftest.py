import numpy as np
import pytest

from g2kit.g2core import standard_structure


@pytest.fixture(scope="session")
def st():
    return standard_structure()


@pytest.fixture()
def rng():
    return np.random.default_rng(20260823)


@pytest.fixture(scope="session")
def data_dir():
    from pathlib import Path

    import g2kit

    return Path(g2kit.__file__).parent / "data"
