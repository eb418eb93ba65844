import io

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def csv_stream(text: str) -> io.StringIO:
    return io.StringIO(text)


@pytest.fixture
def simple_sample():
    from gradcp import SeriesSample

    return SeriesSample(np.array([0.0, 0.0, 1.0, 1.0]))
