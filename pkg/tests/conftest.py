import numpy as np
import pytest

from rankcal.data import Dataset, FeatureVector


def make_dataset(x: np.ndarray, labels, true_eta=None) -> Dataset:
    """Dense matrix -> Dataset, dropping exact zeros per row."""
    x = np.asarray(x, dtype=np.float64)
    rows = tuple(FeatureVector.from_dense(x[i]) for i in range(x.shape[0]))
    return Dataset(rows, np.asarray(labels, dtype=np.int64), x.shape[1], true_eta)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
