import numpy as np
import pytest

from modeseek.density import DataSet, DensityModel
from modeseek.kernels import get_kernel

CONVEX_KERNELS = ["gaussian", "epanechnikov", "biweight", "triweight", "cauchy", "logistic", "cosine", "threehalves"]
SMOOTH_KERNELS = ["gaussian", "biweight", "triweight", "cauchy", "logistic"]


def random_model(rng, kernel, n=None, d=None, weights=False, bandwidths=False, h=None):
    n = n or int(rng.integers(1, 15))
    d = d or int(rng.integers(1, 4))
    pts = rng.uniform(-2.0, 2.0, size=(n, d))
    w = rng.uniform(0.2, 3.0, size=n) if weights else None
    b = rng.uniform(0.5, 2.0, size=n) if bandwidths else None
    h = h if h is not None else float(rng.uniform(0.6, 2.0))
    return DensityModel(DataSet(pts, w, b), get_kernel(kernel), h)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def gauss_pair():
    return DensityModel(DataSet([0.95, -0.95]), get_kernel("gaussian"), 1.0, normalized=True)
