import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from pplr.families import Dataset, Family

from oracles import standardized_design


@pytest.fixture
def rng():
    return np.random.default_rng(20240831)


def _template(p, n, delta):
    beta = np.zeros(p)
    beta[0] = delta / np.sqrt(n)
    signals = (3.0, 1.5, 2.0, 1.0)[: max(p - 1, 0)]
    beta[1:1 + len(signals)] = signals
    return beta


def make_linear(rng, n=100, p=11, delta=0.0, names=None):
    X = standardized_design(rng, n, p)
    beta = _template(p, n, delta)
    y = X @ beta + rng.standard_normal(n)
    y -= y.mean()
    return Dataset(X, y, Family.GAUSSIAN, names=names), beta


def make_logistic(rng, n=200, p=11, delta=0.0):
    X = standardized_design(rng, n, p)
    beta = _template(p, n, delta)
    prob = 1.0 / (1.0 + np.exp(-(X @ beta)))
    y = (rng.random(n) < prob).astype(float)
    return Dataset(X, y, Family.LOGISTIC), beta
