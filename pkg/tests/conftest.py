from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings, strategies as st

from quadkernel.model import ContinuousModel

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


def make_model(s11, s22, rho, mu1, mu2):
    s12 = rho * np.sqrt(s11 * s22)
    return ContinuousModel([[s11, s12], [s12, s22]], [mu1, mu2])


@st.composite
def stable_models(draw):
    """Stable models with identity reflection (stable iff both drifts are negative)."""
    s11 = draw(st.floats(0.4, 2.5))
    s22 = draw(st.floats(0.4, 2.5))
    rho = draw(st.floats(-0.9, 0.9))
    mu1 = draw(st.floats(-2.5, -0.2))
    mu2 = draw(st.floats(-2.5, -0.2))
    return make_model(s11, s22, rho, mu1, mu2)


def random_models(n, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        out.append(make_model(rng.uniform(0.4, 2.5), rng.uniform(0.4, 2.5), rng.uniform(-0.9, 0.9),
                              rng.uniform(-2.5, -0.2), rng.uniform(-2.5, -0.2)))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
