import numpy as np
import pytest
from hypothesis import strategies as st

from ilcdob import lti_core as lti
from ilcdob.lti_core import TransferFunction
from ilcdob.models import DEFAULT_SPECS, build_system

TS = 0.02


def random_roots(rng, n, rmax=0.9):
    """n roots inside |z| < rmax, closed under conjugation."""
    out = []
    while len(out) < n:
        r = rmax * np.sqrt(rng.uniform(0, 1))
        th = rng.uniform(0, np.pi)
        if len(out) + 2 <= n and rng.uniform() < 0.5:
            z = r * np.exp(1j * th)
            out += [z, np.conj(z)]
        else:
            out.append(rng.choice([-1, 1]) * r)
    return np.array(out, dtype=complex)


def random_tf(rng, ts=TS, max_order=4, max_lag=2, rmax=0.9, zmax=None):
    nz = int(rng.integers(0, max_order + 1))
    npole = int(rng.integers(0, max_order + 1))
    zeros = random_roots(rng, nz, rmax if zmax is None else zmax)
    poles = random_roots(rng, npole, rmax)
    gain = float(rng.choice([-1, 1]) * 10 ** rng.uniform(-1, 1))
    lag = int(rng.integers(0, max_lag + 1))
    return TransferFunction.from_zpk(zeros, poles, gain, lag, ts)


@st.composite
def stable_tfs(draw, max_order=4, zmax=None):
    seed = draw(st.integers(min_value=0, max_value=2 ** 32 - 1))
    return random_tf(np.random.default_rng(seed), max_order=max_order, zmax=zmax)


@pytest.fixture(scope="session")
def models():
    return [build_system(s) for s in DEFAULT_SPECS]


@pytest.fixture(scope="session")
def grid():
    return lti.default_grid(TS)
