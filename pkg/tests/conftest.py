"""Shared fixtures: small sampled codes reused across the unit tests."""

import numpy as np
import pytest

from encsim import ldpc


@pytest.fixture(scope="session")
def code48():
    """Small (4,8)-regular code (4-cycles allowed; none exist this small
    that are avoidable), K = 16."""
    return ldpc.sample_code(32, 4, 8, seed=3, forbid_4cycles=False)


@pytest.fixture(scope="session")
def code612():
    """Small (6,12)-regular code, K = 12."""
    return ldpc.sample_code(24, 6, 12, seed=2, forbid_4cycles=False)


@pytest.fixture(scope="session")
def code48_girth6():
    """(4,8)-regular code large enough to be sampled 4-cycle-free."""
    spec = ldpc.sample_code(80, 4, 8, seed=5, forbid_4cycles=True)
    assert spec.girth is not None and spec.girth >= 6
    return spec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
