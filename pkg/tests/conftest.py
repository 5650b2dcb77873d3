"""Shared fixtures: the canonical parameter points used across the suite."""

import pytest

from mqsvis.oracle import OracleGain
from mqsvis.terms import gain_from_mean, splitter_from_reflectivity


@pytest.fixture(scope="session")
def gain5():
    return gain_from_mean(5.0)


@pytest.fixture(scope="session")
def bs01():
    return splitter_from_reflectivity(0.1)


@pytest.fixture(scope="session")
def ogain5():
    return OracleGain.from_mean(5)


@pytest.fixture(scope="session")
def oracle_bs_inv_s2(ogain5):
    """|N_BS|^-2 at m = 5, R = 0.1, sigma' = 2 from the slow reference
    path; shared because it costs tens of seconds."""
    import mpmath as mp

    from mqsvis.oracle import norm_inv_bs

    return norm_inv_bs(2, ogain5, mp.mpf("0.1"), mp.mpf("0.9"))
