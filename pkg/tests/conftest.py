"""Shared fixtures: baseline specs and cached effective-Hamiltonian builds."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from chirpsim import algebra, pulse

settings.register_profile(
    "ci", derandomize=True, max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")

BASE = dict(E=1.0, v0=-0.5, v1=0.5, eps1=0.5, eps2=0.1, alpha=0.0)

_EFF_CACHE: dict = {}


def build_effective_cached(spec: pulse.PulseSpec, N0: int, scheme: str):
    """Cleaning runs depend only on (scheme, v0, v1, E, alpha, N0); reuse them."""
    key = (scheme, spec.E, spec.v0, spec.v1, spec.eps1, spec.eps2,
           spec.alpha, N0)
    if key not in _EFF_CACHE:
        h0 = algebra.build_interaction_hamiltonian(spec, N0=N0)
        cleaned, gens = algebra.cleaning_algorithm(h0, N0)
        hrwa = algebra.extract_hrwa(cleaned, N0)
        _EFF_CACHE[key] = (cleaned, gens, hrwa)
    return _EFF_CACHE[key]


@pytest.fixture(scope="session")
def sec3_spec() -> pulse.PulseSpec:
    """Baseline parameters: trigonometric scheme, chirp -0.5 -> 0.5."""
    return pulse.make_spec(**BASE, scheme="remark5")


@pytest.fixture(scope="session")
def s0_spec() -> pulse.PulseSpec:
    """Endpoint-vanishing envelope u = 1 - cos(2 pi s)."""
    return pulse.make_spec(**BASE, scheme="s0")


@pytest.fixture(scope="session")
def s1_spec() -> pulse.PulseSpec:
    """Endpoint-vanishing envelope with nonzero final slope."""
    return pulse.make_spec(**BASE, scheme="s1")


@pytest.fixture(scope="session")
def rng() -> np.random.Generator:
    return np.random.default_rng(20260823)
