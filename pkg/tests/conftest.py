"""Shared test fixtures: small exact schedules and cached Grover schedules."""

from __future__ import annotations

from fractions import Fraction
from functools import cache

import pytest

from qrace.engine.schedules import ProbabilitySchedule, exact_schedule, grover_schedule


@cache
def grover(n: int) -> ProbabilitySchedule:
    """Grover schedules are deterministic; build each size once per session."""
    return grover_schedule(n)


@pytest.fixture
def half_one() -> ProbabilitySchedule:
    """p = (1/2, 1): coinciding equilibrium (2/3, 1/3) paying 1/3."""
    return exact_schedule(["1/2", "1"])


@pytest.fixture
def quarter_half_one() -> ProbabilitySchedule:
    """p = (1/4, 1/2, 1): T* = 2, x = (0, 2/3, 1/3), payoff 1/3, sigma = 2."""
    return exact_schedule(["1/4", "1/2", "1"])


@pytest.fixture
def linear4() -> ProbabilitySchedule:
    return exact_schedule([Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)])


@pytest.fixture
def grover_1e3() -> ProbabilitySchedule:
    return grover(10**3)


@pytest.fixture
def grover_1e4() -> ProbabilitySchedule:
    return grover(10**4)


@pytest.fixture
def grover_1e5() -> ProbabilitySchedule:
    return grover(10**5)


@pytest.fixture
def grover_1e6() -> ProbabilitySchedule:
    return grover(10**6)


@pytest.fixture
def grover_race():
    """Factory for cached Grover schedules of any size."""
    return grover
