"""Shared fixtures: one small synthetic dataset reused across test modules.

Generation dominates test wall time, so the dataset is session-scoped and
treated as read-only; tests that need to mutate it copy first.
"""

from datetime import date

import pytest

from flowcast.synthgen import GeneratorConfig, generate


@pytest.fixture(scope="session")
def small_config():
    return GeneratorConfig(n_mainline=8, days=21, seed=3)


@pytest.fixture(scope="session")
def small_dataset(small_config):
    """Three weeks, 8 mainline stations per direction, fixed seed."""
    return generate(small_config)


@pytest.fixture(scope="session")
def small_series(small_dataset):
    return small_dataset.measured
