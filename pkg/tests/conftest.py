"""Shared fixtures and hypothesis profiles."""
import os

import pytest
from hypothesis import HealthCheck, settings

from dredmtl.bench import example1_dataset, example1_program
from dredmtl.syntax import parse_program

settings.register_profile('default', max_examples=50, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile('ci', max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile('quick', max_examples=10, deadline=None)
settings.load_profile(os.environ.get('HYPOTHESIS_PROFILE', 'default'))


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: large-scale timing runs, deselect with -m "not slow"')


@pytest.fixture
def example1():
    """The Example 1 rule: R recurs ten units after it held for a unit."""
    return example1_program()


@pytest.fixture
def example1_data():
    return example1_dataset(1)


@pytest.fixture
def rule1():
    return parse_program('R(?u,?y) :- P(?s,?x), DIAMONDMINUS[0,2] L(?u,?x), P(?s,?y)')


@pytest.fixture(autouse=True)
def _no_stage_cap_env(monkeypatch):
    monkeypatch.delenv('DMTL_STAGE_CAP', raising=False)
