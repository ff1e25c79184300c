"""Shared fixtures: one desk-scale solve per example family, reused everywhere."""

import warnings

import numpy as np
import pytest

import stopbound as sb


@pytest.fixture(scope="session")
def ex1_id():
    return sb.example_id("example1")


@pytest.fixture(scope="session")
def ex1_spec(ex1_id):
    return sb.build_example(ex1_id)


@pytest.fixture(scope="session")
def ex1_grid(ex1_spec):
    return sb.Grid.regular(0.0, ex1_spec.horizon, 201, [(-4.0, 8.0)], [241])


@pytest.fixture(scope="session")
def ex1_surface(ex1_spec, ex1_grid):
    with warnings.catch_warnings():
        # the top face sits in continuation for this payoff at any box size
        warnings.simplefilter("ignore", RuntimeWarning)
        return sb.solve_vi(ex1_spec, ex1_grid)


@pytest.fixture(scope="session")
def ex1_b0(ex1_surface):
    return sb.extract_boundary(ex1_surface, 0.0)


@pytest.fixture(scope="session")
def ex2a_id():
    return sb.example_id("example2a")


@pytest.fixture(scope="session")
def ex2a_frozen(ex2a_id):
    return sb.frozen_spec(ex2a_id, 0.0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
