"""Shared fixtures. The expensive solves are session-scoped so the golden-value
and geometry tests reuse one artifact instead of re-solving per test."""
import pytest

from mftg import SimplexGrid, load_fixture, solve_lower, solve_upper


@pytest.fixture(scope="session")
def ex1():
    return load_fixture("example1")


@pytest.fixture(scope="session")
def ex2():
    return load_fixture("example2")


@pytest.fixture(scope="session")
def two_node():
    return load_fixture("two_node", rho=0.5)


def _solve_both(model, bins):
    bg = SimplexGrid(model.num_blue_states, bins)
    rg = SimplexGrid(model.num_red_states, bins)
    return solve_lower(model, bg, rg), solve_upper(model, bg, rg)


@pytest.fixture(scope="session")
def ex1_grids_60(ex1):
    return _solve_both(ex1.model, 60)


@pytest.fixture(scope="session")
def ex1_grids_500(ex1):
    # The fine-grid reference solve; shared by the golden-value checks.
    return _solve_both(ex1.model, 500)


@pytest.fixture(scope="session")
def ex2_grids_200(ex2):
    return _solve_both(ex2.model, 200)
