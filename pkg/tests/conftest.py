import numpy as np
import pytest

from dnwr import ProblemSpec, build_grid, equal_partition, initialize_interfaces


@pytest.fixture
def long_window():
    spec = ProblemSpec.error_equation(a1=0.0, a2=0.028, tau=3.0, T=10.0, x_left=0.0, x_right=5.0)
    grid = build_grid(spec, 0.1, 0.2)
    return spec, grid


@pytest.fixture
def short_window():
    spec = ProblemSpec.error_equation(a1=0.0, a2=0.028, tau=0.03, T=0.1, x_left=0.0, x_right=5.0)
    grid = build_grid(spec, 0.1, 0.001)
    return spec, grid


@pytest.fixture
def coarse_error_problem():
    """Small grid for linearity and bookkeeping checks."""
    spec = ProblemSpec.error_equation(a1=0.3, a2=0.5, tau=0.2, T=1.0, x_left=0.0, x_right=5.0)
    grid = build_grid(spec, 0.25, 0.1)
    decomp = equal_partition(grid, 5)
    return spec, grid, decomp


def random_traces(grid, decomp, rng):
    def make(_):
        return rng.standard_normal(grid.num_steps + 1)
    traces = initialize_interfaces(grid, decomp, "zero")
    return [type(h)(h.interface_index, make(h)) for h in traces]
