import numpy as np
import pytest

from boussinesq2d.initial import lattice_field
from boussinesq2d.spectral import Grid, SpectralField, VectorField


def random_scalar(grid, seed, n_max=4, zero_mean=True):
    rng = np.random.default_rng(seed)
    c = lattice_field(grid, rng, n_max, lambda r: (1.0 + r) ** -1.5, zero_mean=zero_mean)
    return SpectralField(grid, c, dealiased=True)


def random_vector(grid, seed, n_max=4):
    return VectorField(random_scalar(grid, [seed, 0], n_max), random_scalar(grid, [seed, 1], n_max))


@pytest.fixture(scope="session")
def grid32():
    return Grid(32, 32)


@pytest.fixture(scope="session")
def grid_rect():
    return Grid(32, 16, 4.0, 2.0)


ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def log(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
