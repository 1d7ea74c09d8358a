import numpy as np
import pytest

from micropolar.datagen import DataSpec, make_torus_field
from micropolar.linear import MaterialParams
from micropolar.spectral import GridSpec, SpectralField, from_physical


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid8():
    return GridSpec(8)


@pytest.fixture
def grid16():
    return GridSpec(16)


@pytest.fixture
def unit_params():
    return MaterialParams(1.0, 1.0, 0.0, 0.0)


def random_field(grid, rng):
    """Hermitian coefficients of a real random vector field."""
    return SpectralField(grid, from_physical(rng.standard_normal((3,) + grid.shape), grid))


@pytest.fixture
def torus_state():
    def make(n=16, seed=3, amplitude=1.0, w_weight=1.0, q=2.0, sigma=3.0):
        spec = DataSpec(kind="torus-random", q=q, sigma=sigma, amplitude=amplitude, w_weight=w_weight, seed=seed)
        return make_torus_field(GridSpec(n), spec)

    return make


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for a criterion, then assert it."""

    def record(number: int, title: str, passed: bool, detail: str):
        line = f"criterion {number:>2} {title}: {'PASS' if passed else 'FAIL'} ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
