import numpy as np
import pytest

from qpdyn.errors import GridError, NumericalFailure
from qpdyn.fields import PhaseField, RealField, WaveFn
from qpdyn.grid import phase_grid


@pytest.fixture
def pg():
    return phase_grid(8, -1, 1)


def test_values_are_copied_and_frozen(pg):
    raw = np.ones(8, dtype=complex)
    psi = WaveFn(pg.q_axis, raw)
    raw[0] = 5
    assert psi.values[0] == 1
    with pytest.raises(ValueError):
        psi.values[0] = 2


def test_shape_checked(pg):
    with pytest.raises(GridError):
        WaveFn(pg.q_axis, np.ones(7))
    with pytest.raises(GridError):
        PhaseField(pg, np.ones((8, 7)))


def test_non_finite_rejected(pg):
    with pytest.raises(NumericalFailure):
        PhaseField(pg, np.full((8, 8), np.nan))
    with pytest.raises(NumericalFailure):
        RealField(pg, np.full((8, 8), np.inf))


def test_real_field_rejects_complex(pg):
    with pytest.raises((TypeError, ValueError)):
        RealField(pg, np.ones((8, 8)) * 1j)


def test_arithmetic(pg):
    a = PhaseField(pg, np.ones((8, 8)))
    b = a * 2.0 + a - a
    np.testing.assert_array_equal(b.values, 2.0)
    psi = WaveFn(pg.q_axis, np.ones(8))
    assert (psi * 1j + psi).values[0] == 1 + 1j


def test_arithmetic_grid_mismatch(pg):
    other = phase_grid(8, -2, 2)
    with pytest.raises(GridError):
        PhaseField(pg, np.ones((8, 8))) + PhaseField(other, np.ones((8, 8)))


def test_wavefn_space(pg):
    assert WaveFn(pg.q_axis, np.zeros(8)).is_position
    assert WaveFn(pg.p_axis, np.zeros(8)).is_momentum
