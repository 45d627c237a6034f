import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qpdyn.errors import ImaginaryResidueError
from qpdyn.fields import PhaseField
from qpdyn.grid import centered_phase_grid
from qpdyn.observables import (
    ObservableSpec,
    expectation_direct,
    expectation_direct_complex,
    expectation_reduced,
    husimi,
    trace_norm,
)
from qpdyn.states import Harmonic, Morse, NonRelativistic
from qpdyn.transforms import psi_to_qp

from conftest import two_gaussians, random_complex, z

OBSERVABLES = {
    "1": ObservableSpec.identity(),
    "q": ObservableSpec.position(),
    "p": ObservableSpec.momentum(),
    "V": ObservableSpec.position(Morse(), label="V"),
    "T": ObservableSpec.momentum(NonRelativistic(), label="T"),
}


@pytest.fixture(scope="module")
def corpus(wide_grid, grid128):
    centered = centered_phase_grid(128, 0.0)
    return {
        "z(4,-2)": psi_to_qp(z(grid128, 4.0, -2.0), grid128),
        "z(0,1)": psi_to_qp(z(centered, 0.0, 1.0), centered),
        "pair": psi_to_qp(two_gaussians(wide_grid), wide_grid),
    }


def test_husimi_of_coherent_state(grid64):
    h = husimi(psi_to_qp(z(grid64, 4.0, -2.0), grid64))
    q, p = grid64.mesh()
    oracle = np.exp(-((q - 4) ** 2 + (p + 2) ** 2) / 2) / (2 * math.pi)
    assert np.max(np.abs(h.values - oracle)) < 1e-13


@given(st.integers(0, 2**31))
def test_husimi_is_nonnegative(seed):
    pg = centered_phase_grid(8)
    assert np.all(husimi(PhaseField(pg, random_complex(pg.shape, seed))).values >= 0)


def test_trace_norm_scaling(grid64):
    rho = psi_to_qp(z(grid64, 4.0, -2.0), grid64)
    assert trace_norm(rho) == pytest.approx(1.0, abs=1e-8)
    assert trace_norm(PhaseField(grid64, 2 * rho.values)) == pytest.approx(4 * trace_norm(rho), rel=1e-14)
    assert trace_norm(PhaseField(grid64, np.zeros(grid64.shape, complex))) == 0.0
    assert not np.any(husimi(PhaseField(grid64, np.zeros(grid64.shape, complex))).values)


@pytest.mark.parametrize("name", ["z(4,-2)", "z(0,1)", "pair"])
def test_identity_matches_trace_for_physical_fields(corpus, name):
    rho = corpus[name]
    assert expectation_direct(rho, OBSERVABLES["1"]) == pytest.approx(trace_norm(rho), abs=1e-12)


@pytest.mark.parametrize("name", ["z(4,-2)", "z(0,1)", "pair"])
@pytest.mark.parametrize("obs", list(OBSERVABLES))
def test_direct_matches_reduced(corpus, name, obs):
    rho = corpus[name]
    o = OBSERVABLES[obs]
    assert abs(expectation_direct(rho, o) - expectation_reduced(rho, o)) <= 1e-8


def test_coherent_state_centre(corpus):
    rho = corpus["z(4,-2)"]
    assert expectation_direct(rho, OBSERVABLES["q"]) == pytest.approx(4.0, abs=1e-8)
    assert expectation_reduced(rho, OBSERVABLES["q"]) == pytest.approx(4.0, abs=1e-10)
    assert expectation_reduced(rho, OBSERVABLES["p"]) == pytest.approx(-2.0, abs=1e-10)


@pytest.mark.parametrize("q0,p0", [(0.0, 0.0), (1.0, 1.0), (-2.0, 0.5)])
def test_harmonic_energy(q0, p0):
    pg = centered_phase_grid(96, 0.0)
    rho = psi_to_qp(z(pg, q0, p0), pg)
    h = ObservableSpec.hamiltonian(Harmonic(), NonRelativistic())
    exact = (q0**2 + p0**2) / 2 + 0.5
    assert expectation_direct(rho, h) == pytest.approx(exact, abs=1e-8)
    assert expectation_reduced(rho, h) == pytest.approx(exact, abs=1e-8)


@pytest.mark.parametrize("obs", list(OBSERVABLES))
def test_contraction_matches_literal(balanced16, obs):
    rho = PhaseField(balanced16, random_complex(balanced16.shape, 11))
    a = expectation_direct_complex(rho, OBSERVABLES[obs])
    b = expectation_direct_complex(rho, OBSERVABLES[obs], method="literal")
    assert abs(a - b) <= 1e-12 * max(1.0, abs(b))


def test_unknown_method(balanced16):
    with pytest.raises(ValueError):
        expectation_direct_complex(PhaseField(balanced16, np.zeros(balanced16.shape, complex)), OBSERVABLES["q"], "x")


def test_imaginary_residue_raises(balanced16):
    rho = PhaseField(balanced16, random_complex(balanced16.shape, 0))
    # the 4D kernel is Hermitian, so only rounding remains; a zero tolerance exposes it
    assert abs(expectation_direct_complex(rho, OBSERVABLES["q"]).imag) < 1e-12
    with pytest.raises(ImaginaryResidueError):
        expectation_direct(rho, OBSERVABLES["q"], imag_tol=0.0)


@pytest.mark.parametrize("bad", [lambda q: q * 1j, lambda q: np.full_like(q, np.inf)])
def test_observable_samples_must_be_real_and_finite(bad):
    with pytest.raises(ValueError, match="real and finite"):
        ObservableSpec.position(bad).f(np.linspace(0, 1, 4))


def test_observable_is_sum_of_parts():
    o = ObservableSpec.hamiltonian(Harmonic(), NonRelativistic())
    np.testing.assert_allclose(o(np.array([1.0, 2.0]), np.array([0.0, 2.0])), [0.5, 4.0])
    np.testing.assert_array_equal(ObservableSpec.position().g(np.arange(3.0)), 0.0)
