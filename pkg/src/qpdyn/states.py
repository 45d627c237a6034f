"""
Initial states and model Hamiltonian pieces.

Coherent states use the unit-width convention

    z(q; q0, p0) = pi**(-1/4) * exp(i*p0*(q - q0) - (q - q0)**2 / 2)

and potentials/kinetic energies are small callable dataclasses so the same
object can be sampled on a grid or evaluated at off-grid midpoints by the
phase-space kernels.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    BoundaryTruncationWarning,
    GridError,
    OverflowClampWarning,
    ZeroNormError,
)
from .fields import RealField, WaveFn, check_same_axis
from .grid import MOMENTUM, POSITION, Grid1D

BOUNDARY_AMPLITUDE_TOL = 1e-8
SPEED_OF_LIGHT = 137.035999  # atomic units
# exp(350)**2 is still a finite double; exp(700)**2 is not
_EXP_CLAMP = 350.0


@dataclass(frozen=True)
class CoherentStateSpec:
    q0: float
    p0: float

    def __post_init__(self):
        if not (math.isfinite(self.q0) and math.isfinite(self.p0)):
            raise ValueError("coherent-state parameters must be finite")


def coherent_values(q: np.ndarray, q0: float, p0: float) -> np.ndarray:
    d = q - q0
    return np.pi ** -0.25 * np.exp(1j * p0 * d - 0.5 * d * d)


def coherent_state(grid: Grid1D, spec: CoherentStateSpec) -> WaveFn:
    """Sample the coherent state ``z(q; q0, p0)`` on a position grid.

    Emits :class:`BoundaryTruncationWarning` when the amplitude at either end
    of the grid exceeds ``BOUNDARY_AMPLITUDE_TOL``; in that case the sampled
    state is noticeably truncated and its quadrature norm is below one.
    """
    if grid.axis_kind != POSITION:
        raise GridError("coherent_state needs a position grid")
    psi = WaveFn(grid, coherent_values(grid.points, spec.q0, spec.p0))
    check_boundary(psi)
    return psi


def check_boundary(psi: WaveFn, tol: float = BOUNDARY_AMPLITUDE_TOL) -> float:
    """Warn if ``|psi|`` at the first or last sample exceeds ``tol``."""
    edge = float(max(abs(psi.values[0]), abs(psi.values[-1])))
    if edge > tol:
        warnings.warn(
            f"boundary amplitude {edge:.3e} exceeds {tol:.0e}; state is truncated by the grid",
            BoundaryTruncationWarning,
            stacklevel=3,
        )
    return edge


def superpose(terms: Sequence[tuple[complex, WaveFn]]) -> tuple[WaveFn, float]:
    """Normalized linear combination ``N * sum(c_k * psi_k)``.

    Returns the unit-norm state and the normalization constant ``N``.
    """
    if not terms:
        raise ValueError("superpose needs at least one term")
    grid = terms[0][1].grid
    total = np.zeros(grid.n, dtype=complex)
    for coeff, psi in terms:
        check_same_axis(grid, psi.grid)
        total += complex(coeff) * psi.values
    raw = WaveFn(grid, total).norm()
    if raw == 0.0 or raw < 1e-300:
        raise ZeroNormError("superposition has zero norm")
    return WaveFn(grid, total / raw), 1.0 / raw


# Potentials ----------------------------------------------------------------


@dataclass(frozen=True)
class Morse:
    """``v0 + depth * (1 - exp(-a (q - q_eq)))**2``."""

    v0: float = 1.0
    depth: float = 0.1
    a: float = 0.77
    q_eq: float = 4.0

    def __post_init__(self):
        if not (self.depth > 0 and self.a > 0):
            raise ValueError("Morse needs depth > 0 and a > 0")

    def __call__(self, q):
        x = -self.a * (np.asarray(q, dtype=float) - self.q_eq)
        if np.any(x > _EXP_CLAMP):
            warnings.warn(
                f"Morse exponent clamped at {_EXP_CLAMP}", OverflowClampWarning, stacklevel=2
            )
            x = np.minimum(x, _EXP_CLAMP)
        return self.v0 + self.depth * (1.0 - np.exp(x)) ** 2


@dataclass(frozen=True)
class Harmonic:
    m: float = 1.0
    omega: float = 1.0

    def __post_init__(self):
        if not (self.m > 0 and self.omega > 0):
            raise ValueError("Harmonic needs m > 0 and omega > 0")

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        return 0.5 * self.m * self.omega**2 * q * q


@dataclass(frozen=True)
class Free:
    def __call__(self, q):
        return np.zeros_like(np.asarray(q, dtype=float))


PotentialSpec = Morse | Harmonic | Free


def potential_values(grid: Grid1D, spec: PotentialSpec) -> RealField:
    if grid.axis_kind != POSITION:
        raise GridError("potential_values needs a position grid")
    return RealField(grid, spec(grid.points))


# Kinetic energies ----------------------------------------------------------


@dataclass(frozen=True)
class NonRelativistic:
    m: float = 1.0

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError("mass must be positive")

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        return p * p / (2.0 * self.m)


@dataclass(frozen=True)
class Relativistic:
    """``sqrt(c^2 p^2 + (m0 c^2)^2)``, optionally with the rest energy removed.

    With ``subtract_rest_energy`` the constant ``m0 c^2`` is taken out; it
    only contributes a global phase but makes the equation of motion
    needlessly stiff.
    """

    m0: float = 1.0
    c: float = SPEED_OF_LIGHT
    subtract_rest_energy: bool = False

    def __post_init__(self):
        if not (self.m0 > 0 and self.c > 0):
            raise ValueError("Relativistic needs m0 > 0 and c > 0")

    @property
    def rest_energy(self) -> float:
        return self.m0 * self.c**2

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        rest = self.rest_energy
        cp2 = (self.c * p) ** 2
        if self.subtract_rest_energy:
            # cancellation-free form of sqrt(cp2 + rest^2) - rest
            return cp2 / (np.sqrt(cp2 + rest * rest) + rest)
        return np.sqrt(cp2 + rest * rest)


KineticSpec = NonRelativistic | Relativistic


def kinetic_values(grid: Grid1D, spec: KineticSpec) -> RealField:
    if grid.axis_kind != MOMENTUM:
        raise GridError("kinetic_values needs a momentum grid")
    return RealField(grid, spec(grid.points))
