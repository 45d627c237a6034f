"""Integral phase-space formulation of 1D quantum dynamics on uniform grids."""

__version__ = "0.1.0"

from .errors import QpdynError  # noqa: E402
from .fields import PhaseField, RealField, WaveFn  # noqa: E402
from .grid import Grid1D, PhaseGrid, centered_phase_grid, make_position_grid, phase_grid  # noqa: E402
from .states import (  # noqa: E402
    CoherentStateSpec,
    Free,
    Harmonic,
    Morse,
    NonRelativistic,
    Relativistic,
    coherent_state,
    superpose,
)

__all__ = [
    "QpdynError",
    "Grid1D",
    "PhaseGrid",
    "make_position_grid",
    "phase_grid",
    "centered_phase_grid",
    "WaveFn",
    "PhaseField",
    "RealField",
    "CoherentStateSpec",
    "coherent_state",
    "superpose",
    "Morse",
    "Harmonic",
    "Free",
    "NonRelativistic",
    "Relativistic",
]
