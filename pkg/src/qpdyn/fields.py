"""Sampled fields over 1D axes and over the (q, p) phase grid.

Fields are immutable: the value arrays are copied on construction and marked
read-only. Operations return new fields.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridError, NumericalFailure
from .grid import MOMENTUM, POSITION, Grid1D, PhaseGrid, quadrature_sum


def _frozen(values, dtype, shape) -> np.ndarray:
    if dtype is np.float64 and np.iscomplexobj(values):
        raise TypeError("real field given complex values")
    arr = np.array(values, dtype=dtype, copy=True)
    if arr.shape != shape:
        raise GridError(f"values have shape {arr.shape}, grid expects {shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericalFailure("field contains NaN or Inf entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class WaveFn:
    """Complex wave function on a position or momentum axis."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, np.complex128, (self.grid.n,)))

    @property
    def space(self) -> str:
        return self.grid.axis_kind

    @property
    def is_position(self) -> bool:
        return self.grid.axis_kind == POSITION

    @property
    def is_momentum(self) -> bool:
        return self.grid.axis_kind == MOMENTUM

    def norm(self) -> float:
        """Quadrature norm, ``sqrt(sum |psi|^2 * step)``."""
        return float(np.sqrt(quadrature_sum(np.abs(self.values) ** 2, self.grid)))

    def with_values(self, values) -> "WaveFn":
        return WaveFn(self.grid, values)

    def __add__(self, other: "WaveFn") -> "WaveFn":
        check_same_axis(self.grid, other.grid)
        return WaveFn(self.grid, self.values + other.values)

    def __mul__(self, c) -> "WaveFn":
        return WaveFn(self.grid, c * self.values)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class PhaseField:
    """Complex field on a phase grid, q-major (p index fastest)."""

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, np.complex128, self.grid.shape))

    def with_values(self, values) -> "PhaseField":
        return PhaseField(self.grid, values)

    def __add__(self, other: "PhaseField") -> "PhaseField":
        check_same_phase_grid(self.grid, other.grid)
        return PhaseField(self.grid, self.values + other.values)

    def __sub__(self, other: "PhaseField") -> "PhaseField":
        check_same_phase_grid(self.grid, other.grid)
        return PhaseField(self.grid, self.values - other.values)

    def __mul__(self, c) -> "PhaseField":
        return PhaseField(self.grid, c * self.values)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class RealField:
    """Real samples on either a single axis or a phase grid."""

    grid: Grid1D | PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        shape = self.grid.shape if isinstance(self.grid, PhaseGrid) else (self.grid.n,)
        object.__setattr__(self, "values", _frozen(self.values, np.float64, shape))


def check_same_axis(a: Grid1D, b: Grid1D):
    if not a.same_as(b):
        raise GridError(f"axis mismatch: {a} vs {b}")


def check_same_phase_grid(a: PhaseGrid, b: PhaseGrid):
    if not a.same_as(b):
        raise GridError("phase-grid mismatch")
