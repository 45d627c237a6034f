"""
Uniform sample axes and rectangle-rule quadrature.

Position grids are half-open, ``[q_min, q_max)``, so that the momentum axis
built by :func:`conjugate_momentum_grid` is the exact discrete-Fourier partner
of the position axis. Every phase-space integral in the package is a plain
rectangle-rule sum over such axes.

All quantities are in Hartree atomic units (hbar = 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridError

POSITION = "position"
MOMENTUM = "momentum"
_AXIS_KINDS = (POSITION, MOMENTUM)


@dataclass(frozen=True)
class Grid1D:
    """Uniform 1D axis with samples ``origin + j*step`` for ``j in range(n)``."""

    n: int
    origin: float
    step: float
    axis_kind: str = POSITION

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise GridError(f"grid needs n >= 2 samples, got {self.n}")
        if not (math.isfinite(self.step) and self.step > 0):
            raise GridError(f"grid step must be positive and finite, got {self.step}")
        if not math.isfinite(self.origin):
            raise GridError(f"grid origin must be finite, got {self.origin}")
        if self.axis_kind not in _AXIS_KINDS:
            raise GridError(f"axis_kind must be one of {_AXIS_KINDS}, got {self.axis_kind!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "origin", float(self.origin))
        object.__setattr__(self, "step", float(self.step))

    @property
    def points(self) -> np.ndarray:
        return self.origin + self.step * np.arange(self.n)

    @property
    def length(self) -> float:
        """Period of the half-open interval, ``n * step``."""
        return self.n * self.step

    @property
    def end(self) -> float:
        """Exclusive upper bound of the interval."""
        return self.origin + self.length

    def same_as(self, other: "Grid1D", rtol: float = 1e-12) -> bool:
        return (
            self.n == other.n
            and self.axis_kind == other.axis_kind
            and math.isclose(self.step, other.step, rel_tol=rtol)
            and math.isclose(self.origin, other.origin, rel_tol=rtol, abs_tol=rtol * self.length)
        )


def make_position_grid(n: int, q_min: float, q_max: float) -> Grid1D:
    """Half-open position grid on ``[q_min, q_max)`` with ``n`` samples.

    >>> make_position_grid(4, -1.0, 1.0).points
    array([-1. , -0.5,  0. ,  0.5])
    """
    if n < 2:
        raise GridError(f"grid needs n >= 2 samples, got {n}")
    if not q_max > q_min:
        raise GridError(f"interval length must be positive, got ({q_min}, {q_max})")
    return Grid1D(n, q_min, (q_max - q_min) / n, POSITION)


def conjugate_momentum_grid(q: Grid1D) -> Grid1D:
    """Fourier-conjugate axis of ``q``.

    The returned axis has the same sample count, step ``2*pi/(n*step)`` and
    covers ``[-pi/step, pi/step)``. Applied to a momentum axis it returns the
    centred position axis with the original step and length.
    """
    kind = MOMENTUM if q.axis_kind == POSITION else POSITION
    return Grid1D(q.n, -math.pi / q.step, 2.0 * math.pi / (q.n * q.step), kind)


@dataclass(frozen=True)
class PhaseGrid:
    """Product of a position axis and a momentum axis."""

    q_axis: Grid1D
    p_axis: Grid1D

    def __post_init__(self):
        if self.q_axis.axis_kind != POSITION or self.p_axis.axis_kind != MOMENTUM:
            raise GridError("PhaseGrid needs (position, momentum) axes")

    @classmethod
    def from_position(cls, q_axis: Grid1D) -> "PhaseGrid":
        return cls(q_axis, conjugate_momentum_grid(q_axis))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.q_axis.n, self.p_axis.n)

    @property
    def cell(self) -> float:
        """Area of one phase-space cell, ``dq * dp``."""
        return self.q_axis.step * self.p_axis.step

    @property
    def is_conjugate(self) -> bool:
        c = conjugate_momentum_grid(self.q_axis)
        return c.same_as(self.p_axis)

    def same_as(self, other: "PhaseGrid") -> bool:
        return self.q_axis.same_as(other.q_axis) and self.p_axis.same_as(other.p_axis)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """``(Q, P)`` arrays of shape ``(nq, np)``, q-major."""
        return np.meshgrid(self.q_axis.points, self.p_axis.points, indexing="ij")


def phase_grid(n: int, q_min: float, q_max: float) -> PhaseGrid:
    """Conjugate ``n x n`` phase grid over the position interval ``[q_min, q_max)``."""
    return PhaseGrid.from_position(make_position_grid(n, q_min, q_max))


def centered_phase_grid(n: int, q_center: float = 0.0) -> PhaseGrid:
    """Conjugate grid whose q and p extents are equal, ``sqrt(2*pi*n)`` each.

    This balances resolution of the unit-width Gabor window in both
    directions, which is what the 4D kernels need to be accurate.
    """
    half = 0.5 * math.sqrt(2.0 * math.pi * n)
    return phase_grid(n, q_center - half, q_center + half)


def quadrature_sum(values, *axes: Grid1D) -> complex:
    """Rectangle-rule integral of sampled ``values`` over the given axes.

    ``values`` must have one array dimension per axis. The result is
    ``sum(values) * prod(step)`` and is returned as a Python complex for
    complex input, float otherwise.
    """
    arr = np.asarray(values)
    if arr.ndim != len(axes):
        raise GridError(f"{arr.ndim}-D values but {len(axes)} axes given")
    for dim, ax in zip(arr.shape, axes):
        if dim != ax.n:
            raise GridError(f"array extent {dim} does not match axis with n={ax.n}")
    weight = math.prod(ax.step for ax in axes)
    total = arr.sum() * weight
    return complex(total) if np.iscomplexobj(arr) else float(total)
