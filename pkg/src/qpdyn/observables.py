"""
Norms, the Husimi density and mean values computed from rho(q, p).

Mean values of operators of the form ``f(q) + g(p)`` are available in two
ways: directly from the 4D phase-space formula (:func:`expectation_direct`)
and after reconstructing ``psi(q)`` / ``psi(p)`` (:func:`expectation_reduced`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ImaginaryResidueError
from .fields import PhaseField, RealField
from .grid import quadrature_sum
from .transforms import qp_to_psi_p, qp_to_psi_q

IMAG_TOL = 1e-8


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ObservableSpec:
    """Operator ``f(q) + g(p)`` given by real callables.

    Either part may be ``None``. The callables are evaluated at arbitrary
    points, including the midpoints ``(q' + q'')/2`` that the 4D formula needs.
    """

    position_fn: Callable | None = None
    momentum_fn: Callable | None = None
    label: str = ""

    @classmethod
    def identity(cls) -> "ObservableSpec":
        return cls(position_fn=lambda q: np.ones_like(np.asarray(q, dtype=float)), label="1")

    @classmethod
    def position(cls, f: Callable | None = None, label: str = "q") -> "ObservableSpec":
        return cls(position_fn=f if f is not None else (lambda q: np.asarray(q, dtype=float)), label=label)

    @classmethod
    def momentum(cls, g: Callable | None = None, label: str = "p") -> "ObservableSpec":
        return cls(momentum_fn=g if g is not None else (lambda p: np.asarray(p, dtype=float)), label=label)

    @classmethod
    def hamiltonian(cls, potential: Callable, kinetic: Callable) -> "ObservableSpec":
        return cls(position_fn=potential, momentum_fn=kinetic, label="H")

    def f(self, q):
        return _checked(self.position_fn, q)

    def g(self, p):
        return _checked(self.momentum_fn, p)

    def __call__(self, q, p):
        return self.f(q) + self.g(p)


def _checked(fn, x):
    if fn is None:
        return _zero(x)
    vals = np.asarray(fn(x))
    if np.iscomplexobj(vals) or not np.all(np.isfinite(vals)):
        raise ValueError("observable samples must be real and finite")
    return np.broadcast_to(vals, np.shape(x)).astype(float)


def husimi(qp: PhaseField) -> RealField:
    return RealField(qp.grid, np.abs(qp.values) ** 2)


def trace_norm(qp: PhaseField) -> float:
    """Phase-space trace ``sum |rho|^2 dq dp``; one for a normalized state."""
    return float(quadrature_sum(np.abs(qp.values) ** 2, qp.grid.q_axis, qp.grid.p_axis))


def _real(value: complex, tol: float) -> float:
    if abs(value.imag) > tol * max(1.0, abs(value.real)):
        raise ImaginaryResidueError(f"mean value has imaginary part {value.imag:.3e}")
    return float(value.real)


def expectation_direct_complex(qp: PhaseField, obs: ObservableSpec, method: str = "contraction") -> complex:
    """Complex value of the 4D mean-value sum, before the reality check.

    ``(4pi)^{-1} sum e^{i(q''p' - q'p'')/2} rho*(q'',p'') O((q'+q'')/2, (p'+p'')/2) rho(q',p')``

    ``method="contraction"`` uses the separability of ``f(q) + g(p)``
    (O(N^3)); ``method="literal"`` builds the dense 4-index kernel and is
    meant for small grids.
    """
    pg = qp.grid
    q, p = pg.q_axis.points, pg.p_axis.points
    r = qp.values
    pref = pg.cell**2 / (4.0 * math.pi)
    if method == "literal":
        Q, P = (a.ravel() for a in pg.mesh())
        # rows (q'', p''), columns (q', p')
        phase = np.exp(0.5j * (Q[:, None] * P[None, :] - Q[None, :] * P[:, None]))
        o = obs.f(0.5 * (Q[:, None] + Q[None, :])) + obs.g(0.5 * (P[:, None] + P[None, :]))
        flat = r.ravel()
        return complex(pref * (np.conj(flat) @ ((phase * o) @ flat)))
    if method != "contraction":
        raise ValueError(f"unknown method {method!r}")
    total = 0.0j
    if obs.position_fn is not None:
        a = np.exp(0.5j * np.outer(q, p)) @ r.T  # a[x, y] = sum_p rho(y, p) e^{ixp/2}
        f_mid = obs.f(0.5 * (q[:, None] + q[None, :]))
        total += np.sum(f_mid * np.conj(a) * a.T)
    if obs.momentum_fn is not None:
        c = np.exp(-0.5j * np.outer(p, q)) @ r  # c[x, y] = sum_q rho(q, y) e^{-iqx/2}
        g_mid = obs.g(0.5 * (p[:, None] + p[None, :]))
        total += np.sum(g_mid * np.conj(c) * c.T)
    return complex(pref * total)


def expectation_direct(
    qp: PhaseField, obs: ObservableSpec, method: str = "contraction", imag_tol: float = IMAG_TOL
) -> float:
    """Mean value from the 4D phase-space formula.

    Raises :class:`ImaginaryResidueError` if the imaginary part exceeds
    ``imag_tol`` (relative to the real part when that is larger than one).
    """
    return _real(expectation_direct_complex(qp, obs, method), imag_tol)


def expectation_reduced(qp: PhaseField, obs: ObservableSpec, imag_tol: float = IMAG_TOL) -> float:
    """Mean value via the reconstructed ``psi(q)`` and ``psi(p)``."""
    total = 0.0j
    if obs.position_fn is not None:
        psi = qp_to_psi_q(qp)
        total += np.sum(np.abs(psi.values) ** 2 * obs.f(psi.grid.points)) * psi.grid.step
    if obs.momentum_fn is not None:
        phi = qp_to_psi_p(qp)
        total += np.sum(np.abs(phi.values) ** 2 * obs.g(phi.grid.points)) * phi.grid.step
    return _real(complex(total), imag_tol)
