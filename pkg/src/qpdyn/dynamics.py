"""
Time propagation of psi(q) and of the phase-space wave function rho(q, p).

Three right-hand sides are provided:

``schrodinger_reference``
    ``-i (T psi + V psi)`` with the kinetic term applied in momentum space.
``phase_direct``
    The 4D phase-space equation of motion

        d rho(q,p)/dt = -i (4pi)^{-1} sum_{q',p'} e^{i(qp' - q'p)/2}
                        [T((p+p')/2) + V((q+q')/2)] rho(q',p') dq dp

    evaluated either literally (O(N^4), small grids only) or as a
    contraction that exploits the separable kernel (O(N^3)).
``phase_factorized``
    The same operator routed through psi: V acts on the reconstructed
    ``psi(q)`` and T on the reconstructed ``psi(p)``, and both products are
    transformed back into phase space. O(N^2 log N) per evaluation.

All are integrated with the embedded Cash-Karp 5(4) Runge-Kutta pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    GridError,
    NonFiniteState,
    StepSizeUnderflow,
    UnsupportedModelError,
)
from .fields import PhaseField, WaveFn
from .grid import PhaseGrid
from .states import Free, KineticSpec, NonRelativistic, PotentialSpec, Relativistic
from .transforms import BACK_NORM, GABOR_NORM

RHS_KINDS = ("phase_direct", "phase_factorized", "schrodinger_reference")
LITERAL_MAX_N = 64


@dataclass(frozen=True)
class PropagatorConfig:
    t1: float
    t0: float = 0.0
    rtol: float = 1e-8
    atol: float = 1e-10
    dt_init: float = 1e-3
    safety: float = 0.9
    dt_min: float = 1e-12
    dt_max: float = 0.1
    kinetic: KineticSpec = field(default_factory=NonRelativistic)
    potential: PotentialSpec = field(default_factory=Free)
    rhs_kind: str = "phase_factorized"
    snapshot_every: float | None = 0.5
    max_steps: int = 10_000_000

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValueError("t1 must exceed t0")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        if not 0 < self.safety < 1:
            raise ValueError("safety factor must lie in (0, 1)")
        if not 0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_init <= dt_max")
        if self.rhs_kind not in RHS_KINDS:
            raise ValueError(f"rhs_kind must be one of {RHS_KINDS}")


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    final_dt: float = 0.0
    rhs_evals: int = 0


@dataclass
class TrajectoryRecord:
    times: list[float]
    snapshots: list
    step_stats: StepStats

    @property
    def final(self):
        return self.snapshots[-1]


# Right-hand-side operators ----------------------------------------------------


class SchrodingerRHS:
    """``-i H psi`` with the kinetic energy applied through the FFT."""

    def __init__(self, q_axis, potential: PotentialSpec, kinetic: KineticSpec):
        if isinstance(kinetic, Relativistic):
            raise UnsupportedModelError(
                "the position-space reference propagator supports only the non-relativistic kinetic energy"
            )
        k = 2.0 * math.pi * np.fft.fftfreq(q_axis.n, q_axis.step)
        self.t_k = kinetic(k)
        self.v_q = potential(q_axis.points)

    def __call__(self, t, psi):
        return -1j * (np.fft.ifft(self.t_k * np.fft.fft(psi)) + self.v_q * psi)


class PhaseFactorizedRHS:
    """Phase-space RHS evaluated via ``psi(q)`` and ``psi(p)``."""

    def __init__(self, pg: PhaseGrid, potential: PotentialSpec, kinetic: KineticSpec):
        if not pg.is_conjugate:
            raise GridError("phase-space propagation needs a conjugate grid")
        q, p = pg.q_axis.points, pg.p_axis.points
        dq, dp = pg.q_axis.step, pg.p_axis.step
        n = q.size
        idx = np.arange(n)
        half = np.exp(0.5j * np.outer(q, p))
        self.to_psi_q = BACK_NORM * dp * half
        self.to_psi_p = BACK_NORM * dq * np.conj(half)
        self.v_q = potential(q)
        self.t_p = kinetic(p)
        self.win_q = np.exp(-0.5 * (q[:, None] - q[None, :]) ** 2)
        self.win_p = np.exp(-0.5 * (p[:, None] - p[None, :]) ** 2)
        self.pre_q = np.exp(-1j * idx * dq * p[0])
        self.post_q = GABOR_NORM * dq * half * np.exp(-1j * q[0] * p)[None, :]
        self.pre_p = np.exp(1j * q[0] * idx * dp)
        # [q, p] after transposing the [p, q] inverse-FFT result
        self.post_p = GABOR_NORM * dp * n * np.conj(half) * np.exp(1j * q * p[0])[:, None]

    def __call__(self, t, rho):
        psi = np.sum(rho * self.to_psi_q, axis=1)
        phi = np.sum(rho * self.to_psi_p, axis=0)
        vq = np.fft.fft(self.win_q * (self.v_q * psi * self.pre_q)[None, :], axis=1)
        tp = np.fft.ifft(self.win_p * (self.t_p * phi * self.pre_p)[None, :], axis=1)
        return -1j * (self.post_q * vq + self.post_p * tp.T)


class PhaseDirectRHS:
    """Phase-space RHS as a separable contraction of the 4D kernel."""

    def __init__(self, pg: PhaseGrid, potential: PotentialSpec, kinetic: KineticSpec):
        if not pg.is_conjugate:
            raise GridError("phase-space propagation needs a conjugate grid")
        q, p = pg.q_axis.points, pg.p_axis.points
        self.half = np.exp(0.5j * np.outer(q, p))
        self.v_mid = potential(0.5 * (q[:, None] + q[None, :]))
        self.t_mid = kinetic(0.5 * (p[:, None] + p[None, :]))
        self.pref = -1j * pg.cell / (4.0 * math.pi)

    def __call__(self, t, rho):
        e = self.half
        a = e @ rho.T  # a[q, q'] = sum_p' e^{iqp'/2} rho(q', p')
        r_v = (self.v_mid * a) @ np.conj(e)
        c = np.conj(e).T @ rho  # c[p, p'] = sum_q' e^{-iq'p/2} rho(q', p')
        r_t = e @ (self.t_mid * c).T
        return self.pref * (r_v + r_t)


def phase_kernel(pg: PhaseGrid, potential: PotentialSpec, kinetic: KineticSpec) -> np.ndarray:
    """Dense 4D kernel ``e^{i(qp'-q'p)/2} H((q+q')/2, (p+p')/2)``.

    Returned as an ``(N*N, N*N)`` matrix in q-major flattening, so that the
    literal RHS is ``-i (4pi)^{-1} dq dp * K @ rho.ravel()``.
    """
    Q, P = (a.ravel() for a in pg.mesh())
    phase = np.exp(0.5j * (Q[:, None] * P[None, :] - Q[None, :] * P[:, None]))
    h = kinetic(0.5 * (P[:, None] + P[None, :])) + potential(0.5 * (Q[:, None] + Q[None, :]))
    return phase * h


class PhaseLiteralRHS:
    """Literal 4-index sum; memory and time grow as N^4."""

    def __init__(self, pg: PhaseGrid, potential: PotentialSpec, kinetic: KineticSpec, max_n: int = LITERAL_MAX_N):
        if max(pg.shape) > max_n:
            raise ValueError(f"literal 4-index RHS is limited to grids of at most {max_n} points per axis")
        self.kernel = phase_kernel(pg, potential, kinetic)
        self.shape = pg.shape
        self.pref = -1j * pg.cell / (4.0 * math.pi)

    def __call__(self, t, rho):
        return self.pref * (self.kernel @ rho.ravel()).reshape(self.shape)


def rhs_schrodinger(psi: WaveFn, cfg: PropagatorConfig) -> WaveFn:
    if not psi.is_position:
        raise GridError("rhs_schrodinger needs a position-space wave function")
    op = SchrodingerRHS(psi.grid, cfg.potential, cfg.kinetic)
    return WaveFn(psi.grid, op(cfg.t0, psi.values))


def rhs_phase_direct(qp: PhaseField, cfg: PropagatorConfig, method: str = "contraction") -> PhaseField:
    """Direct phase-space RHS; ``method`` is ``"contraction"`` or ``"literal"``."""
    if method == "contraction":
        op = PhaseDirectRHS(qp.grid, cfg.potential, cfg.kinetic)
    elif method == "literal":
        op = PhaseLiteralRHS(qp.grid, cfg.potential, cfg.kinetic)
    else:
        raise ValueError(f"unknown method {method!r}")
    return PhaseField(qp.grid, op(cfg.t0, qp.values))


def rhs_phase_factorized(qp: PhaseField, cfg: PropagatorConfig) -> PhaseField:
    op = PhaseFactorizedRHS(qp.grid, cfg.potential, cfg.kinetic)
    return PhaseField(qp.grid, op(cfg.t0, qp.values))


# Cash-Karp integrator ---------------------------------------------------------

_C = (0.0, 1 / 5, 3 / 10, 3 / 5, 1.0, 7 / 8)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (3 / 10, -9 / 10, 6 / 5),
    (-11 / 54, 5 / 2, -70 / 27, 35 / 27),
    (1631 / 55296, 175 / 512, 575 / 13824, 44275 / 110592, 253 / 4096),
)
_B5 = (37 / 378, 0.0, 250 / 621, 125 / 594, 0.0, 512 / 1771)
_B4 = (2825 / 27648, 0.0, 18575 / 48384, 13525 / 55296, 277 / 14336, 1 / 4)
_E = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))

_FAC_MIN, _FAC_MAX = 0.2, 5.0


def cash_karp_step(f, t, y, dt, k1=None):
    """One Cash-Karp step. Returns ``(y5, err, k1)``; ``y5`` is the 5th-order solution."""
    ks = [f(t, y) if k1 is None else k1]
    for i in range(1, 6):
        yi = y + dt * sum(a * k for a, k in zip(_A[i], ks) if a != 0.0)
        ks.append(f(t + _C[i] * dt, yi))
    y5 = y + dt * sum(b * k for b, k in zip(_B5, ks) if b != 0.0)
    err = dt * sum(e * k for e, k in zip(_E, ks) if e != 0.0)
    return y5, err, ks[0]


def error_norm(err, y_old, y_new, rtol, atol) -> float:
    scale = atol + rtol * np.maximum(np.abs(y_old), np.abs(y_new))
    return float(np.sqrt(np.mean((np.abs(err) / scale) ** 2)))


def integrate(
    f: Callable,
    y0,
    t0: float,
    t1: float,
    *,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    dt_init: float = 1e-3,
    dt_min: float = 1e-12,
    dt_max: float = 0.1,
    safety: float = 0.9,
    save_times: Sequence[float] = (),
    max_steps: int = 10_000_000,
):
    """Adaptive Cash-Karp integration of ``dy/dt = f(t, y)`` from ``t0`` to ``t1``.

    Steps are clamped so that every time in ``save_times`` (and ``t1``) is hit
    exactly. Returns ``(times, states, stats)`` where ``states`` holds ``y0``,
    the state at each save time, and the final state.
    """
    y = np.array(y0, copy=True)
    t = float(t0)
    targets = sorted({float(s) for s in save_times if t0 < s < t1} | {float(t1)})
    times, states = [t], [y.copy()]
    stats = StepStats()

    calls = [0]

    def rhs(tt, yy):
        calls[0] += 1
        return f(tt, yy)

    dt = min(dt_init, dt_max)
    k1 = None
    for target in targets:
        while t < target:
            if stats.accepted + stats.rejected >= max_steps:
                raise StepSizeUnderflow(f"exceeded {max_steps} steps at t={t}")
            clamped = t + dt >= target
            h = target - t if clamped else dt
            y_new, err, k1 = cash_karp_step(rhs, t, y, h, k1)
            en = error_norm(err, y, y_new, rtol, atol)
            if not np.isfinite(en):
                raise NonFiniteState(f"non-finite state or error estimate at t={t}")
            if en <= 1.0:
                t = target if clamped else t + h
                y = y_new
                k1 = None
                stats.accepted += 1
                fac = _FAC_MAX if en == 0.0 else min(_FAC_MAX, max(_FAC_MIN, safety * en**-0.2))
                if not clamped or fac < 1.0:
                    dt = min(dt_max, h * fac)
                stats.final_dt = h
            else:
                stats.rejected += 1
                dt = h * min(1.0, max(0.1, safety * en**-0.2))
                if dt < dt_min:
                    raise StepSizeUnderflow(f"step size {dt:.3e} fell below dt_min={dt_min:.3e} at t={t}")
        times.append(t)
        states.append(y.copy())
    stats.rhs_evals = calls[0]
    return times, states, stats


def make_rhs(state, cfg: PropagatorConfig, direct_method: str = "contraction"):
    """Build the RHS callable for ``state`` according to ``cfg.rhs_kind``."""
    kind = cfg.rhs_kind
    if kind == "schrodinger_reference":
        if not (isinstance(state, WaveFn) and state.is_position):
            raise GridError("schrodinger_reference propagates a position-space WaveFn")
        return SchrodingerRHS(state.grid, cfg.potential, cfg.kinetic)
    if not isinstance(state, PhaseField):
        raise GridError(f"{kind} propagates a PhaseField")
    if kind == "phase_factorized":
        return PhaseFactorizedRHS(state.grid, cfg.potential, cfg.kinetic)
    if direct_method == "literal":
        return PhaseLiteralRHS(state.grid, cfg.potential, cfg.kinetic)
    return PhaseDirectRHS(state.grid, cfg.potential, cfg.kinetic)


def snapshot_times(cfg: PropagatorConfig) -> list[float]:
    if not cfg.snapshot_every:
        return []
    n = int(math.floor((cfg.t1 - cfg.t0) / cfg.snapshot_every + 1e-9))
    return [cfg.t0 + i * cfg.snapshot_every for i in range(1, n + 1)]


def cash_karp_propagate(state, cfg: PropagatorConfig, direct_method: str = "contraction") -> TrajectoryRecord:
    """Propagate a WaveFn or PhaseField from ``cfg.t0`` to ``cfg.t1``.

    Snapshots are stored at ``t0``, every ``cfg.snapshot_every`` and ``t1``.
    """
    f = make_rhs(state, cfg, direct_method)
    times, ys, stats = integrate(
        f,
        state.values,
        cfg.t0,
        cfg.t1,
        rtol=cfg.rtol,
        atol=cfg.atol,
        dt_init=cfg.dt_init,
        dt_min=cfg.dt_min,
        dt_max=cfg.dt_max,
        safety=cfg.safety,
        save_times=snapshot_times(cfg),
        max_steps=cfg.max_steps,
    )
    snaps = [state.with_values(y) for y in ys]
    return TrajectoryRecord(times, snaps, stats)
