"""
Monte-Carlo estimators that sample phase-space cells with weight |rho|.

Cells are drawn with probability ``|rho_c| / sum |rho|``; each estimator
multiplies the sampled phase ``rho_c / |rho_c|`` by the normalization mass
``S = sum |rho| dq dp`` so that its expectation over the sampling
distribution is exactly the deterministic grid quadrature it replaces.

Error bars are batch means. Each batch draws from its own child of a
:class:`numpy.random.SeedSequence`, so results depend only on the seed and
the batch count, never on evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ZeroNormError
from .fields import PhaseField
from .observables import ObservableSpec


@dataclass(frozen=True)
class McConfig:
    sample_count: int = 100_000
    seed: int = 0
    batch: int = 50

    def __post_init__(self):
        if not self.sample_count >= self.batch >= 2:
            raise ValueError("need sample_count >= batch >= 2")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class McEstimate:
    value: complex
    stderr: float
    sample_count: int
    seed: int


@dataclass(frozen=True)
class PhaseSamples:
    """Sampled cell indices, grouped by batch, and the mass ``S``."""

    q_idx: list[np.ndarray]
    p_idx: list[np.ndarray]
    mass: float


def cell_probabilities(qp: PhaseField) -> tuple[np.ndarray, float]:
    """Flat q-major probabilities ``|rho| / sum |rho|`` and the mass ``S``."""
    amp = np.abs(qp.values).ravel()
    total = amp.sum()
    if not total > 0:
        raise ZeroNormError("cannot sample from an identically zero field")
    return amp / total, float(total * qp.grid.cell)


def _batch_sizes(cfg: McConfig) -> list[int]:
    base, extra = divmod(cfg.sample_count, cfg.batch)
    return [base + (1 if i < extra else 0) for i in range(cfg.batch)]


def _batch_rngs(cfg: McConfig, stream: int = 0):
    ss = np.random.SeedSequence(cfg.seed, spawn_key=(stream,))
    return [np.random.default_rng(child) for child in ss.spawn(cfg.batch)]


def sample_phase_points(qp: PhaseField, cfg: McConfig, stream: int = 0) -> PhaseSamples:
    prob, mass = cell_probabilities(qp)
    n_p = qp.grid.p_axis.n
    qs, ps = [], []
    for rng, m in zip(_batch_rngs(cfg, stream), _batch_sizes(cfg)):
        flat = rng.choice(prob.size, size=m, p=prob)
        qs.append(flat // n_p)
        ps.append(flat % n_p)
    return PhaseSamples(qs, ps, mass)


def _unit_phase(z: np.ndarray) -> np.ndarray:
    return z / np.abs(z)


def identity_terms(qp: PhaseField, target: tuple[float, float], q_idx, p_idx, mass: float) -> np.ndarray:
    """Per-sample values whose mean estimates the phase-space identity sum at ``target``."""
    q, p = qp.grid.q_axis.points, qp.grid.p_axis.points
    tq, tp = target
    qs, ps = q[q_idx], p[p_idx]
    kern = np.exp(0.5j * (tq * ps - qs * tp))
    return mass / (4.0 * math.pi) * _unit_phase(qp.values[q_idx, p_idx]) * kern


def expectation_terms(qp: PhaseField, obs: ObservableSpec, idx1, idx2, mass: float) -> np.ndarray:
    """Per-pair values whose mean estimates the 4D mean-value sum.

    ``idx1`` indexes the un-conjugated factor ``rho(q', p')`` and ``idx2`` the
    conjugated one ``rho*(q'', p'')``; each is a ``(q_idx, p_idx)`` pair.
    """
    q, p = qp.grid.q_axis.points, qp.grid.p_axis.points
    q1, p1 = q[idx1[0]], p[idx1[1]]
    q2, p2 = q[idx2[0]], p[idx2[1]]
    r1 = _unit_phase(qp.values[idx1[0], idx1[1]])
    r2 = np.conj(_unit_phase(qp.values[idx2[0], idx2[1]]))
    kern = np.exp(0.5j * (q2 * p1 - q1 * p2))
    return mass**2 / (4.0 * math.pi) * r2 * r1 * kern * obs(0.5 * (q1 + q2), 0.5 * (p1 + p2))


def _combine(batch_values: list[np.ndarray], cfg: McConfig) -> McEstimate:
    sizes = np.array([v.size for v in batch_values], dtype=float)
    # shifted means: a constant estimator gives exactly zero spread
    shift = batch_values[0][0]
    dev = np.array([(v - shift).mean() for v in batch_values])
    value = complex(shift + np.sum(dev * sizes) / sizes.sum())
    spread = np.sqrt(np.var(dev.real, ddof=1) + np.var(dev.imag, ddof=1))
    return McEstimate(value, float(spread / math.sqrt(len(dev))), cfg.sample_count, cfg.seed)


def mc_identity_estimate(qp: PhaseField, target: tuple[float, float], cfg: McConfig) -> McEstimate:
    """Estimate ``rho`` at an arbitrary phase-space point from sampled cells."""
    s = sample_phase_points(qp, cfg)
    vals = [identity_terms(qp, target, qi, pi, s.mass) for qi, pi in zip(s.q_idx, s.p_idx)]
    return _combine(vals, cfg)


def mc_expectation_estimate(qp: PhaseField, obs: ObservableSpec, cfg: McConfig) -> McEstimate:
    """Estimate ``<O>`` from independent pairs of cells, each drawn from ``|rho|``."""
    a = sample_phase_points(qp, cfg, stream=0)
    b = sample_phase_points(qp, cfg, stream=1)
    vals = [
        expectation_terms(qp, obs, (q1, p1), (q2, p2), a.mass)
        for q1, p1, q2, p2 in zip(a.q_idx, a.p_idx, b.q_idx, b.p_idx)
    ]
    return _combine(vals, cfg)
