"""
End-to-end experiment runner and field comparison.

:func:`run_experiment` builds the initial state from an
:class:`~qpdyn.config.ExperimentConfig`, optionally propagates it in phase
space and with the Schrödinger reference, writes every requested
representation as a field file (plus CSV), and evaluates the configured
tolerance gates. The result is summarised in ``report.json``.
"""

from __future__ import annotations

import json
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .dynamics import PropagatorConfig, cash_karp_propagate
from .errors import GridError
from .fieldio import atomic_open, export_csv, write_field
from .fields import PhaseField, WaveFn, check_same_axis, check_same_phase_grid
from .grid import phase_grid
from .observables import ObservableSpec, expectation_direct, husimi, trace_norm
from .states import CoherentStateSpec, coherent_state, superpose
from .transforms import (
    momentum_transform,
    psi_to_kirkwood,
    psi_to_qp,
    psi_to_wigner,
    qp_to_kirkwood,
    qp_to_psi_p,
    qp_to_psi_q,
    qp_to_wigner_1d,
)

COHERENCE_RADIUS = 4.0


@dataclass(frozen=True)
class Difference:
    linf: float
    l2: float


def compare_fields(a, b) -> Difference:
    """L-infinity and quadrature-weighted L2 norms of ``a - b``."""
    if type(a) is not type(b):
        raise GridError(f"cannot compare {type(a).__name__} with {type(b).__name__}")
    if isinstance(a, WaveFn):
        if a.space != b.space:
            raise GridError(f"cannot compare {a.space}-space and {b.space}-space wave functions")
        check_same_axis(a.grid, b.grid)
        weight = a.grid.step
    else:
        check_same_phase_grid(a.grid, b.grid)
        weight = a.grid.cell
    d = np.abs(np.asarray(a.values) - np.asarray(b.values))
    return Difference(float(d.max()), float(math.sqrt(np.sum(d * d) * weight)))


@dataclass
class GateResult:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tol)


@dataclass
class ExperimentReport:
    config: str
    metrics: dict = field(default_factory=dict)
    gates: list = field(default_factory=list)
    files: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(g.passed for g in self.gates)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "passed": self.passed,
            "gates": [{"name": g.name, "value": g.value, "tol": g.tol, "passed": g.passed} for g in self.gates],
            "metrics": self.metrics,
            "files": self.files,
            "warnings": self.warnings,
            "provenance": self.provenance,
        }


def initial_state(cfg: ExperimentConfig):
    pg = phase_grid(cfg.grid.n_q, cfg.grid.q_min, cfg.grid.q_max)
    terms = [(c, coherent_state(pg.q_axis, CoherentStateSpec(q0, p0))) for c, q0, p0 in cfg.terms]
    psi, _ = superpose(terms)
    return pg, psi


class _Lazy:
    """Mapping that builds each value on first access."""

    def __init__(self, makers: dict):
        self._makers, self._cache = makers, {}

    def __getitem__(self, key):
        if key not in self._cache:
            self._cache[key] = self._makers[key]()
        return self._cache[key]


def representations(rho: PhaseField) -> _Lazy:
    """Every representation derived from ``rho`` alone, built on demand."""
    return _Lazy({
        "psi_q": lambda: qp_to_psi_q(rho),
        "psi_p": lambda: qp_to_psi_p(rho),
        "qp": lambda: rho,
        "kirkwood": lambda: qp_to_kirkwood(rho),
        "wigner": lambda: qp_to_wigner_1d(rho),
        "husimi": lambda: husimi(rho),
    })


def reference_representations(psi: WaveFn, pg) -> _Lazy:
    """Representations derived from a position-space wave function."""
    return _Lazy({
        "psi_q": lambda: psi,
        "psi_p": lambda: momentum_transform(psi, pg),
        "qp": lambda: psi_to_qp(psi, pg),
        "kirkwood": lambda: psi_to_kirkwood(psi, pg),
        "wigner": lambda: psi_to_wigner(psi, pg),
        "husimi": lambda: husimi(psi_to_qp(psi, pg)),
    })


def coherence_ratio(rho: PhaseField, centers, radius: float = COHERENCE_RADIUS) -> float:
    """``max |rho|^2`` outside disks around ``centers``, relative to the peak."""
    h = np.abs(rho.values) ** 2
    q, p = rho.grid.mesh()
    outside = np.ones(h.shape, dtype=bool)
    for q0, p0 in centers:
        outside &= (q - q0) ** 2 + (p - p0) ** 2 > radius**2
    return float(h[outside].max() / h.max()) if outside.any() else 0.0


class _Writer:
    def __init__(self, outdir: Path, csv: bool, provenance: dict, report: ExperimentReport):
        self.outdir, self.csv, self.provenance, self.report = outdir, csv, provenance, report

    def __call__(self, name: str, fld):
        path = write_field(fld, self.outdir / f"{name}.fld", {**self.provenance, "field": name})
        self.report.files.append(path.name)
        if self.csv:
            self.report.files.append(export_csv(fld, self.outdir / f"{name}.csv").name)


def run_experiment(cfg: ExperimentConfig, outdir, provenance: dict | None = None) -> ExperimentReport:
    """Run ``cfg`` and write its artifacts and ``report.json`` into ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    prov = {"version": __version__, "config": cfg.source, "config_sha256": cfg.sha256, **(provenance or {})}
    report = ExperimentReport(config=cfg.name, provenance=prov)
    emit = _Writer(outdir, cfg.csv, prov, report)
    m = report.metrics

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        pg, psi0 = initial_state(cfg)
        rho0 = psi_to_qp(psi0, pg)
        m["trace_norm_initial"] = trace_norm(rho0)
        m["roundtrip_linf"] = compare_fields(qp_to_psi_q(rho0), psi0).linf
        m["coherence_ratio"] = coherence_ratio(rho0, [(q0, p0) for _, q0, p0 in cfg.terms])
        reps = representations(rho0)
        for rep in cfg.representations:
            emit(f"initial_{rep}", reps[rep])

        if cfg.propagation is not None:
            _propagate(cfg, pg, psi0, rho0, emit, m)
    report.warnings = sorted({f"{w.category.__name__}: {w.message}" for w in caught})

    gate_values = {
        "l2_psi_q": m.get("l2_psi_q"),
        "l2_psi_p": m.get("l2_psi_p"),
        "l2_kirkwood": m.get("l2_kirkwood"),
        "l2_wigner": m.get("l2_wigner"),
        "trace_drift": m.get("trace_drift"),
        "energy_drift": m.get("energy_drift"),
        "ehrenfest": m.get("ehrenfest"),
        "roundtrip_linf": m["roundtrip_linf"],
        "trace_norm": abs(m["trace_norm_initial"] - 1.0),
        "coherence_ratio": m["coherence_ratio"],
    }
    for name, tol in cfg.gates.items():
        value = gate_values.get(name)
        report.gates.append(GateResult(name, float("nan") if value is None else float(value), tol))

    with atomic_open(outdir / "report.json", "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
    return report


def _propagate(cfg: ExperimentConfig, pg, psi0, rho0, emit, m):
    p = cfg.propagation
    base = dict(t1=p.t1, rtol=p.rtol, atol=p.atol, potential=cfg.potential, kinetic=cfg.kinetic, snapshot_every=p.snapshot_stride)
    obs_h = ObservableSpec.hamiltonian(cfg.potential, cfg.kinetic)
    obs_q, obs_p = ObservableSpec.position(), ObservableSpec.momentum()

    t = time.perf_counter()
    run = cash_karp_propagate(rho0, PropagatorConfig(rhs_kind=p.rhs_kind, **base))
    m["phase_seconds"] = time.perf_counter() - t
    m["phase_steps"] = {"accepted": run.step_stats.accepted, "rejected": run.step_stats.rejected}
    m["snapshot_times"] = list(run.times)
    traces = [trace_norm(r) for r in run.snapshots]
    energies = [expectation_direct(r, obs_h) for r in run.snapshots]
    m["trace_drift"] = float(max(abs(x - traces[0]) for x in traces))
    m["energy_drift"] = float(max(abs(e - energies[0]) for e in energies))
    m["energy_initial"] = energies[0]
    rho_t = run.final
    m["ehrenfest"] = float(
        max(
            abs(expectation_direct(rho_t, obs_q) - expectation_direct(rho0, obs_q)),
            abs(expectation_direct(rho_t, obs_p) - expectation_direct(rho0, obs_p)),
        )
    )
    final = representations(rho_t)
    for rep in cfg.representations:
        emit(f"final_{rep}", final[rep])

    if not p.reference:
        return
    t = time.perf_counter()
    ref = cash_karp_propagate(psi0, PropagatorConfig(rhs_kind="schrodinger_reference", **base))
    m["reference_seconds"] = time.perf_counter() - t
    m["reference_steps"] = {"accepted": ref.step_stats.accepted, "rejected": ref.step_stats.rejected}
    refs = reference_representations(ref.final, pg)
    for rep in cfg.representations:
        emit(f"reference_{rep}", refs[rep])
    for rep in ("psi_q", "psi_p", "kirkwood", "wigner"):
        d = compare_fields(final[rep], refs[rep])
        m[f"l2_{rep}"] = d.l2
        m[f"linf_{rep}"] = d.linf
