import json

import numpy as np
import pytest

from qpdyn.config import load_config, parse_config
from qpdyn.errors import GridError
from qpdyn.experiment import coherence_ratio, compare_fields, run_experiment
from qpdyn.fieldio import read_field, read_field_with_header
from qpdyn.fields import PhaseField, WaveFn
from qpdyn.transforms import psi_to_qp

from conftest import two_gaussians, z


def test_compare_fields(grid64):
    psi = z(grid64, 4.0, -2.0)
    assert compare_fields(psi, psi).linf == 0.0
    shifted = WaveFn(psi.grid, psi.values + 1e-5)
    d = compare_fields(psi, shifted)
    assert d.linf == pytest.approx(1e-5, rel=1e-9)
    assert d.l2 == pytest.approx(1e-5 * np.sqrt(64 * grid64.q_axis.step), rel=1e-9)
    with pytest.raises(GridError):
        compare_fields(psi, psi_to_qp(psi, grid64))
    with pytest.raises(GridError):
        compare_fields(psi, WaveFn(grid64.p_axis, psi.values))


def test_coherence_ratio(wide_grid):
    rho = psi_to_qp(two_gaussians(wide_grid), wide_grid)
    assert coherence_ratio(rho, [(4, -2), (-1, 5)]) < 1e-3
    # with only one disk the other Gaussian is "outside" and the ratio is large
    assert coherence_ratio(rho, [(4, -2)]) > 0.5


@pytest.fixture(scope="module")
def fig12_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig12")
    return out, run_experiment(load_config("fig12"), out, {"seed": 0})


def test_bundle_fig12_gates_pass(fig12_run):
    _, report = fig12_run
    assert report.passed, report.to_dict()["gates"]


def test_bundle_fig12_emits_figure_data(fig12_run):
    out, report = fig12_run
    for rep in ("psi_q", "psi_p", "qp", "kirkwood", "wigner", "husimi"):
        assert (out / f"initial_{rep}.fld").exists()
        assert (out / f"initial_{rep}.csv").exists()
    fld, header = read_field_with_header(out / "initial_qp.fld")
    assert isinstance(fld, PhaseField)
    assert header["provenance"]["config_sha256"] == load_config("fig12").sha256
    assert header["provenance"]["seed"] == 0


def test_bundle_fig12_report_json(fig12_run):
    out, report = fig12_run
    doc = json.loads((out / "report.json").read_text())
    assert doc["passed"] is True
    assert doc["metrics"]["trace_norm_initial"] == pytest.approx(1.0, abs=1e-8)
    assert sorted(doc["files"]) == sorted(report.files)


def test_bundle_fig12_wigner_has_interference(fig12_run):
    out, _ = fig12_run
    w = read_field(out / "initial_wigner.fld", "real_field")
    q, p = w.grid.mesh()
    mid = (np.abs(q - 1.5) < 0.3) & (np.abs(p - 1.5) < 0.3)
    assert np.max(np.abs(w.values[mid])) > 0.1 * np.max(np.abs(w.values))


@pytest.fixture(scope="module")
def harmonic_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("harmonic")
    return out, run_experiment(load_config("harmonic"), out)


def test_harmonic_gates_pass(harmonic_run):
    _, report = harmonic_run
    assert report.passed, report.to_dict()["gates"]
    assert report.metrics["ehrenfest"] <= 1e-6


def test_harmonic_outputs(harmonic_run):
    out, report = harmonic_run
    names = set(report.files)
    assert {"initial_qp.fld", "final_qp.fld", "reference_psi_q.fld", "final_husimi.fld"} <= names
    assert not any(n.endswith(".csv") for n in names)
    assert report.metrics["snapshot_times"][-1] == pytest.approx(2 * np.pi)
    assert report.metrics["l2_psi_q"] < 1e-5


def test_missing_gate_value_fails(tmp_path):
    text = """
[grid]
n_q = 32
q_min = -8
q_max = 8
[initial_state]
terms = 1 0 0
[potential]
kind = free
[propagation]
t1 = 0.1
reference = no
[outputs]
representations = psi_q
csv = no
[gates]
l2_psi_q = 1
trace_drift = 1e-7
"""
    report = run_experiment(parse_config(text), tmp_path)
    by_name = {g.name: g for g in report.gates}
    assert not by_name["l2_psi_q"].passed  # no reference run, so no value
    assert by_name["trace_drift"].passed
    assert not report.passed
