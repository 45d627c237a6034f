"""
``qpdyn`` command-line interface.

Exit codes: 0 success, 1 tolerance gate failed, 2 usage or configuration
error, 3 numerical failure. Every written field file records the full
command line, the seed and (when a config is used) its SHA-256 in the
header's provenance block.
"""

from __future__ import annotations

import argparse
import json
import os
import shlex
import sys
import warnings

import numpy as np

from . import __version__
from .config import canonical_rhs, load_config
from .dynamics import PropagatorConfig, cash_karp_propagate
from .errors import (
    ConfigError,
    FieldFormatError,
    GridError,
    ImaginaryResidueError,
    NumericalFailure,
    QpdynError,
    UnsupportedModelError,
    ZeroNormError,
)
from .experiment import compare_fields, run_experiment
from .fieldio import export_csv, read_field, read_field_with_header, write_field
from .fields import PhaseField, WaveFn
from .grid import PhaseGrid, phase_grid
from .montecarlo import McConfig, mc_expectation_estimate, mc_identity_estimate
from .observables import ObservableSpec, expectation_direct, expectation_reduced, husimi
from .states import CoherentStateSpec, Free, NonRelativistic, coherent_state, superpose
from .transforms import (
    momentum_transform,
    phase_identity,
    position_transform,
    project_physical,
    psi_p_to_qp,
    psi_to_kirkwood,
    psi_to_qp,
    psi_to_wigner,
    qp_to_kirkwood,
    qp_to_psi_p,
    qp_to_psi_q,
    qp_to_wigner_1d,
)

EXIT_OK, EXIT_GATE, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
SEED_ENV = "QPDYN_SEED"


class _Context:
    def __init__(self, argv):
        self.command = "qpdyn " + shlex.join(argv)

    def provenance(self, **extra) -> dict:
        return {"command": self.command, "version": __version__, **extra}


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _max_abs(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a.values) - np.asarray(b.values))))


def _write(fld, path, ctx, csv=None, **extra):
    write_field(fld, path, ctx.provenance(**extra))
    if csv:
        export_csv(fld, csv)


def _model(args):
    """Potential and kinetic energy from ``--config`` (free particle otherwise)."""
    if getattr(args, "config", None):
        cfg = load_config(args.config)
        return cfg.potential, cfg.kinetic, cfg
    return Free(), NonRelativistic(), None


# Subcommands -------------------------------------------------------------------


def cmd_make_state(args, ctx):
    pg = phase_grid(args.n, args.q_min, args.q_max)
    terms = []
    for spec in args.coherent:
        try:
            c, q0, p0 = spec.split(",")
            terms.append((complex(c), coherent_state(pg.q_axis, CoherentStateSpec(float(q0), float(p0)))))
        except ValueError as exc:
            raise ConfigError(f"--coherent {spec!r}: expected 'coeff,q0,p0' ({exc})") from exc
    psi, norm = superpose(terms)
    out = momentum_transform(psi, pg) if args.space == "p" else psi
    _write(out, args.out, ctx, args.csv)
    _emit({"out": args.out, "kind": "wavefn_" + args.space, "normalization": norm})
    return EXIT_OK


_TRANSFORMS = {
    "psi-to-qp": ("wavefn_q", lambda f, m, pg: psi_to_qp(f, method=m)),
    "psi-p-to-qp": ("wavefn_p", lambda f, m, pg: psi_p_to_qp(f, pg, method=m)),
    "qp-to-psi-q": ("phase_field", lambda f, m, pg: qp_to_psi_q(f)),
    "qp-to-psi-p": ("phase_field", lambda f, m, pg: qp_to_psi_p(f)),
    "psi-to-psi-p": ("wavefn_q", lambda f, m, pg: momentum_transform(f, method=m)),
    "psi-p-to-psi": ("wavefn_p", lambda f, m, pg: position_transform(f, pg, method=m)),
    "project": ("phase_field", lambda f, m, pg: project_physical(f, method=m)),
    "identity": ("phase_field", lambda f, m, pg: phase_identity(f, method=m)),
}


def _like_grid(args, fld) -> PhaseGrid | None:
    """Phase grid for a momentum-space input, taken from the ``--like`` file.

    A momentum axis fixes ``dq`` but not the position origin, so it cannot
    be inverted on its own.
    """
    if not (isinstance(fld, WaveFn) and fld.is_momentum):
        return None
    if not args.like:
        raise ConfigError("momentum-space input needs --like FILE (any field on the target phase grid)")
    like = read_field(args.like)
    pg = PhaseGrid.from_position(like.grid) if isinstance(like, WaveFn) and like.is_position else like.grid
    if not isinstance(pg, PhaseGrid) or not pg.p_axis.same_as(fld.grid):
        raise GridError(f"{args.like}: momentum axis does not match {args.input}")
    return pg


def cmd_transform(args, ctx):
    want, fn = _TRANSFORMS[args.op]
    fld = read_field(args.input, want)
    pg = _like_grid(args, fld)
    outs = [fn(fld, m, pg) for m in _methods(args)]
    return _finish_pair(args, ctx, outs, args.op)


def cmd_propagate(args, ctx):
    cfg = load_config(args.config)
    fld = read_field(args.input)
    p = cfg.propagation
    rhs = canonical_rhs(args.rhs) if args.rhs else (p.rhs_kind if p else "phase_factorized")
    if rhs == "schrodinger_reference" and isinstance(fld, PhaseField):
        fld = qp_to_psi_q(fld)
    elif rhs != "schrodinger_reference" and isinstance(fld, WaveFn):
        fld = psi_to_qp(fld)
    t1 = args.t1 if args.t1 is not None else (p.t1 if p else None)
    if t1 is None:
        raise ConfigError("no end time: pass --t1 or enable [propagation] in the config")
    pcfg = PropagatorConfig(
        t1=t1,
        rtol=args.rtol if args.rtol is not None else (p.rtol if p else 1e-8),
        atol=args.atol if args.atol is not None else (p.atol if p else 1e-10),
        potential=cfg.potential,
        kinetic=cfg.kinetic,
        rhs_kind=rhs,
        snapshot_every=None,
    )
    run = cash_karp_propagate(fld, pcfg)
    _write(run.final, args.out, ctx, args.csv, config_sha256=cfg.sha256)
    st = run.step_stats
    _emit({"out": args.out, "t1": t1, "rhs": rhs, "accepted": st.accepted, "rejected": st.rejected, "rhs_evals": st.rhs_evals})
    return EXIT_OK


def _methods(args) -> list[str]:
    return ["fast", "reference"] if args.method == "both" else [args.method]


def _two_routes(args, fld, via_psi, via_qp):
    if isinstance(fld, WaveFn) and fld.is_position:
        return [via_psi(fld, m) for m in _methods(args)]
    if isinstance(fld, PhaseField):
        return [via_qp(fld, m) for m in _methods(args)]
    raise FieldFormatError(f"{args.input}: expected wavefn_q or phase_field")


def _finish_pair(args, ctx, outs, name):
    info = {"out": args.out, "from": name}
    if len(outs) == 2:
        info["fast_vs_reference_linf"] = _max_abs(*outs)
    _write(outs[0], args.out, ctx, args.csv)
    _emit(info)
    if len(outs) == 2 and args.tol is not None and info["fast_vs_reference_linf"] > args.tol:
        return EXIT_GATE
    return EXIT_OK


def cmd_wigner(args, ctx):
    fld = read_field(args.input)
    outs = _two_routes(args, fld, lambda f, m: psi_to_wigner(f, method=m), lambda f, m: qp_to_wigner_1d(f, method=m))
    return _finish_pair(args, ctx, outs, "psi" if isinstance(fld, WaveFn) else "qp")


def cmd_kirkwood(args, ctx):
    fld = read_field(args.input)
    outs = _two_routes(args, fld, lambda f, m: psi_to_kirkwood(f, method=m), lambda f, m: qp_to_kirkwood(f, method=m))
    return _finish_pair(args, ctx, outs, "psi" if isinstance(fld, WaveFn) else "qp")


def cmd_husimi(args, ctx):
    fld = read_field(args.input)
    rho = psi_to_qp(fld) if isinstance(fld, WaveFn) else fld
    _write(husimi(rho), args.out, ctx, args.csv)
    _emit({"out": args.out})
    return EXIT_OK


def _observable(name: str, potential, kinetic) -> ObservableSpec:
    table = {
        "1": ObservableSpec.identity,
        "q": ObservableSpec.position,
        "p": ObservableSpec.momentum,
        "V": lambda: ObservableSpec.position(potential, label="V"),
        "T": lambda: ObservableSpec.momentum(kinetic, label="T"),
        "H": lambda: ObservableSpec.hamiltonian(potential, kinetic),
    }
    if name not in table:
        raise ConfigError(f"unknown observable {name!r}; choose from {sorted(table)}")
    return table[name]()


def _as_qp(path):
    fld = read_field(path)
    if isinstance(fld, WaveFn):
        if not fld.is_position:
            raise FieldFormatError(f"{path}: expected wavefn_q or phase_field")
        return psi_to_qp(fld)
    if not isinstance(fld, PhaseField):
        raise FieldFormatError(f"{path}: expected wavefn_q or phase_field, found a real field")
    return fld


def cmd_expect(args, ctx):
    rho = _as_qp(args.input)
    potential, kinetic, _ = _model(args)
    obs = _observable(args.obs, potential, kinetic)
    info = {"obs": args.obs}
    if args.method in ("direct", "both"):
        info["direct"] = expectation_direct(rho, obs)
    if args.method == "literal":
        info["literal"] = expectation_direct(rho, obs, method="literal")
    if args.method in ("reduced", "both"):
        info["reduced"] = expectation_reduced(rho, obs)
    if args.method == "both":
        info["difference"] = abs(info["direct"] - info["reduced"])
    _emit(info)
    if args.method == "both" and args.tol is not None and info["difference"] > args.tol:
        return EXIT_GATE
    return EXIT_OK


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise ConfigError(f"{SEED_ENV}={env!r} is not an integer") from exc


def cmd_mc(args, ctx):
    rho = _as_qp(args.input)
    seed = _seed(args)
    cfg = McConfig(sample_count=args.samples, seed=seed, batch=args.batch)
    if args.estimator == "identity":
        if args.target is None:
            raise ConfigError("mc identity needs --target Q P")
        est = mc_identity_estimate(rho, tuple(args.target), cfg)
    else:
        potential, kinetic, _ = _model(args)
        est = mc_expectation_estimate(rho, _observable(args.obs, potential, kinetic), cfg)
    _emit(
        {
            "estimator": args.estimator,
            "re": est.value.real,
            "im": est.value.imag,
            "stderr": est.stderr,
            "samples": est.sample_count,
            "seed": est.seed,
            "batch": cfg.batch,
        }
    )
    return EXIT_OK


def cmd_identity_check(args, ctx):
    rho = _as_qp(args.input)
    info = {}
    if args.method in ("fast", "both"):
        info["fast_linf"] = _max_abs(phase_identity(rho, "fast"), rho)
    if args.method in ("reference", "both"):
        info["reference_linf"] = _max_abs(phase_identity(rho, "reference"), rho)
    worst = max(info.values())
    info.update(tol=args.tol, passed=worst <= args.tol)
    _emit(info)
    return EXIT_OK if info["passed"] else EXIT_GATE


def cmd_compare(args, ctx):
    a, ha = read_field_with_header(args.a)
    b, hb = read_field_with_header(args.b)
    if ha["kind"] != hb["kind"]:
        raise FieldFormatError(f"kind mismatch: {args.a} is {ha['kind']}, {args.b} is {hb['kind']}")
    d = compare_fields(a, b)
    value = d.linf if args.norm == "linf" else d.l2
    info = {"linf": d.linf, "l2": d.l2, "norm": args.norm}
    if args.tol is not None:
        info.update(tol=args.tol, passed=value <= args.tol)
    _emit(info)
    return EXIT_GATE if args.tol is not None and value > args.tol else EXIT_OK


def cmd_run_experiment(args, ctx):
    cfg = load_config(args.config)
    report = run_experiment(cfg, args.out, {"command": ctx.command, "seed": _seed(args)})
    for g in report.gates:
        print(f"{'PASS' if g.passed else 'FAIL'} {g.name}: {g.value:.3e} (tol {g.tol:.0e})")
    print(f"report: {os.path.join(args.out, 'report.json')}")
    return EXIT_OK if report.passed else EXIT_GATE


# Parser --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qpdyn", description="Phase-space quantum dynamics toolkit.")
    ap.add_argument("--version", action="version", version=f"qpdyn {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def io(p, out=True):
        p.add_argument("--in", dest="input", required=True, help="input field file")
        if out:
            p.add_argument("--out", required=True, help="output field file")
            p.add_argument("--csv", help="also export the output as CSV")

    def method(p, choices=("fast", "reference", "both"), default="fast"):
        p.add_argument("--method", choices=choices, default=default)
        p.add_argument("--tol", type=float, help="gate for --method both")

    p = sub.add_parser("make-state", help="sample a normalized superposition of coherent states")
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--q-min", type=float, default=-2.0)
    p.add_argument("--q-max", type=float, default=50.0)
    p.add_argument("--coherent", action="append", required=True, metavar="C,Q0,P0", help="repeat for each term")
    p.add_argument("--space", choices=("q", "p"), default="q")
    p.add_argument("--out", required=True)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_make_state)

    p = sub.add_parser("transform", help="convert between psi(q), psi(p) and rho(q,p)")
    p.add_argument("--op", choices=sorted(_TRANSFORMS), required=True)
    io(p)
    p.add_argument("--like", help="field on the target phase grid (needed for momentum-space input)")
    method(p)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("propagate", help="propagate a state with the adaptive Cash-Karp integrator")
    io(p)
    p.add_argument("--config", required=True, help="config file or bundled name (model and tolerances)")
    p.add_argument("--rhs", choices=("phase-direct", "phase-fact", "schrodinger-ref"))
    p.add_argument("--t1", type=float)
    p.add_argument("--rtol", type=float)
    p.add_argument("--atol", type=float)
    p.set_defaults(func=cmd_propagate)

    for name, func, text in (
        ("wigner", cmd_wigner, "Wigner function from psi(q) or rho(q,p)"),
        ("kirkwood", cmd_kirkwood, "Kirkwood-type P(q,p) from psi(q) or rho(q,p)"),
    ):
        p = sub.add_parser(name, help=text)
        io(p)
        method(p)
        p.set_defaults(func=func)

    p = sub.add_parser("husimi", help="Husimi density |rho|^2")
    io(p)
    p.set_defaults(func=cmd_husimi)

    p = sub.add_parser("expect", help="mean value of f(q) + g(p)")
    io(p, out=False)
    p.add_argument("--obs", default="q", help="1, q, p, V, T or H (V, T, H use --config)")
    p.add_argument("--config")
    method(p, choices=("direct", "reduced", "literal", "both"), default="both")
    p.set_defaults(func=cmd_expect)

    p = sub.add_parser("mc", help="Monte-Carlo estimates by sampling |rho|")
    p.add_argument("estimator", choices=("identity", "expect"))
    io(p, out=False)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, help=f"RNG seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--batch", type=int, default=50)
    p.add_argument("--target", type=float, nargs=2, metavar=("Q", "P"))
    p.add_argument("--obs", default="1")
    p.add_argument("--config")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("identity-check", help="apply the phase-space identity transform and measure the change")
    io(p, out=False)
    p.add_argument("--method", choices=("fast", "reference", "both"), default="fast")
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_identity_check)

    p = sub.add_parser("compare", help="L-infinity and L2 differences between two field files")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--norm", choices=("linf", "l2"), default="linf")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("run-experiment", help="run a config end to end and evaluate its gates")
    p.add_argument("--config", required=True, help="config file or bundled name: morse, harmonic, fig12")
    p.add_argument("--out", required=True, help="artifact directory")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_run_experiment)
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    ctx = _Context(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args, ctx)
    except (NumericalFailure, ImaginaryResidueError, ZeroNormError) as exc:
        print(f"qpdyn {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, FieldFormatError, GridError, UnsupportedModelError, QpdynError, ValueError, OSError) as exc:
        print(f"qpdyn {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
