"""
Experiment configuration files (INI syntax, read with :mod:`configparser`).

Sections: ``[grid]``, ``[initial_state]``, ``[potential]``, ``[kinetic]``,
``[propagation]``, ``[outputs]`` and ``[gates]``. See the bundled files in
``qpdyn/configs`` for complete examples.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .dynamics import RHS_KINDS
from .errors import ConfigError
from .states import Free, Harmonic, Morse, NonRelativistic, Relativistic

REPRESENTATIONS = ("psi_q", "psi_p", "qp", "kirkwood", "wigner", "husimi")
GATES = (
    "l2_psi_q",
    "l2_psi_p",
    "l2_kirkwood",
    "l2_wigner",
    "trace_drift",
    "energy_drift",
    "ehrenfest",
    "roundtrip_linf",
    "trace_norm",
    "coherence_ratio",
)
RHS_ALIASES = {
    "phase-direct": "phase_direct",
    "phase-fact": "phase_factorized",
    "schrodinger-ref": "schrodinger_reference",
}
BUNDLED = ("morse", "harmonic", "fig12")


@dataclass(frozen=True)
class GridSection:
    n_q: int
    q_min: float
    q_max: float


@dataclass(frozen=True)
class PropagationSection:
    t1: float
    rtol: float = 1e-8
    atol: float = 1e-10
    rhs_kind: str = "phase_factorized"
    snapshot_stride: float | None = None
    reference: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    grid: GridSection
    terms: tuple[tuple[complex, float, float], ...]
    potential: object
    kinetic: object
    propagation: PropagationSection | None
    representations: tuple[str, ...] = REPRESENTATIONS
    csv: bool = True
    gates: dict = field(default_factory=dict)
    sha256: str = ""
    source: str = ""


def canonical_rhs(kind: str) -> str:
    kind = RHS_ALIASES.get(kind, kind)
    if kind not in RHS_KINDS:
        raise ConfigError(f"unknown rhs kind {kind!r}; choose from {sorted(RHS_KINDS + tuple(RHS_ALIASES))}")
    return kind


def _float(sec, key, default=None) -> float:
    try:
        if default is None and key not in sec:
            raise ConfigError(f"[{sec.name}] is missing {key!r}")
        return sec.getfloat(key, fallback=default)
    except ValueError as exc:
        raise ConfigError(f"[{sec.name}] {key}: {exc}") from exc


def _section(cp, name, required=True):
    if name not in cp:
        if required:
            raise ConfigError(f"missing section [{name}]")
        return None
    return cp[name]


def _terms(sec) -> tuple:
    raw = sec.get("terms", "").strip()
    if not raw:
        raise ConfigError("[initial_state] needs at least one 'coeff q0 p0' line in terms")
    out = []
    for line in raw.splitlines():
        parts = line.split()
        if len(parts) != 3:
            raise ConfigError(f"[initial_state] bad term {line!r}; expected 'coeff q0 p0'")
        try:
            out.append((complex(parts[0]), float(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise ConfigError(f"[initial_state] bad term {line!r}: {exc}") from exc
    return tuple(out)


def _potential(sec):
    kind = sec.get("kind", "").strip().lower()
    try:
        if kind == "morse":
            return Morse(
                v0=_float(sec, "v0", 1.0), depth=_float(sec, "depth", 0.1), a=_float(sec, "a", 0.77), q_eq=_float(sec, "q_eq", 4.0)
            )
        if kind == "harmonic":
            return Harmonic(m=_float(sec, "m", 1.0), omega=_float(sec, "omega", 1.0))
        if kind == "free":
            return Free()
    except ValueError as exc:
        raise ConfigError(f"[potential] {exc}") from exc
    raise ConfigError(f"[potential] unknown kind {kind!r}; use morse, harmonic or free")


def _kinetic(sec):
    if sec is None:
        return NonRelativistic()
    kind = sec.get("kind", "nonrelativistic").strip().lower()
    try:
        if kind == "nonrelativistic":
            return NonRelativistic(m=_float(sec, "m", 1.0))
        if kind == "relativistic":
            return Relativistic(
                m0=_float(sec, "m0", 1.0),
                c=_float(sec, "c", Relativistic.c),
                subtract_rest_energy=sec.getboolean("subtract_rest_energy", fallback=False),
            )
    except ValueError as exc:
        raise ConfigError(f"[kinetic] {exc}") from exc
    raise ConfigError(f"[kinetic] unknown kind {kind!r}; use nonrelativistic or relativistic")


def _propagation(sec):
    if sec is None or not sec.getboolean("enabled", fallback=True):
        return None
    stride = sec.get("snapshot_stride", "").strip()
    prop = PropagationSection(
        t1=_float(sec, "t1"),
        rtol=_float(sec, "rtol", 1e-8),
        atol=_float(sec, "atol", 1e-10),
        rhs_kind=canonical_rhs(sec.get("rhs_kind", "phase_factorized").strip()),
        snapshot_stride=float(stride) if stride else None,
        reference=sec.getboolean("reference", fallback=True),
    )
    if not (prop.t1 > 0 and prop.rtol > 0 and prop.atol > 0):
        raise ConfigError("[propagation] t1, rtol and atol must be positive")
    return prop


def parse_config(text: str, name: str = "experiment", source: str = "<string>") -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    g = _section(cp, "grid")
    try:
        n_q = g.getint("n_q")
    except ValueError as exc:
        raise ConfigError(f"[grid] n_q: {exc}") from exc
    if n_q is None or n_q < 2:
        raise ConfigError("[grid] n_q must be an integer >= 2")
    grid = GridSection(n_q, _float(g, "q_min"), _float(g, "q_max"))
    if not grid.q_max > grid.q_min:
        raise ConfigError("[grid] q_max must exceed q_min")

    out = _section(cp, "outputs", required=False)
    reps = tuple(out.get("representations", " ".join(REPRESENTATIONS)).split()) if out else REPRESENTATIONS
    bad = set(reps) - set(REPRESENTATIONS)
    if bad:
        raise ConfigError(f"[outputs] unknown representations {sorted(bad)}")

    gates = {}
    gsec = _section(cp, "gates", required=False)
    if gsec is not None:
        for key in gsec:
            if key not in GATES:
                raise ConfigError(f"[gates] unknown gate {key!r}; known gates: {', '.join(GATES)}")
            gates[key] = _float(gsec, key)

    prop = _propagation(_section(cp, "propagation", required=False))
    needs_prop = {"l2_psi_q", "l2_psi_p", "l2_kirkwood", "l2_wigner", "trace_drift", "energy_drift", "ehrenfest"}
    if prop is None and needs_prop & gates.keys():
        raise ConfigError(f"gates {sorted(needs_prop & gates.keys())} need an enabled [propagation] section")

    return ExperimentConfig(
        name=name,
        grid=grid,
        terms=_terms(_section(cp, "initial_state")),
        potential=_potential(_section(cp, "potential")),
        kinetic=_kinetic(_section(cp, "kinetic", required=False)),
        propagation=prop,
        representations=reps,
        csv=out.getboolean("csv", fallback=True) if out else True,
        gates=gates,
        sha256=hashlib.sha256(text.encode("utf-8")).hexdigest(),
        source=source,
    )


def load_config(path) -> ExperimentConfig:
    """Read a config file, or a bundled one by name (``morse``, ``harmonic``, ``fig12``)."""
    if str(path) in BUNDLED:
        text = resources.files("qpdyn.configs").joinpath(f"{path}.cfg").read_text()
        return parse_config(text, name=str(path), source=f"bundled:{path}.cfg")
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{p}: {exc.strerror}") from exc
    return parse_config(text, name=p.stem, source=str(p))
