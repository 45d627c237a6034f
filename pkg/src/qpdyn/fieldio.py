"""
Self-describing binary field files and CSV export.

Layout of a field file::

    b"QPDYNFLD"                 8-byte magic
    uint64 little-endian        length of the header in bytes
    UTF-8 JSON header           format_version, kind, axes, dtype, layout, provenance
    payload                     raw little-endian samples, q-major

Complex payloads are interleaved ``(re, im)`` float64 pairs. Floats in the
header are written with ``repr`` precision so grids round-trip exactly.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .errors import FieldFormatError, GridError, KindMismatchError
from .fields import PhaseField, RealField, WaveFn
from .grid import MOMENTUM, POSITION, Grid1D, PhaseGrid

MAGIC = b"QPDYNFLD"
FORMAT_VERSION = 1
KINDS = ("wavefn_q", "wavefn_p", "phase_field", "real_field")
_DTYPES = {"complex128-le": np.dtype("<c16"), "float64-le": np.dtype("<f8")}


def field_kind(field) -> str:
    if isinstance(field, WaveFn):
        return "wavefn_q" if field.is_position else "wavefn_p"
    if isinstance(field, PhaseField):
        return "phase_field"
    if isinstance(field, RealField):
        return "real_field"
    raise TypeError(f"not a field: {type(field).__name__}")


def _axis_dict(ax: Grid1D) -> dict:
    return {"n": ax.n, "origin": ax.origin, "step": ax.step, "axis_kind": ax.axis_kind}


def _axis_from(d: dict) -> Grid1D:
    try:
        return Grid1D(int(d["n"]), float(d["origin"]), float(d["step"]), d["axis_kind"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FieldFormatError(f"malformed axis entry {d!r}") from exc


def _axes_of(field) -> list[Grid1D]:
    if isinstance(field, WaveFn):
        return [field.grid]
    return [field.grid.q_axis, field.grid.p_axis]


def encode_field(field, provenance: dict | None = None) -> bytes:
    kind = field_kind(field)
    dtype = "float64-le" if kind == "real_field" else "complex128-le"
    header = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "axes": [_axis_dict(a) for a in _axes_of(field)],
        "dtype": dtype,
        "layout": "q-major",
        "provenance": provenance or {},
    }
    hb = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = np.ascontiguousarray(field.values, dtype=_DTYPES[dtype]).tobytes()
    return MAGIC + struct.pack("<Q", len(hb)) + hb + payload


@contextmanager
def atomic_open(path, mode: str = "wb"):
    """Open a temporary sibling of ``path`` and rename it into place on success."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_field(field, path, provenance: dict | None = None) -> Path:
    """Write ``field`` atomically (temporary file + rename)."""
    path = Path(path)
    data = encode_field(field, provenance)
    with atomic_open(path, "wb") as fh:
        fh.write(data)
    return path


def _split(data: bytes, source: str) -> tuple[dict, bytes]:
    if len(data) < 16 or data[:8] != MAGIC:
        raise FieldFormatError(f"{source}: not a field file (bad magic)")
    (hlen,) = struct.unpack("<Q", data[8:16])
    if 16 + hlen > len(data):
        raise FieldFormatError(f"{source}: header length {hlen} runs past end of file")
    try:
        header = json.loads(data[16 : 16 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FieldFormatError(f"{source}: unreadable header ({exc})") from exc
    return header, data[16 + hlen :]


def decode_field(data: bytes, kind: str | None = None, source: str = "<bytes>"):
    header, payload = _split(data, source)
    if header.get("format_version") != FORMAT_VERSION:
        raise FieldFormatError(f"{source}: unknown format_version {header.get('format_version')!r}")
    got = header.get("kind")
    if got not in KINDS:
        raise FieldFormatError(f"{source}: unknown kind {got!r}")
    if kind is not None and got != kind:
        raise KindMismatchError(f"{source}: expected a {kind} file, found {got}")
    if header.get("layout") != "q-major":
        raise FieldFormatError(f"{source}: unsupported layout {header.get('layout')!r}")
    dtype = _DTYPES.get(header.get("dtype"))
    expected_dtype = "float64-le" if got == "real_field" else "complex128-le"
    if dtype is None or header["dtype"] != expected_dtype:
        raise FieldFormatError(f"{source}: dtype {header.get('dtype')!r} does not fit kind {got}")
    axes = [_axis_from(a) for a in header.get("axes", [])]
    if len(axes) != (1 if got.startswith("wavefn") else 2):
        raise FieldFormatError(f"{source}: kind {got} needs {1 if got.startswith('wavefn') else 2} axes")
    shape = tuple(a.n for a in axes)
    want = int(np.prod(shape)) * dtype.itemsize
    if len(payload) != want:
        raise FieldFormatError(
            f"{source}: payload is {len(payload)} bytes, expected {want} for shape {shape} {header['dtype']}"
        )
    values = np.frombuffer(payload, dtype=dtype).reshape(shape)
    want_axis = {"wavefn_q": POSITION, "wavefn_p": MOMENTUM}.get(got, POSITION)
    if axes[0].axis_kind != want_axis:
        raise FieldFormatError(f"{source}: axis kind does not match {got}")
    if got.startswith("wavefn"):
        return WaveFn(axes[0], values), header
    try:
        pg = PhaseGrid(axes[0], axes[1])
    except GridError as exc:
        raise FieldFormatError(f"{source}: {exc}") from exc
    cls = RealField if got == "real_field" else PhaseField
    return cls(pg, values), header


def read_field_with_header(path, kind: str | None = None):
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise FieldFormatError(f"{path}: {exc.strerror}") from exc
    return decode_field(data, kind, str(path))


def read_field(path, kind: str | None = None):
    """Load a field; ``kind`` makes a mismatched file a :class:`KindMismatchError`."""
    return read_field_with_header(path, kind)[0]


def export_csv(field, path) -> Path:
    """CSV with ``q,p,re,im`` (or ``q,p,value``) rows in q-major order.

    Wave functions get a single coordinate column (``q`` or ``p``). Numbers
    carry 17 significant digits, enough to recover every float64 exactly.
    """
    path = Path(path)
    if isinstance(field, WaveFn):
        coords = [field.grid.points]
        names = ["q" if field.is_position else "p"]
    else:
        q, p = field.grid.mesh()
        coords = [q.ravel(), p.ravel()]
        names = ["q", "p"]
    v = np.asarray(field.values).ravel()
    if isinstance(field, RealField):
        cols, names = coords + [v], names + ["value"]
    else:
        cols, names = coords + [v.real, v.imag], names + ["re", "im"]
    with atomic_open(path, "w") as fh:
        np.savetxt(fh, np.column_stack(cols), fmt="%.17g", delimiter=",", header=",".join(names), comments="")
    return path
