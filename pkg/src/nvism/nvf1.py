"""NVF1 field files: 6-line ASCII header + little-endian float64 payload.

Header lines: magic ``NVF1``, ``n``, ``s``, ``plane`` (``z``|``k``), ``kind``
(``real``|``complex``), ``encoding`` (``le-f64``).  The payload is row-major;
complex fields interleave (re, im) pairs.  A CSV export (x,y,re,im) is
provided for small grids.  Sidecar files carry key:value metadata.
"""

from __future__ import annotations

import os
from typing import Union

import numpy as np

from .grids import ComplexField, Grid2D

__all__ = [
    "NVF1Error",
    "write_field",
    "read_field",
    "write_csv",
    "write_sidecar",
    "read_sidecar",
    "sidecar_path",
]

MAGIC = "NVF1"
ENCODING = "le-f64"


class NVF1Error(ValueError):
    """Malformed NVF1 header or payload."""


def _format_float(x: float) -> str:
    return repr(float(x))


def write_field(path: Union[str, os.PathLike], f: ComplexField, kind: str = "complex") -> None:
    """Write a field; kind='real' stores only the real part (it must dominate)."""
    if kind not in ("real", "complex"):
        raise NVF1Error(f"kind must be 'real' or 'complex', got {kind!r}")
    f.check_finite()
    header = "\n".join(
        [MAGIC, str(f.grid.n), _format_float(f.grid.s), f.grid.plane, kind, ENCODING]
    ) + "\n"
    if kind == "complex":
        payload = np.empty((f.grid.n, f.grid.n, 2), dtype="<f8")
        payload[..., 0] = f.values.real
        payload[..., 1] = f.values.imag
    else:
        payload = f.values.real.astype("<f8")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(payload.tobytes(order="C"))


def read_field(path: Union[str, os.PathLike]) -> tuple[ComplexField, str]:
    """Read a field; returns (field, kind)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    # Header = first 6 newline-terminated ASCII lines.
    pos, lines = 0, []
    for _ in range(6):
        nl = raw.find(b"\n", pos)
        if nl < 0:
            raise NVF1Error("truncated NVF1 header")
        lines.append(raw[pos:nl].decode("ascii", errors="replace").strip())
        pos = nl + 1
    magic, n_s, s_s, plane, kind, enc = lines
    if magic != MAGIC:
        raise NVF1Error(f"bad magic {magic!r}")
    if enc != ENCODING:
        raise NVF1Error(f"unsupported encoding {enc!r}")
    if kind not in ("real", "complex"):
        raise NVF1Error(f"unknown kind {kind!r}")
    if plane not in ("z", "k"):
        raise NVF1Error(f"unknown plane {plane!r}")
    try:
        n = int(n_s)
        s = float(s_s)
    except ValueError as exc:
        raise NVF1Error(f"bad header numbers: {exc}") from exc
    try:
        grid = Grid2D(n=n, s=s, plane=plane)
    except ValueError as exc:
        raise NVF1Error(str(exc)) from exc
    doubles = n * n * (2 if kind == "complex" else 1)
    body = raw[pos:]
    if len(body) != 8 * doubles:
        raise NVF1Error(f"payload has {len(body)} bytes, expected {8 * doubles}")
    data = np.frombuffer(body, dtype="<f8")
    if kind == "complex":
        data = data.reshape(n, n, 2)
        values = data[..., 0] + 1j * data[..., 1]
    else:
        values = data.reshape(n, n).astype(np.complex128)
    field = ComplexField(grid, values)
    field.check_finite()
    return field, kind


def write_csv(path: Union[str, os.PathLike], f: ComplexField) -> None:
    """x,y,re,im export, row-major; intended for small grids."""
    x, y = f.grid.meshes()
    with open(path, "w", encoding="ascii") as fh:
        fh.write("x,y,re,im\n")
        for i in range(f.grid.n):
            for j in range(f.grid.n):
                v = f.values[i, j]
                fh.write(
                    f"{float(x[i, j])!r},{float(y[i, j])!r},"
                    f"{float(v.real)!r},{float(v.imag)!r}\n"
                )


def sidecar_path(path: Union[str, os.PathLike]) -> str:
    return str(path) + ".meta"


def write_sidecar(path: Union[str, os.PathLike], entries: dict) -> None:
    """Plain-text key:value sidecar next to a field file (sorted, lossless)."""
    with open(path, "w", encoding="ascii") as fh:
        for key in sorted(entries):
            value = entries[key]
            if isinstance(value, float):
                value = repr(value)
            fh.write(f"{key}: {value}\n")


def read_sidecar(path: Union[str, os.PathLike]) -> dict:
    out: dict[str, str] = {}
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise NVF1Error(f"bad sidecar line {line!r}")
            key, value = line.split(":", 1)
            out[key.strip()] = value.strip()
    return out
