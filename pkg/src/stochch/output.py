"""Run-directory artifacts: CSV tables and binary snapshots."""

from __future__ import annotations

import csv
import os
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError
from .spectral import Domain


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def write_snapshot(path, domain: Domain, values: np.ndarray, t: float) -> Path:
    """ASCII header ``CHS1 <ndim> <n1> [<n2>] <t>`` then little-endian f8 values."""
    path = Path(path)
    values = np.asarray(values, dtype="<f8")
    if values.shape != domain.shape:
        raise ValueError("snapshot values must live on the domain grid")
    dims = " ".join(str(n) for n in domain.shape)
    header = f"CHS1 {domain.ndim} {dims} {'%.17g' % t}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(values).tobytes(order="C"))
    return path


def read_snapshot(path) -> tuple[float, np.ndarray]:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if not header or header[0] != "CHS1":
            raise ParseError(f"{path}: not a CHS1 snapshot")
        ndim = int(header[1])
        shape = tuple(int(v) for v in header[2 : 2 + ndim])
        t = float(header[2 + ndim])
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != int(np.prod(shape)):
        raise ParseError(f"{path}: expected {np.prod(shape)} values, found {data.size}")
    return t, data.reshape(shape).astype(float)


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)
    return path


def ensure_dir(path) -> Path:
    os.makedirs(path, exist_ok=True)
    return Path(path)
