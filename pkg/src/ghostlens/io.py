"""PGM, CSV and JSON writers/readers used by the command line."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .scene import GridGeometry, ObjectMask


def write_pgm(path, data: np.ndarray, maxval: int) -> None:
    """Binary (P5) graymap; 1D data is written as a single row."""
    a = np.atleast_2d(np.asarray(data))
    if a.ndim != 2:
        raise ValueError("PGM holds 1D or 2D data only")
    if not 0 < maxval < 65536:
        raise ValueError("maxval must be in 1..65535")
    if a.min() < 0 or a.max() > maxval:
        raise ValueError("pixel values outside 0..maxval")
    dtype = ">u1" if maxval < 256 else ">u2"
    h, w = a.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(a.astype(dtype).tobytes())


def read_pgm(path) -> tuple[np.ndarray, int]:
    raw = Path(path).read_bytes()
    fields, pos = [], 0
    while len(fields) < 4:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PGM header")
        fields.append(raw[start:pos])
    if fields[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (magic {fields[0]!r})")
    w, h, maxval = (int(f) for f in fields[1:])
    pos += 1  # single whitespace byte after maxval
    dtype = ">u1" if maxval < 256 else ">u2"
    count = w * h
    body = np.frombuffer(raw, dtype=dtype, count=count, offset=pos)
    return body.reshape(h, w).astype(np.int64), maxval


def save_mask(mask: ObjectMask, path) -> None:
    """|t| mapped linearly onto 0..255."""
    write_pgm(path, np.rint(np.abs(mask.transmittance) * 255).astype(int), 255)


def load_mask(path, grid: GridGeometry) -> ObjectMask:
    data, maxval = read_pgm(path)
    t = data / maxval
    if grid.dims == 1:
        if data.shape[0] != 1:
            raise ValueError(f"{path}: a 1D grid needs a single-row PGM, got {data.shape[0]} rows")
        t = t[0]
    if t.shape != grid.shape:
        raise ValueError(f"{path}: image shape {t.shape} does not match grid {grid.shape}")
    return ObjectMask(grid, t, name=Path(path).name)


def write_scaled_pgm(path, values: np.ndarray) -> dict:
    """16-bit PGM of ``values`` mapped linearly from [min, max]; the map goes to a
    sidecar ``<path>.json``.  A constant array is stored as all zeros."""
    lo, hi = float(np.min(values)), float(np.max(values))
    span = hi - lo
    q = np.zeros(values.shape, dtype=int) if span == 0 else np.rint((values - lo) / span * 65535).astype(int)
    write_pgm(path, q, 65535)
    meta = {"min": lo, "max": hi, "maxval": 65535, "value": "min + pixel / maxval * (max - min)"}
    write_json(Path(str(path) + ".json"), meta)
    return meta


def read_scaled_pgm(path) -> np.ndarray:
    data, maxval = read_pgm(path)
    meta = json.loads(Path(str(path) + ".json").read_text())
    return meta["min"] + data / maxval * (meta["max"] - meta["min"])


def write_csv(path, columns: dict[str, np.ndarray]) -> None:
    names = list(columns)
    rows = np.column_stack([np.asarray(columns[c], dtype=float) for c in names])
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_csv(path) -> dict[str, np.ndarray]:
    lines = Path(path).read_text().splitlines()
    names = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    return {n: data[:, i] for i, n in enumerate(names)}


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
