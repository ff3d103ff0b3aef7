"""File formats.

* Matrices: dense CSV, one row per line, no header.
* Observations: CSV with header ``row,col,y`` (zero-based indices) plus a
  JSON sidecar with the same stem holding ``dims``, ``noise``, ``sigma``,
  ``seed`` and ``n``.
* Everything is written atomically (temporary file in the target directory,
  then ``os.replace``) and formatted deterministically, so identical inputs
  give byte-identical files.
"""

import io as _io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .sampling import MatrixDims, NoiseModel, ObservationSet, SamplingDistribution

__all__ = [
    "atomic_write_text",
    "format_float",
    "to_jsonable",
    "write_json",
    "read_json",
    "write_matrix_csv",
    "read_matrix_csv",
    "write_distribution_csv",
    "read_distribution_csv",
    "sidecar_path",
    "write_observations",
    "read_observations",
]


def atomic_write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_float(x):
    """Shortest round-tripping representation."""
    return repr(float(x))


def to_jsonable(obj):
    """Convert numpy scalars/arrays and non-finite floats into plain JSON values.

    ``inf``/``nan`` become the strings ``"inf"``, ``"-inf"``, ``"nan"``.
    """
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def write_json(path, obj):
    atomic_write_text(path, json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _matrix_text(A):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return "".join(",".join(format_float(v) for v in row) + "\n" for row in A)


def write_matrix_csv(path, A):
    atomic_write_text(path, _matrix_text(A))


def read_matrix_csv(path):
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_distribution_csv(path, dist):
    write_matrix_csv(path, dist.pi)


def read_distribution_csv(path):
    """Read a dense probability table; renormalizes round-off from the text form."""
    pi = read_matrix_csv(path)
    dims = MatrixDims(*pi.shape)
    return SamplingDistribution(dims, pi / pi.sum())


def sidecar_path(csv_path):
    return Path(csv_path).with_suffix(".json")


def write_observations(csv_path, obs):
    """Write ``obs`` to ``csv_path`` and its JSON sidecar; returns both paths."""
    buf = _io.StringIO()
    buf.write("row,col,y\n")
    for j, k, y in zip(obs.rows.tolist(), obs.cols.tolist(), obs.y.tolist()):
        buf.write(f"{j},{k},{format_float(y)}\n")
    atomic_write_text(csv_path, buf.getvalue())
    meta = {
        "dims": [obs.dims.m1, obs.dims.m2],
        "noise": obs.noise.kind,
        "sigma": obs.noise.sigma,
        "orlicz_K": obs.noise.orlicz_K,
        "seed": obs.seed,
        "n": obs.n,
    }
    side = sidecar_path(csv_path)
    write_json(side, meta)
    return Path(csv_path), side


def read_observations(csv_path):
    meta = read_json(sidecar_path(csv_path))
    with open(csv_path) as fh:
        header = fh.readline().strip()
        if header != "row,col,y":
            raise ValueError(f"{csv_path}: expected header 'row,col,y', got {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[0] != meta["n"]:
        raise ValueError(f"{csv_path}: sidecar says n={meta['n']} but found {data.shape[0]} rows")
    noise = NoiseModel(meta["noise"], meta["sigma"], meta.get("orlicz_K", 1.0))
    return ObservationSet(
        MatrixDims(*meta["dims"]),
        data[:, 0].astype(np.int64),
        data[:, 1].astype(np.int64),
        data[:, 2],
        noise=noise,
        seed=meta.get("seed"),
    )
