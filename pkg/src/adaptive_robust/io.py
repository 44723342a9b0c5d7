"""Dataset files, update streams and atomic CSV output.

Binary dataset layout (little-endian)::

    int32 n | int32 d | n*d float64 values, row-major
"""

import csv
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .regression import SparseUpdate

_HEADER = struct.Struct("<ii")


class DataFormatError(ValueError):
    pass


def read_dataset(path):
    """Load an ``n x d`` matrix from ``.csv`` or the binary layout."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        try:
            X = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
        except ValueError as exc:
            raise DataFormatError(f"{path}: {exc}") from exc
    else:
        raw = path.read_bytes()
        if len(raw) < _HEADER.size:
            raise DataFormatError(f"{path}: file shorter than the 8-byte header")
        n, d = _HEADER.unpack_from(raw)
        if n < 0 or d < 0 or len(raw) != _HEADER.size + 8 * n * d:
            raise DataFormatError(f"{path}: header says {n}x{d} but payload is {len(raw) - _HEADER.size} bytes")
        X = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(n, d).astype(np.float64)
    if X.size == 0:
        raise DataFormatError(f"{path}: empty dataset")
    if not np.all(np.isfinite(X)):
        raise DataFormatError(f"{path}: dataset contains NaN or Inf")
    return X


def write_dataset_binary(path, X):
    X = np.ascontiguousarray(X, dtype="<f8")
    if X.ndim != 2:
        raise ValueError("dataset must be a matrix")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(*X.shape))
        fh.write(X.tobytes())


def write_dataset_csv(path, X):
    np.savetxt(path, np.asarray(X, dtype=np.float64), delimiter=",", fmt="%.17g")


def read_updates(path, n=None, K=None):
    """Parse a JSON-lines stream of ``{"round": r, "entries": [[i, v], ...]}``."""
    updates = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                upd = SparseUpdate.from_pairs(obj["entries"], K)
            except (ValueError, KeyError, TypeError) as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
            if n is not None:
                try:
                    upd.check(n)
                except IndexError as exc:
                    raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
            updates.append(upd)
    return updates


def write_updates(path, updates):
    with open(path, "w") as fh:
        for r, upd in enumerate(updates, 1):
            fh.write(json.dumps({"round": r, "entries": [[i, v] for i, v in upd.pairs()]}) + "\n")


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv_atomic(path, header, rows, fault_hook=None):
    """Write rows to a temp file in the target directory, then rename.

    ``fault_hook(i)`` runs after row ``i`` is buffered; an exception from it
    leaves no file at ``path``.
    """
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for i, row in enumerate(rows):
                w.writerow([_cell(v) for v in row])
                if fault_hook is not None:
                    fault_hook(i)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))
