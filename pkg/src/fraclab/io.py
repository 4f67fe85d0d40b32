"""Deterministic CSV output with provenance-free comment headers.

Every file starts with ``#`` lines recording the package and library
versions and the config hash.  Floats are written with ``repr`` so identical
inputs give byte-identical files; no timestamps are written.
"""

import csv
import os
from contextlib import contextmanager

import numpy as np
import scipy
from filelock import FileLock, Timeout

__all__ = ["header_lines", "write_csv", "read_csv", "locked_directory", "DirectoryLocked"]

VERSION = "0.1.0"


class DirectoryLocked(RuntimeError):
    """Another process holds the output directory."""


def header_lines(config_hash, extra=None):
    lines = [
        f"fraclab {VERSION}",
        f"numpy {np.__version__}; scipy {scipy.__version__}",
        f"config-sha256 {config_hash}",
    ]
    for key, val in (extra or {}).items():
        lines.append(f"{key} {val}")
    return lines


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, columns, rows, config_hash, extra=None):
    """Write ``rows`` under a ``#`` header and a column line.

    Parameters
    ----------
    path : str
    columns : sequence of str
    rows : iterable of sequences
    config_hash : str
    extra : dict, optional
        Additional ``key value`` header lines (for example warnings).
    """
    with open(path, "w", newline="") as fh:
        for line in header_lines(config_hash, extra):
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return path


def read_csv(path):
    """Return ``(header_lines, columns, rows)`` with cells as strings."""
    header, body = [], []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                header.append(line[1:].strip())
            else:
                body.append(line)
    rows = list(csv.reader(body))
    return header, rows[0], rows[1:]


@contextmanager
def locked_directory(directory):
    """Create ``directory`` and hold an exclusive lock on it for the block."""
    os.makedirs(directory, exist_ok=True)
    lock = FileLock(os.path.join(directory, ".fraclab.lock"))
    try:
        lock.acquire(timeout=0)
    except Timeout:
        raise DirectoryLocked(f"output directory {directory} is locked by another run") from None
    try:
        yield directory
    finally:
        lock.release()
