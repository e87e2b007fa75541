"""Deterministic CSV and JSON output.

All numeric output is formatted with 17 significant digits ('%.17g'),
which round-trips IEEE doubles, uses '.' as the decimal separator and
',' as the delimiter, and makes reruns byte-identical for identical
inputs.  Manifest files record a sha256 per produced artifact.
"""

from __future__ import annotations

import hashlib
import json
import os
from typing import Iterable, Sequence

import numpy as np


def format_float(x) -> str:
    """17-significant-digit representation; complex values get re/im pairs."""
    if isinstance(x, complex) or isinstance(x, np.complexfloating):
        raise TypeError("complex values must be split into re/im columns")
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write rows of numbers under a header, deterministically formatted."""
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_float(v) for v in row) + "\n")


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(out_dir, paths: Sequence[str], extra: dict | None = None) -> str:
    """Write manifest.json listing each artifact with its sha256."""
    entries = {}
    for p in paths:
        entries[os.path.basename(p)] = sha256_file(p)
    payload = {"artifacts": entries}
    if extra:
        payload.update(extra)
    manifest_path = os.path.join(out_dir, "manifest.json")
    write_json(manifest_path, payload)
    return manifest_path
