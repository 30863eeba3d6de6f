"""Content-addressed store for dispersion results.

Keys hash everything that determines a result: bitmap cells, the six
constants of both phases, lattice constant, the exact k-path, band count
and solver choice. Hits reproduce the stored result bit for bit. Writes
go through a temp file and an atomic rename, so concurrent processes can
share one cache directory.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .fem import DispersionResult, UnitCellSpec, WaveVector

_KEY_VERSION = 1


def cache_key(cell: UnitCellSpec, path, n_bands: int, solver: str) -> str:
    """SHA-256 over the full evaluation fingerprint."""
    mats = cell.materials
    payload = {
        "version": _KEY_VERSION,
        "resolution": cell.bitmap.resolution,
        "cells": cell.bitmap.cells.tobytes().hex(),
        "materials": [
            [repr(v) for v in (m.rho, m.E, m.nu, m.K, m.G, m.lam)]
            for m in (mats.soft, mats.hard)
        ],
        "lattice_constant": repr(cell.lattice_constant),
        "kpath": [[repr(k.kx), repr(k.ky)] for k in path],
        "n_bands": n_bands,
        "solver": solver,
    }
    blob = json.dumps(payload, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


class EvalCache:
    """Disk-backed cache; ``root=None`` keeps results in memory only."""

    def __init__(self, root=None):
        self.root = Path(root) if root is not None else None
        self._memory: dict[str, DispersionResult] = {}
        self.hits = 0
        self.misses = 0
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.npz"

    def get(self, key: str) -> DispersionResult | None:
        if key in self._memory:
            self.hits += 1
            return self._memory[key]
        if self.root is not None:
            p = self._path(key)
            if p.exists():
                with np.load(p) as data:
                    result = DispersionResult(
                        kpath=tuple(WaveVector(kx, ky) for kx, ky in zip(data["kx"], data["ky"])),
                        arclength=data["arclength"],
                        frequencies=data["frequencies"],
                    )
                self._memory[key] = result
                self.hits += 1
                return result
        self.misses += 1
        return None

    def put(self, key: str, result: DispersionResult) -> None:
        self._memory[key] = result
        if self.root is None:
            return
        p = self._path(key)
        p.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=p.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                np.savez(
                    fh,
                    kx=np.array([k.kx for k in result.kpath]),
                    ky=np.array([k.ky for k in result.kpath]),
                    arclength=result.arclength,
                    frequencies=result.frequencies,
                )
            os.replace(tmp, p)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
