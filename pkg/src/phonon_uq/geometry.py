"""Pixelated unit-cell geometries and stochastic edge-pixel defects.

A unit cell is a square grid of binary material ids (0 = soft, 1 = hard).
Defects are generated by flipping a fixed proportion of the material
interface pixels, chosen uniformly without replacement from a seeded
stream, so the same (geometry, proportion, seed) triple always yields the
same defective cell.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import substream


class BitmapParseError(ValueError):
    """Malformed bitmap file; message carries file/line context."""


@dataclass(frozen=True, eq=False)
class UnitCellBitmap:
    """Square binary grid of material assignments (0 = soft, 1 = hard)."""

    cells: np.ndarray

    def __post_init__(self):
        cells = np.ascontiguousarray(np.asarray(self.cells, dtype=np.uint8))
        if cells.ndim != 2 or cells.shape[0] != cells.shape[1]:
            raise ValueError(f"bitmap must be a square grid, got shape {cells.shape}")
        if cells.shape[0] < 2:
            raise ValueError(f"resolution must be >= 2, got {cells.shape[0]}")
        if cells.max(initial=0) > 1:
            raise ValueError("bitmap cells must be 0 or 1")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def resolution(self) -> int:
        return self.cells.shape[0]

    @property
    def hard_fraction(self) -> float:
        """Area fraction of hard material."""
        return float(self.cells.mean())

    def __eq__(self, other):
        if not isinstance(other, UnitCellBitmap):
            return NotImplemented
        return np.array_equal(self.cells, other.cells)

    def __hash__(self):
        return hash((self.resolution, self.cells.tobytes()))


@dataclass(frozen=True)
class DefectSpec:
    """Edge-flip defect parameters: proportion of edge pixels to invert."""

    flip_proportion: float
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "flip_proportion", float(self.flip_proportion))
        object.__setattr__(self, "seed", int(self.seed))
        if not 0.0 <= self.flip_proportion <= 1.0:
            raise ValueError(f"flip_proportion must lie in [0, 1], got {self.flip_proportion}")


def scale_bitmap(bitmap: UnitCellBitmap, factor: int) -> UnitCellBitmap:
    """Nearest-neighbor upscale: each pixel becomes a factor x factor block."""
    if factor < 1:
        raise ValueError(f"scale factor must be >= 1, got {factor}")
    if factor == 1:
        return bitmap
    cells = np.repeat(np.repeat(bitmap.cells, factor, axis=0), factor, axis=1)
    return UnitCellBitmap(cells)


def find_edge_pixels(bitmap: UnitCellBitmap) -> set[tuple[int, int]]:
    """Pixels with a 4-connected in-grid neighbor of the opposite material.

    Adjacency is non-periodic: pixels on the cell boundary are not compared
    with their periodic images. Both hard pixels touching soft and soft
    pixels touching hard are returned, as (row, col) pairs.
    """
    c = bitmap.cells
    edge = np.zeros(c.shape, dtype=bool)
    vdiff = c[:-1, :] != c[1:, :]
    edge[:-1, :] |= vdiff
    edge[1:, :] |= vdiff
    hdiff = c[:, :-1] != c[:, 1:]
    edge[:, :-1] |= hdiff
    edge[:, 1:] |= hdiff
    return {(int(r), int(col)) for r, col in zip(*np.nonzero(edge))}


def _flip_count(flip_proportion: float, n_edge: int) -> int:
    # round half away from zero; argument is always >= 0 here
    return int(np.floor(flip_proportion * n_edge + 0.5))


def apply_defects(bitmap: UnitCellBitmap, spec: DefectSpec) -> UnitCellBitmap:
    """Invert ``round(flip_proportion * n_edge)`` edge pixels chosen by seed.

    Selection is a partial Fisher-Yates shuffle of the edge pixels in
    row-major order, drawn from the Philox substream of ``spec.seed``:
    uniform without replacement and bit-reproducible across platforms.
    """
    edge = sorted(find_edge_pixels(bitmap))
    n_flip = _flip_count(spec.flip_proportion, len(edge))
    if n_flip == 0:
        return bitmap
    rng = substream(spec.seed)
    idx = np.arange(len(edge))
    for i in range(n_flip):
        j = int(rng.integers(i, len(edge)))
        idx[i], idx[j] = idx[j], idx[i]
    cells = np.array(bitmap.cells)
    for i in idx[:n_flip]:
        r, col = edge[i]
        cells[r, col] ^= 1
    return UnitCellBitmap(cells)


def write_bitmap(bitmap: UnitCellBitmap, path, fmt: str = "text") -> None:
    """Write a bitmap as a plain-text 0/1 grid or a binary PGM (P5, maxval 1)."""
    path = Path(path)
    if fmt == "text":
        lines = [str(bitmap.resolution)]
        lines += [" ".join(str(int(v)) for v in row) for row in bitmap.cells]
        path.write_text("\n".join(lines) + "\n")
    elif fmt == "pgm":
        header = f"P5\n{bitmap.resolution} {bitmap.resolution}\n1\n".encode("ascii")
        path.write_bytes(header + bitmap.cells.tobytes())
    else:
        raise ValueError(f"unknown bitmap format {fmt!r} (expected 'text' or 'pgm')")


def read_bitmap(path) -> UnitCellBitmap:
    """Read a bitmap written by :func:`write_bitmap` (format sniffed from content)."""
    path = Path(path)
    raw = path.read_bytes()
    if raw.startswith(b"P5"):
        return _parse_pgm(raw, path)
    return _parse_text(raw, path)


def _parse_text(raw: bytes, path: Path) -> UnitCellBitmap:
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError as exc:
        raise BitmapParseError(f"{path}: not an ASCII bitmap file ({exc})") from None
    lines = text.splitlines()
    if not lines:
        raise BitmapParseError(f"{path}: empty file")
    try:
        resolution = int(lines[0].strip())
    except ValueError:
        raise BitmapParseError(f"{path}:1: expected integer resolution, got {lines[0]!r}") from None
    if resolution < 2:
        raise BitmapParseError(f"{path}:1: resolution must be >= 2, got {resolution}")
    rows = []
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != resolution:
        raise BitmapParseError(f"{path}: expected {resolution} grid rows, found {len(body)}")
    for lineno, line in enumerate(body, start=2):
        tokens = line.split()
        if len(tokens) != resolution:
            raise BitmapParseError(f"{path}:{lineno}: expected {resolution} values, got {len(tokens)}")
        row = []
        for colno, tok in enumerate(tokens):
            if tok not in ("0", "1"):
                raise BitmapParseError(f"{path}:{lineno}: column {colno}: cell must be 0 or 1, got {tok!r}")
            row.append(int(tok))
        rows.append(row)
    return UnitCellBitmap(np.array(rows, dtype=np.uint8))


def _parse_pgm(raw: bytes, path: Path) -> UnitCellBitmap:
    # minimal P5 reader: whitespace-separated header tokens, '#' comments
    pos = 2
    tokens = []
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise BitmapParseError(f"{path}: truncated PGM header at byte {pos}")
        tokens.append(raw[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise BitmapParseError(f"{path}: malformed PGM header {tokens!r}") from None
    if width != height:
        raise BitmapParseError(f"{path}: PGM grid must be square, got {width}x{height}")
    if maxval != 1:
        raise BitmapParseError(f"{path}: PGM maxval must be 1, got {maxval}")
    data = raw[pos : pos + width * height]
    if len(data) != width * height:
        raise BitmapParseError(
            f"{path}: PGM raster truncated at byte {pos + len(data)} "
            f"(expected {width * height} pixels, got {len(data)})"
        )
    cells = np.frombuffer(data, dtype=np.uint8).reshape(height, width)
    if cells.max(initial=0) > 1:
        bad = int(np.argmax(cells.reshape(-1) > 1))
        raise BitmapParseError(f"{path}: pixel {bad} exceeds maxval 1")
    return UnitCellBitmap(cells)
