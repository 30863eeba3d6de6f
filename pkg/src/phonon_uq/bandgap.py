"""Bandgap extraction from dispersion results.

A gap exists between consecutive bands n and n+1 when the minimum of band
n+1 over the k-path exceeds the maximum of band n. Band indices are
1-based, so ``below_band=3`` is the gap between bands 3 and 4.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fem import DispersionResult


@dataclass(frozen=True)
class BandGap:
    below_band: int
    bottom: float
    top: float

    def __post_init__(self):
        if not self.top > self.bottom:
            raise ValueError(f"gap top {self.top} must exceed bottom {self.bottom}")

    @property
    def size(self) -> float:
        return self.top - self.bottom

    @property
    def center(self) -> float:
        return (self.top + self.bottom) / 2.0


@dataclass(frozen=True)
class GapPolicy:
    """How to pick the tracked gap: 'largest', 'first', or 'between_bands'."""

    mode: str = "largest"
    band: int | None = None

    def __post_init__(self):
        if self.mode not in ("largest", "first", "between_bands"):
            raise ValueError(f"unknown gap policy mode {self.mode!r}")
        if self.mode == "between_bands" and (self.band is None or self.band < 1):
            raise ValueError("between_bands policy needs a band index >= 1")


def extract_gaps(disp: DispersionResult) -> list[BandGap]:
    """All gaps between consecutive band pairs, ordered by lower band index."""
    freq = disp.frequencies
    if freq.shape[1] < 2:
        raise ValueError("need at least 2 bands to search for gaps")
    bottoms = freq.max(axis=0)
    tops = freq.min(axis=0)
    gaps = []
    for n in range(freq.shape[1] - 1):
        lo, hi = bottoms[n], tops[n + 1]
        if hi > lo:
            gaps.append(BandGap(below_band=n + 1, bottom=float(lo), top=float(hi)))
    return gaps


def primary_gap(gaps: list[BandGap], policy: GapPolicy = GapPolicy()) -> BandGap | None:
    """Tracked gap under the policy; None when absent (a representable outcome)."""
    if not gaps:
        return None
    if policy.mode == "first":
        return min(gaps, key=lambda g: g.below_band)
    if policy.mode == "largest":
        return max(gaps, key=lambda g: (g.size, -g.below_band))
    matches = [g for g in gaps if g.below_band == policy.band]
    return matches[0] if matches else None


GAP_CSV_HEADER = ["sample_index", "gap_size_hz", "gap_bottom_hz", "gap_top_hz", "gap_center_hz", "below_band"]


def write_gap_csv(gaps_by_sample: list[BandGap | None], path) -> None:
    """Gap dataset CSV; samples without a gap carry NaN fields and below_band -1."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(GAP_CSV_HEADER)
        for i, gap in enumerate(gaps_by_sample):
            if gap is None:
                writer.writerow([i, "nan", "nan", "nan", "nan", -1])
            else:
                writer.writerow(
                    [i, repr(gap.size), repr(gap.bottom), repr(gap.top), repr(gap.center), gap.below_band]
                )


def read_gap_csv(path) -> list[BandGap | None]:
    path = Path(path)
    out: list[BandGap | None] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            if int(row[5]) < 0:
                out.append(None)
            else:
                out.append(BandGap(below_band=int(row[5]), bottom=float(row[2]), top=float(row[3])))
    return out


def gap_outputs(gap: BandGap | None) -> np.ndarray:
    """The q=2 model output vector (gap size, gap center); NaN when no gap."""
    if gap is None:
        return np.array([np.nan, np.nan])
    return np.array([gap.size, gap.center])
