"""Output-distribution estimation and comparison, plus the resolution studies.

Gaussian kernel density estimates with Silverman's bandwidth, the
two-sample Kolmogorov-Smirnov distance as the scalar match metric between
ground-truth and surrogate output samples, and the two geometry studies:
output convergence against image resolution, and the spread introduced by
the one-to-many defect generation at fixed flip proportion.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bandgap import GapPolicy, extract_gaps, primary_gap
from .fem import UnitCellSpec, dispersion, ibz_path
from .geometry import DefectSpec, UnitCellBitmap, apply_defects, scale_bitmap
from .materials import MaterialPair
from .rng import derive_seed


@dataclass(frozen=True)
class KDEModel:
    """Gaussian KDE over a 1D sample set."""

    samples: np.ndarray
    bandwidth: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or len(samples) < 2:
            raise ValueError("KDE needs a 1D array of at least 2 samples")
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        object.__setattr__(self, "samples", samples)

    def pdf(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        # chunked to keep the n_samples x n_points matrix bounded
        out = np.empty(len(x))
        h = self.bandwidth
        norm = 1.0 / (len(self.samples) * h * np.sqrt(2.0 * np.pi))
        chunk = max(1, 20_000_000 // max(len(self.samples), 1))
        for start in range(0, len(x), chunk):
            z = (x[start : start + chunk, None] - self.samples[None, :]) / h
            out[start : start + chunk] = norm * np.exp(-0.5 * z * z).sum(axis=1)
        return out

    def grid(self, n: int = 512, pad: float = 4.0) -> tuple[np.ndarray, np.ndarray]:
        """Evaluation grid padded by ``pad`` bandwidths beyond the sample range."""
        lo = self.samples.min() - pad * self.bandwidth
        hi = self.samples.max() + pad * self.bandwidth
        x = np.linspace(lo, hi, n)
        return x, self.pdf(x)


def silverman_bandwidth(samples: np.ndarray) -> float:
    """0.9 * min(std, IQR / 1.34) * n^(-1/5)."""
    samples = np.asarray(samples, dtype=float)
    sigma = samples.std(ddof=1)
    q75, q25 = np.percentile(samples, [75, 25])
    spread = min(sigma, (q75 - q25) / 1.34)
    if not spread > 0:
        raise ValueError("samples have no spread; silverman bandwidth undefined (use fixed)")
    return 0.9 * spread * len(samples) ** (-0.2)


def kde_fit(samples, bandwidth="silverman") -> KDEModel:
    """Fit a Gaussian KDE; ``bandwidth`` is 'silverman' or a fixed positive value."""
    samples = np.asarray(samples, dtype=float)
    if bandwidth == "silverman":
        h = silverman_bandwidth(samples)
    else:
        h = float(bandwidth)
    return KDEModel(samples=samples, bandwidth=h)


def ks_distance(samples_a, samples_b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic: sup of the empirical CDF gap."""
    a = np.sort(np.asarray(samples_a, dtype=float))
    b = np.sort(np.asarray(samples_b, dtype=float))
    if len(a) == 0 or len(b) == 0:
        raise ValueError("both sample sets must be nonempty")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / len(a)
    cdf_b = np.searchsorted(b, grid, side="right") / len(b)
    return float(np.abs(cdf_a - cdf_b).max())


def hist2d(x_samples, y_samples, bins=40):
    """Count grid plus (x_edges, y_edges); counts sum to the sample count."""
    x = np.asarray(x_samples, dtype=float)
    y = np.asarray(y_samples, dtype=float)
    if x.shape != y.shape:
        raise ValueError("x and y sample arrays must have equal length")
    counts, xe, ye = np.histogram2d(x, y, bins=bins)
    return counts, xe, ye


@dataclass(frozen=True)
class DistributionComparison:
    """Scalar fidelity metrics between two sample sets of one output."""

    ks_statistic: float
    mean_rel_err: float
    std_rel_err: float
    n_reference: int
    n_candidate: int

    def __post_init__(self):
        if not 0.0 <= self.ks_statistic <= 1.0:
            raise ValueError(f"KS statistic must lie in [0, 1], got {self.ks_statistic}")


def compare_samples(reference, candidate) -> DistributionComparison:
    reference = np.asarray(reference, dtype=float)
    candidate = np.asarray(candidate, dtype=float)
    ref_mean, ref_std = reference.mean(), reference.std(ddof=1)
    cand_mean, cand_std = candidate.mean(), candidate.std(ddof=1)
    scale = abs(ref_mean) if ref_mean != 0 else 1.0
    return DistributionComparison(
        ks_statistic=ks_distance(reference, candidate),
        mean_rel_err=abs(cand_mean - ref_mean) / scale,
        std_rel_err=abs(cand_std - ref_std) / (ref_std if ref_std > 0 else 1.0),
        n_reference=len(reference),
        n_candidate=len(candidate),
    )


@dataclass
class _GapStats:
    sizes: list = field(default_factory=list)
    bottoms: list = field(default_factory=list)
    tops: list = field(default_factory=list)
    centers: list = field(default_factory=list)
    n_no_gap: int = 0


def _defect_gap(
    design: UnitCellBitmap,
    factor: int,
    fp: float,
    defect_seed: int,
    materials: MaterialPair,
    lattice_constant: float,
    n_bands: int,
    n_per_segment: int,
    policy: GapPolicy,
    solver: str,
    evaluator=None,
):
    bitmap = scale_bitmap(design, factor)
    bitmap = apply_defects(bitmap, DefectSpec(fp, defect_seed))
    if evaluator is not None:
        disp = evaluator(bitmap, materials, lattice_constant, n_per_segment, n_bands, solver)
    else:
        cell = UnitCellSpec(bitmap, materials, lattice_constant)
        disp = dispersion(cell, ibz_path(n_per_segment, lattice_constant), n_bands, method=solver)
    return primary_gap(extract_gaps(disp), policy)


def resolution_convergence_study(
    design: UnitCellBitmap,
    fp: float,
    resolutions,
    n_realizations: int,
    materials: MaterialPair,
    seed: int,
    lattice_constant: float = 0.1,
    n_bands: int = 10,
    n_per_segment: int = 8,
    policy: GapPolicy = GapPolicy("largest"),
    solver: str = "auto",
    csv_path=None,
    evaluator=None,
) -> list[dict]:
    """Mean gap size/top/bottom per resolution over seeded defect realizations.

    Each resolution must be an integer multiple of the design resolution.
    Realizations without a gap under the policy are excluded from the means
    and counted in the ``n_no_gap`` column.
    """
    resolutions = list(resolutions)
    if any(b > a for a, b in zip(resolutions[1:], resolutions)):
        raise ValueError(f"resolutions must be ascending, got {resolutions}")
    rows = []
    for res in resolutions:
        if res % design.resolution:
            raise ValueError(
                f"resolution {res} is not a multiple of the design resolution {design.resolution}"
            )
        stats = _GapStats()
        for i in range(n_realizations):
            gap = _defect_gap(
                design, res // design.resolution, fp, derive_seed(seed, res, i),
                materials, lattice_constant, n_bands, n_per_segment, policy, solver, evaluator,
            )
            if gap is None:
                stats.n_no_gap += 1
            else:
                stats.sizes.append(gap.size)
                stats.bottoms.append(gap.bottom)
                stats.tops.append(gap.top)
                stats.centers.append(gap.center)
        rows.append(
            {
                "resolution": res,
                "n_realizations": n_realizations,
                "n_no_gap": stats.n_no_gap,
                "mean_gap_size_hz": float(np.mean(stats.sizes)) if stats.sizes else float("nan"),
                "mean_gap_top_hz": float(np.mean(stats.tops)) if stats.tops else float("nan"),
                "mean_gap_bottom_hz": float(np.mean(stats.bottoms)) if stats.bottoms else float("nan"),
            }
        )
    if csv_path is not None:
        _write_dict_csv(rows, csv_path)
    return rows


def fp_noise_study(
    design: UnitCellBitmap,
    fp: float,
    resolution: int,
    n_realizations: int,
    materials: MaterialPair,
    seed: int,
    lattice_constant: float = 0.1,
    n_bands: int = 10,
    n_per_segment: int = 8,
    policy: GapPolicy = GapPolicy("largest"),
    solver: str = "auto",
    evaluator=None,
) -> dict:
    """Spread of gap outputs across same-FP defect realizations (fixed materials)."""
    if n_realizations < 2:
        raise ValueError(f"need at least 2 realizations, got {n_realizations}")
    if resolution % design.resolution:
        raise ValueError(
            f"resolution {resolution} is not a multiple of the design resolution {design.resolution}"
        )
    sizes, centers = [], []
    n_no_gap = 0
    for i in range(n_realizations):
        gap = _defect_gap(
            design, resolution // design.resolution, fp, derive_seed(seed, resolution, i),
            materials, lattice_constant, n_bands, n_per_segment, policy, solver, evaluator,
        )
        if gap is None:
            n_no_gap += 1
        else:
            sizes.append(gap.size)
            centers.append(gap.center)
    sizes = np.array(sizes)
    centers = np.array(centers)
    return {
        "fp": fp,
        "resolution": resolution,
        "n_realizations": n_realizations,
        "n_no_gap": n_no_gap,
        "gap_size_std_hz": float(sizes.std(ddof=1)) if len(sizes) > 1 else float("nan"),
        "gap_size_range_hz": float(sizes.max() - sizes.min()) if len(sizes) else float("nan"),
        "gap_center_std_hz": float(centers.std(ddof=1)) if len(centers) > 1 else float("nan"),
        "gap_center_range_hz": float(centers.max() - centers.min()) if len(centers) else float("nan"),
        "gap_sizes": sizes.tolist(),
        "gap_centers": centers.tolist(),
    }


def _write_dict_csv(rows: list[dict], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        keys = list(rows[0].keys())
        writer.writerow(keys)
        for row in rows:
            writer.writerow([_fmt(row[k]) for k in keys])


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v
