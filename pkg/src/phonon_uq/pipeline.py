"""Dataset generation, surrogate fitting and comparison reports.

A dataset pairs sampling-plan input points with the q=2 model outputs
(gap size, gap center). Rows that fail (solver error) or carry no gap
under the policy are recorded with a sentinel and a reason; generation
continues. Rows are evaluated independently, optionally in a process
pool, and always written in sample order so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bandgap import BandGap, extract_gaps, primary_gap, write_gap_csv, GAP_CSV_HEADER
from .cache import EvalCache, cache_key
from .config import ExperimentConfig
from .distributions import JointDistribution
from .fem import SolverError, UnitCellSpec, dispersion, ibz_path
from .geometry import DefectSpec, apply_defects, scale_bitmap
from .pce import (
    PCEBasis,
    PCESurrogate,
    TrainingSet,
    fit_least_squares,
    fit_mc_projection,
    fit_quadrature,
    training_hash,
)
from .quadrature import QuadratureRule, SparseGridSpec, gauss_rule, smolyak_grid, tensor_grid
from .rng import derive_seed

log = logging.getLogger("phonon_uq")

OUTPUT_LABELS = ("gap_size_hz", "gap_center_hz")


class PipelineError(RuntimeError):
    pass


@dataclass(frozen=True)
class Dataset:
    """Aligned plan inputs, gap outputs and per-row statuses."""

    labels: tuple[str, ...]
    inputs: np.ndarray
    outputs: np.ndarray
    gaps: tuple[BandGap | None, ...]
    statuses: tuple[str, ...]
    row_seeds: tuple[int, ...]
    weights: np.ndarray | None
    plan: dict

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    def ok_mask(self) -> np.ndarray:
        return np.array([s == "ok" for s in self.statuses])


def plan_points(config: ExperimentConfig, joint: JointDistribution):
    """Input points (and quadrature weights when applicable) for the plan."""
    plan = config.plan
    if plan.method == "mc":
        return joint.sample(plan.n, config.seed), None
    if plan.method == "quadrature":
        rule = tensor_grid([gauss_rule(d, plan.degree + 1) for d in joint.components])
        return rule.nodes, rule.weights
    rule = smolyak_grid(joint, SparseGridSpec(level=plan.level, dimension=joint.m))
    return rule.nodes, rule.weights


def evaluate_row(
    config: ExperimentConfig,
    joint: JointDistribution,
    row: np.ndarray,
    row_seed: int,
    cache: EvalCache | None = None,
):
    """One model evaluation: inputs -> (gap, status)."""
    overrides = dict(zip(joint.labels, row))
    try:
        materials = config.materials(overrides)
        bitmap = scale_bitmap(config.geometry.load(), config.geometry.scale)
        if "fp" in joint.labels:
            fp = float(overrides["fp"])
            if not 0.0 <= fp <= 1.0:
                clamped = min(max(fp, 0.0), 1.0)
                log.warning("flip proportion %g outside [0, 1]; clamped to %g", fp, clamped)
                fp = clamped
            bitmap = apply_defects(bitmap, DefectSpec(fp, row_seed))
        cell = UnitCellSpec(bitmap, materials, config.lattice_constant)
        path = ibz_path(config.fem.n_per_segment, config.lattice_constant)
        key = cache_key(cell, path, config.fem.n_bands, config.fem.solver)
        disp = cache.get(key) if cache is not None else None
        if disp is None:
            disp = dispersion(cell, path, config.fem.n_bands, method=config.fem.solver)
            if cache is not None:
                cache.put(key, disp)
        gap = primary_gap(extract_gaps(disp), config.gap_policy)
    except (SolverError, ValueError) as exc:
        return None, f"error: {exc}"
    if gap is None:
        return None, "no_gap"
    return gap, "ok"


_WORKER_CTX: dict = {}


def _worker_init(config_dict: dict, joint_json: list, cache_dir):
    _WORKER_CTX["config"] = ExperimentConfig.from_dict(config_dict)
    _WORKER_CTX["joint"] = JointDistribution.from_json_obj(joint_json)
    _WORKER_CTX["cache"] = EvalCache(cache_dir) if cache_dir is not None else None


def _worker_eval(payload):
    index, row, row_seed = payload
    gap, status = evaluate_row(
        _WORKER_CTX["config"], _WORKER_CTX["joint"], np.asarray(row), row_seed, _WORKER_CTX["cache"]
    )
    if gap is None:
        return index, None, status
    return index, (gap.below_band, gap.bottom, gap.top), status


def generate_dataset(
    config: ExperimentConfig,
    cache: EvalCache | None = None,
    jobs: int = 1,
) -> Dataset:
    """Evaluate the sampling plan; per-row defect seeds derive from (seed, index)."""
    joint = config.joint()
    points, weights = plan_points(config, joint)
    n = points.shape[0]
    row_seeds = tuple(derive_seed(config.seed, i) for i in range(n))

    gaps: list[BandGap | None] = [None] * n
    statuses: list[str] = [""] * n
    if jobs > 1:
        payloads = [(i, points[i].tolist(), row_seeds[i]) for i in range(n)]
        cache_dir = cache.root if cache is not None else None
        with ProcessPoolExecutor(
            max_workers=jobs,
            initializer=_worker_init,
            initargs=(config.to_dict(), joint.to_json_obj(), cache_dir),
        ) as pool:
            for index, gap_tuple, status in pool.map(_worker_eval, payloads, chunksize=4):
                statuses[index] = status
                if gap_tuple is not None:
                    gaps[index] = BandGap(*gap_tuple)
    else:
        for i in range(n):
            gap, status = evaluate_row(config, joint, points[i], row_seeds[i], cache)
            gaps[i] = gap
            statuses[i] = status

    outputs = np.array(
        [[g.size, g.center] if g is not None else [np.nan, np.nan] for g in gaps]
    )
    n_bad = sum(1 for s in statuses if s != "ok")
    if n_bad:
        log.warning("%d of %d rows without a usable gap (%s)", n_bad, n,
                    ", ".join(sorted({s for s in statuses if s != 'ok'})))
    return Dataset(
        labels=joint.labels,
        inputs=points,
        outputs=outputs,
        gaps=tuple(gaps),
        statuses=tuple(statuses),
        row_seeds=row_seeds,
        weights=weights,
        plan={k: v for k, v in vars(config.plan).items() if v is not None},
    )


def write_dataset(dataset: Dataset, out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "inputs.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_index", *dataset.labels, "row_seed"])
        for i, row in enumerate(dataset.inputs):
            writer.writerow([i, *[repr(float(v)) for v in row], dataset.row_seeds[i]])
    write_gap_csv(list(dataset.gaps), out_dir / "gaps.csv")
    with (out_dir / "row_status.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_index", "status"])
        for i, status in enumerate(dataset.statuses):
            writer.writerow([i, status])
    if dataset.weights is not None:
        with (out_dir / "weights.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sample_index", "weight"])
            for i, w in enumerate(dataset.weights):
                writer.writerow([i, repr(float(w))])
    (out_dir / "plan.json").write_text(json.dumps(dataset.plan, indent=2) + "\n")


def read_dataset(out_dir) -> Dataset:
    out_dir = Path(out_dir)
    with (out_dir / "inputs.csv").open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        labels = tuple(header[1:-1])
        rows, seeds = [], []
        for row in reader:
            rows.append([float(v) for v in row[1:-1]])
            seeds.append(int(row[-1]))
    with (out_dir / "gaps.csv").open(newline="") as fh:
        reader = csv.reader(fh)
        assert next(reader) == GAP_CSV_HEADER
        gaps: list[BandGap | None] = []
        for row in reader:
            if int(row[5]) < 0:
                gaps.append(None)
            else:
                gaps.append(BandGap(below_band=int(row[5]), bottom=float(row[2]), top=float(row[3])))
    with (out_dir / "row_status.csv").open(newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        statuses = tuple(row[1] for row in reader)
    weights = None
    if (out_dir / "weights.csv").exists():
        with (out_dir / "weights.csv").open(newline="") as fh:
            reader = csv.reader(fh)
            next(reader)
            weights = np.array([float(row[1]) for row in reader])
    plan = json.loads((out_dir / "plan.json").read_text())
    outputs = np.array(
        [[g.size, g.center] if g is not None else [np.nan, np.nan] for g in gaps]
    )
    return Dataset(
        labels=labels,
        inputs=np.array(rows),
        outputs=outputs,
        gaps=tuple(gaps),
        statuses=statuses,
        row_seeds=tuple(seeds),
        weights=weights,
        plan=plan,
    )


def fit_dataset(config: ExperimentConfig, dataset: Dataset) -> PCESurrogate:
    """Fit the configured PCE. Quadrature plans use spectral projection and
    need every node evaluated; MC plans default to least-squares regression."""
    joint = config.joint()
    if tuple(dataset.labels) != joint.labels:
        raise PipelineError(
            f"dataset labels {dataset.labels} do not match config inputs {joint.labels}"
        )
    basis = PCEBasis.total_degree(joint, config.pce.degree)
    ok = dataset.ok_mask()
    if dataset.weights is not None:
        if config.pce.fit == "least_squares":
            raise PipelineError("quadrature datasets are fitted by spectral projection")
        if not ok.all():
            bad = [i for i, s in enumerate(dataset.statuses) if s != "ok"]
            raise PipelineError(
                f"quadrature projection needs outputs at every node; rows {bad} failed"
            )
        rule = QuadratureRule(nodes=dataset.inputs, weights=dataset.weights)
        surrogate = fit_quadrature(rule, dataset.outputs, basis)
    else:
        if not ok.all():
            log.warning("dropping %d rows without gap from the fit", int((~ok).sum()))
        train = TrainingSet(inputs=dataset.inputs[ok], outputs=dataset.outputs[ok])
        method = config.pce.fit
        if method in ("auto", "least_squares"):
            surrogate = fit_least_squares(train, basis)
        else:
            surrogate = fit_mc_projection(train, basis)
    provenance = {
        "training_hash": training_hash(dataset.inputs, dataset.outputs),
        "seed": config.seed,
        "plan": dataset.plan,
        "n_rows": int(dataset.n),
        "n_ok": int(ok.sum()),
    }
    return PCESurrogate(
        basis=surrogate.basis,
        coefficients=surrogate.coefficients,
        fit_method=surrogate.fit_method,
        provenance=provenance,
    )


def run_dispersion(config: ExperimentConfig, cache: EvalCache | None = None):
    """Defect-free dispersion of the configured geometry (cache-aware)."""
    bitmap = scale_bitmap(config.geometry.load(), config.geometry.scale)
    cell = UnitCellSpec(bitmap, config.materials(), config.lattice_constant)
    path = ibz_path(config.fem.n_per_segment, config.lattice_constant)
    key = cache_key(cell, path, config.fem.n_bands, config.fem.solver)
    disp = cache.get(key) if cache is not None else None
    if disp is None:
        disp = dispersion(cell, path, config.fem.n_bands, method=config.fem.solver)
        if cache is not None:
            cache.put(key, disp)
    else:
        log.info("dispersion cache hit (%s...)", key[:12])
    return disp, extract_gaps(disp)
