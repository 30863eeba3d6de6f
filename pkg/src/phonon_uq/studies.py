"""The five scripted studies, each a config-driven end-to-end pipeline.

Every study writes its merged config, tables (CSV), figures (SVG with a
data CSV alongside) and a summary JSON into the report directory. Reruns
with the same config and seed produce byte-identical CSVs. Default
configs are desk-scale; pass overrides to change scale.
"""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

import numpy as np

from . import plotting
from .analysis import compare_samples, fp_noise_study, resolution_convergence_study
from .bandgap import GapPolicy
from .cache import EvalCache, cache_key
from .config import ExperimentConfig, deep_merge
from .fem import UnitCellSpec, dispersion, ibz_path
from .pce import sample_surrogate, save_surrogate
from .pipeline import OUTPUT_LABELS, Dataset, fit_dataset, generate_dataset, write_dataset
from .rng import derive_seed

log = logging.getLogger("phonon_uq")

STUDY_NAMES = (
    "resolution-convergence",
    "fp-noise",
    "study-1d-uniform",
    "study-7d-gamma",
    "study-7d-gaussian",
)

_DRAW_KEY = 7001  # spawn key for surrogate-draw streams, distinct from dataset keys

_GAMMA_TABLE = [
    ("K_soft", 278e6, 0.08),
    ("K_hard", 152e9, 0.02),
    ("G_soft", 72.5e6, 0.08),
    ("G_hard", 78.1e9, 0.02),
    ("rho_soft", 1000.0, 0.08),
    ("rho_hard", 8000.0, 0.02),
]

_GAUSSIAN_TABLE = [
    ("E_soft", 200e6, 0.08),
    ("E_hard", 200e9, 0.02),
    ("rho_soft", 1000.0, 0.08),
    ("rho_hard", 8000.0, 0.02),
    ("nu_soft", 0.38, 0.02),
    ("nu_hard", 0.28, 0.02),
]

_FP_MEAN, _FP_COV = 0.025, 0.08


def _gamma_input(name, mean, cov):
    shape = 1.0 / (cov * cov)
    return {"name": name, "family": "gamma", "params": {"shape": shape, "scale": mean / shape}}


def _truncnorm_input(name, mean, cov):
    sigma = cov * mean
    return {
        "name": name,
        "family": "normal",
        "params": {"mu": mean, "sigma": sigma},
        "truncation": {"lo": mean - 4 * sigma, "hi": mean + 4 * sigma},
    }


def _beta_fp_input():
    mean, std = _FP_MEAN, _FP_COV * _FP_MEAN
    common = mean * (1 - mean) / (std * std) - 1.0
    return {
        "name": "fp",
        "family": "beta",
        "params": {"alpha": mean * common, "beta": (1 - mean) * common},
    }


def default_study_config(name: str) -> dict:
    """Desk-scale default config for a named study."""
    if name == "study-1d-uniform":
        return {
            "schema_version": 1,
            "geometry": {"design": "builtin:cross8", "scale": 2},
            "lattice_constant": 0.1,
            "materials": {
                "soft": {"E": 200e6, "nu": 0.38, "rho": 1000.0},
                "hard": {"E": 200e9, "nu": 0.28, "rho": 8000.0},
            },
            "fem": {"n_bands": 10, "n_per_segment": 8, "solver": "auto"},
            "gap_policy": {"mode": "largest", "band": None},
            "inputs": [
                {"name": "E_soft", "family": "uniform", "params": {"lo": 0.8 * 200e6, "hi": 1.2 * 200e6}}
            ],
            "plan": {"method": "mc", "n": 2000},
            "pce": {"degree": 2, "fit": "auto"},
            "seed": 20260810,
            "surrogate_draws": 10000,
            "study": {"ground_truth_n": 2000, "quadrature_orders": [2, 3, 4, 5]},
        }
    if name == "study-7d-gamma":
        return {
            "schema_version": 1,
            "geometry": {"design": "builtin:cross8", "scale": 2},
            "lattice_constant": 0.1,
            "materials": {
                "soft": {"K": 278e6, "G": 72.5e6, "rho": 1000.0},
                "hard": {"K": 152e9, "G": 78.1e9, "rho": 8000.0},
            },
            "fem": {"n_bands": 10, "n_per_segment": 8, "solver": "auto"},
            "gap_policy": {"mode": "largest", "band": None},
            "inputs": [_gamma_input(*row) for row in _GAMMA_TABLE] + [_beta_fp_input()],
            "plan": {"method": "mc", "n": 500},
            "pce": {"degree": 1, "fit": "auto"},
            "seed": 20260810,
            "surrogate_draws": 10000,
            "study": {
                "ground_truth_n": 500,
                "mc_sizes": [100],
                "mc_pce_degree": 2,
                "quadrature_degrees": [1],
                "sparse_levels": [1],
            },
        }
    if name == "study-7d-gaussian":
        fp_sigma = _FP_COV * _FP_MEAN
        return {
            "schema_version": 1,
            "geometry": {"design": "builtin:cross10", "scale": 2},
            "lattice_constant": 0.1,
            "materials": {
                "soft": {"E": 200e6, "nu": 0.38, "rho": 1000.0},
                "hard": {"E": 200e9, "nu": 0.28, "rho": 8000.0},
            },
            "fem": {"n_bands": 10, "n_per_segment": 8, "solver": "auto"},
            "gap_policy": {"mode": "largest", "band": None},
            "inputs": [_truncnorm_input(*row) for row in _GAUSSIAN_TABLE]
            + [
                {
                    "name": "fp",
                    "family": "normal",
                    "params": {"mu": _FP_MEAN, "sigma": fp_sigma},
                    "truncation": {"lo": _FP_MEAN - 4 * fp_sigma, "hi": _FP_MEAN + 4 * fp_sigma},
                }
            ],
            "plan": {"method": "mc", "n": 500},
            "pce": {"degree": 1, "fit": "auto"},
            "seed": 20260810,
            "surrogate_draws": 10000,
            "study": {
                "ground_truth_n": 500,
                "mc_sizes": [100],
                "mc_pce_degree": 2,
                "quadrature_degrees": [1],
                "sparse_levels": [1],
            },
        }
    if name == "resolution-convergence":
        return {
            "schema_version": 1,
            "geometry": {"design": "builtin:square10", "scale": 1},
            "lattice_constant": 0.1,
            "materials": {
                "soft": {"E": 200e6, "nu": 0.38, "rho": 1000.0},
                "hard": {"E": 200e9, "nu": 0.28, "rho": 8000.0},
            },
            "fem": {"n_bands": 10, "n_per_segment": 8, "solver": "auto"},
            "gap_policy": {"mode": "largest", "band": None},
            "inputs": [],
            "plan": {"method": "mc", "n": 1},
            "pce": {"degree": 1, "fit": "auto"},
            "seed": 20260810,
            "surrogate_draws": 10000,
            "study": {"fp": 0.05, "resolutions": [10, 20, 30, 40], "n_realizations": 20},
        }
    if name == "fp-noise":
        return {
            "schema_version": 1,
            "geometry": {"design": "builtin:square10", "scale": 1},
            "lattice_constant": 0.1,
            "materials": {
                "soft": {"E": 200e6, "nu": 0.38, "rho": 1000.0},
                "hard": {"E": 200e9, "nu": 0.28, "rho": 8000.0},
            },
            "fem": {"n_bands": 10, "n_per_segment": 8, "solver": "auto"},
            "gap_policy": {"mode": "largest", "band": None},
            "inputs": [],
            "plan": {"method": "mc", "n": 1},
            "pce": {"degree": 1, "fit": "auto"},
            "seed": 20260810,
            "surrogate_draws": 10000,
            "study": {
                "fp": 0.05,
                "resolution": 20,
                "n_realizations": 20,
                "fp_sweep": [0.0, 0.0125, 0.025, 0.0375, 0.05],
                "sweep_realizations": 4,
            },
        }
    raise ValueError(f"unknown study {name!r}; expected one of {STUDY_NAMES}")


def _experiment_config(cfg_dict: dict, plan: dict, pce: dict | None, dataset_index: int) -> ExperimentConfig:
    base = {k: v for k, v in cfg_dict.items() if k != "study"}
    base = deep_merge(base, {"plan": plan})
    if pce:
        base = deep_merge(base, {"pce": pce})
    base["seed"] = derive_seed(cfg_dict["seed"], dataset_index)
    # plan keys are exclusive; drop leftovers from the base plan
    base["plan"] = {k: v for k, v in base["plan"].items() if k in ("method", "n", "degree", "level")}
    keep = {"mc": ("method", "n"), "quadrature": ("method", "degree"), "sparse": ("method", "level")}
    base["plan"] = {k: base["plan"][k] for k in keep[base["plan"]["method"]] if k in base["plan"]}
    return ExperimentConfig.from_dict(base)


def _compare_against(
    gt_outputs: np.ndarray,
    surrogate,
    n_draws: int,
    draw_seed: int,
):
    """Per-output comparisons between ground-truth rows and fresh surrogate draws."""
    draws = sample_surrogate(surrogate, n_draws, draw_seed)
    out = {}
    for col, label in enumerate(OUTPUT_LABELS):
        ref = gt_outputs[:, col]
        ref = ref[np.isfinite(ref)]
        out[label] = compare_samples(ref, draws[:, col])
    return out, draws


def _write_comparison_csv(rows: list[dict], path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["dataset", "n_points", "output", "ks", "mean_rel_err", "std_rel_err", "n_excluded"]
        )
        for row in rows:
            writer.writerow(
                [
                    row["dataset"], row["n_points"], row["output"],
                    repr(row["ks"]), repr(row["mean_rel_err"]), repr(row["std_rel_err"]),
                    row["n_excluded"],
                ]
            )


def _spectral_study(cfg_dict: dict, out_dir: Path, cache, jobs: int) -> dict:
    """Shared driver for the surrogate-vs-ground-truth studies."""
    study = cfg_dict["study"]
    out_dir.mkdir(parents=True, exist_ok=True)

    datasets: list[tuple[str, dict, dict | None]] = []
    datasets.append(("ground_truth", {"method": "mc", "n": study["ground_truth_n"]}, None))
    for n in study.get("mc_sizes", []):
        datasets.append((f"mc_{n}", {"method": "mc", "n": n},
                         {"degree": study.get("mc_pce_degree", cfg_dict["pce"]["degree"])}))
    for order in study.get("quadrature_orders", []):
        datasets.append((f"quadrature_{order}", {"method": "quadrature", "degree": order},
                         {"degree": order, "fit": "projection"}))
    for d in study.get("quadrature_degrees", []):
        datasets.append((f"quadrature_{d}", {"method": "quadrature", "degree": d},
                         {"degree": d, "fit": "projection"}))
    for level in study.get("sparse_levels", []):
        datasets.append((f"sparse_{level}", {"method": "sparse", "level": level},
                         {"degree": level, "fit": "projection"}))

    results = {}
    gt_dataset: Dataset | None = None
    comparison_rows = []
    n_draws = cfg_dict.get("surrogate_draws", 10000)
    for index, (name, plan, pce) in enumerate(datasets):
        config = _experiment_config(cfg_dict, plan, pce, index)
        dataset = generate_dataset(config, cache=cache, jobs=jobs)
        write_dataset(dataset, out_dir / name)
        n_excluded = int((~dataset.ok_mask()).sum())
        results[name] = {"n_points": int(dataset.n), "n_excluded": n_excluded}
        if name == "ground_truth":
            gt_dataset = dataset
            continue
        surrogate = fit_dataset(config, dataset)
        save_surrogate(surrogate, out_dir / name / "surrogate.json")
        comparisons, draws = _compare_against(
            gt_dataset.outputs, surrogate, n_draws, derive_seed(cfg_dict["seed"], _DRAW_KEY, index)
        )
        gt_ok = gt_dataset.outputs[gt_dataset.ok_mask()]
        plotting.hist2d_quartet(gt_ok, draws, out_dir / name / "comparison_quartet.svg")
        for col, label in enumerate(OUTPUT_LABELS):
            plotting.kde_overlay(
                gt_ok[:, col], draws[:, col], label, out_dir / name / f"kde_{label}.svg"
            )
            comp = comparisons[label]
            results[name][label] = {
                "ks": comp.ks_statistic,
                "mean_rel_err": comp.mean_rel_err,
                "std_rel_err": comp.std_rel_err,
            }
            comparison_rows.append(
                {
                    "dataset": name, "n_points": int(dataset.n), "output": label,
                    "ks": comp.ks_statistic, "mean_rel_err": comp.mean_rel_err,
                    "std_rel_err": comp.std_rel_err, "n_excluded": n_excluded,
                }
            )
    _write_comparison_csv(comparison_rows, out_dir / "comparisons.csv")
    return results


def _cached_evaluator(cache: EvalCache | None, solver_override: str | None = None):
    def evaluator(bitmap, materials, lattice_constant, n_per_segment, n_bands, solver):
        solver = solver_override or solver
        cell = UnitCellSpec(bitmap, materials, lattice_constant)
        path = ibz_path(n_per_segment, lattice_constant)
        key = cache_key(cell, path, n_bands, solver)
        disp = cache.get(key) if cache is not None else None
        if disp is None:
            disp = dispersion(cell, path, n_bands, method=solver)
            if cache is not None:
                cache.put(key, disp)
        return disp

    return evaluator


def _run_resolution_convergence(cfg_dict: dict, out_dir: Path, cache, jobs: int) -> dict:
    study = cfg_dict["study"]
    config = ExperimentConfig.from_dict({k: v for k, v in cfg_dict.items() if k != "study"})
    rows = resolution_convergence_study(
        design=config.geometry.load(),
        fp=study["fp"],
        resolutions=study["resolutions"],
        n_realizations=study["n_realizations"],
        materials=config.materials(),
        seed=config.seed,
        lattice_constant=config.lattice_constant,
        n_bands=config.fem.n_bands,
        n_per_segment=config.fem.n_per_segment,
        policy=config.gap_policy,
        solver=config.fem.solver,
        csv_path=out_dir / "convergence.csv",
        evaluator=_cached_evaluator(cache),
    )
    plotting.line_chart(
        rows, "resolution",
        ["mean_gap_size_hz", "mean_gap_top_hz", "mean_gap_bottom_hz"],
        out_dir / "convergence.svg", y_label="frequency (Hz)",
    )
    sizes = [row["mean_gap_size_hz"] for row in rows]
    deltas = [abs(b - a) for a, b in zip(sizes[:-1], sizes[1:])]
    return {"rows": rows, "gap_size_deltas": deltas}


def _run_fp_noise(cfg_dict: dict, out_dir: Path, cache, jobs: int) -> dict:
    study = cfg_dict["study"]
    config = ExperimentConfig.from_dict({k: v for k, v in cfg_dict.items() if k != "study"})
    evaluator = _cached_evaluator(cache)
    common = dict(
        design=config.geometry.load(),
        resolution=study["resolution"],
        materials=config.materials(),
        lattice_constant=config.lattice_constant,
        n_bands=config.fem.n_bands,
        n_per_segment=config.fem.n_per_segment,
        policy=config.gap_policy,
        solver=config.fem.solver,
        evaluator=evaluator,
    )
    noise = fp_noise_study(
        fp=study["fp"], n_realizations=study["n_realizations"],
        seed=derive_seed(config.seed, 0), **common,
    )
    sweep_sizes, sweep_centers, sweep_rows = [], [], []
    for si, fp in enumerate(study["fp_sweep"]):
        r = fp_noise_study(
            fp=fp, n_realizations=study["sweep_realizations"],
            seed=derive_seed(config.seed, 1, si), **common,
        )
        sweep_rows.append(r)
        sweep_sizes.extend(r["gap_sizes"])
        sweep_centers.extend(r["gap_centers"])
    signal_size_std = float(np.std(sweep_sizes, ddof=1))
    signal_center_std = float(np.std(sweep_centers, ddof=1))
    summary = {
        "noise_gap_size_std_hz": noise["gap_size_std_hz"],
        "noise_gap_center_std_hz": noise["gap_center_std_hz"],
        "signal_gap_size_std_hz": signal_size_std,
        "signal_gap_center_std_hz": signal_center_std,
        "size_noise_to_signal": noise["gap_size_std_hz"] / signal_size_std,
        "center_noise_to_signal": noise["gap_center_std_hz"] / signal_center_std,
        "n_no_gap": noise["n_no_gap"] + sum(r["n_no_gap"] for r in sweep_rows),
    }
    with (out_dir / "fp_noise.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series", "fp", "realization", "gap_size_hz", "gap_center_hz"])
        for i, (s, c) in enumerate(zip(noise["gap_sizes"], noise["gap_centers"])):
            writer.writerow(["noise", repr(float(study["fp"])), i, repr(s), repr(c)])
        for r in sweep_rows:
            for i, (s, c) in enumerate(zip(r["gap_sizes"], r["gap_centers"])):
                writer.writerow(["sweep", repr(float(r["fp"])), i, repr(s), repr(c)])
    return summary


def run_study(name: str, out_dir, config_overrides: dict | None = None,
              cache: EvalCache | None = None, jobs: int = 1) -> dict:
    """Execute a named study end to end; returns the summary written to disk."""
    cfg_dict = deep_merge(default_study_config(name), config_overrides or {})
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config_used.json").write_text(json.dumps(cfg_dict, indent=2, sort_keys=True) + "\n")
    log.info("study %s -> %s", name, out_dir)
    if name in ("study-1d-uniform", "study-7d-gamma", "study-7d-gaussian"):
        summary = _spectral_study(cfg_dict, out_dir, cache, jobs)
    elif name == "resolution-convergence":
        summary = _run_resolution_convergence(cfg_dict, out_dir, cache, jobs)
    elif name == "fp-noise":
        summary = _run_fp_noise(cfg_dict, out_dir, cache, jobs)
    else:
        raise ValueError(f"unknown study {name!r}; expected one of {STUDY_NAMES}")
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary
