"""Command-line entry point: batch in, files out.

Subcommands mirror the pipeline stages: dispersion (band diagram for the
configured cell), defects (defect realization files), sample (dataset
generation under the sampling plan), fit (PCE from a dataset), compare
(surrogate vs ground-truth report) and study (the named end-to-end
experiments). Exit code 0 on success; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .bandgap import write_gap_csv
from .cache import EvalCache
from .config import ConfigError, ExperimentConfig, deep_merge
from .geometry import DefectSpec, apply_defects, find_edge_pixels, scale_bitmap, write_bitmap
from .pce import load_surrogate, save_surrogate
from .pipeline import PipelineError, fit_dataset, generate_dataset, read_dataset, run_dispersion, write_dataset
from .rng import derive_seed
from .studies import STUDY_NAMES, run_study

log = logging.getLogger("phonon_uq")


def _add_common(parser: argparse.ArgumentParser, config_required: bool = True) -> None:
    parser.add_argument("--config", type=Path, required=config_required,
                        help="experiment config JSON")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out-dir", type=Path, required=True, help="report/output directory")
    parser.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    parser.add_argument("--cache-dir", type=Path, default=None, help="dispersion result cache")


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.load(args.config)
    if args.seed is not None:
        config = ExperimentConfig.from_dict(deep_merge(config.to_dict(), {"seed": args.seed}))
    return config


def _cache(args) -> EvalCache | None:
    return EvalCache(args.cache_dir) if args.cache_dir is not None else None


def _cmd_dispersion(args) -> int:
    from . import plotting

    config = _load_config(args)
    cache = _cache(args)
    disp, gaps = run_dispersion(config, cache)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    from .fem import write_dispersion_csv

    write_dispersion_csv(disp, out / "bands.csv")
    write_gap_csv([g for g in gaps] or [], out / "gaps.csv")
    plotting.band_diagram(disp, gaps, out / "bands.svg")
    print(f"wrote {out / 'bands.csv'} ({len(gaps)} gap(s))")
    return 0


def _cmd_defects(args) -> int:
    config = _load_config(args)
    bitmap = scale_bitmap(config.geometry.load(), config.geometry.scale)
    edge = find_edge_pixels(bitmap)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_bitmap(bitmap, out / "design.txt")
    rows = []
    for i in range(args.count):
        spec = DefectSpec(args.fp, derive_seed(config.seed, i))
        defective = apply_defects(bitmap, spec)
        write_bitmap(defective, out / f"defect_{i:03d}.txt")
        flipped = int((defective.cells != bitmap.cells).sum())
        rows.append((i, spec.seed, flipped))
    with (out / "defects.csv").open("w", newline="") as fh:
        import csv

        writer = csv.writer(fh)
        writer.writerow(["realization", "seed", "n_flipped"])
        writer.writerows(rows)
    print(f"{len(edge)} edge pixels; wrote {args.count} realizations to {out}")
    return 0


def _cmd_sample(args) -> int:
    config = _load_config(args)
    dataset = generate_dataset(config, cache=_cache(args), jobs=args.jobs)
    write_dataset(dataset, args.out_dir)
    n_bad = sum(1 for s in dataset.statuses if s != "ok")
    print(f"wrote {dataset.n} rows to {args.out_dir} ({n_bad} without gap)")
    return 0


def _cmd_fit(args) -> int:
    config = _load_config(args)
    dataset = read_dataset(args.dataset)
    surrogate = fit_dataset(config, dataset)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_surrogate(surrogate, out / "surrogate.json")
    print(f"fitted {surrogate.fit_method} surrogate ({len(surrogate.basis.index_set)} coefficients)")
    return 0


def _cmd_compare(args) -> int:
    import numpy as np

    from . import plotting
    from .pce import sample_surrogate
    from .pipeline import OUTPUT_LABELS
    from .analysis import compare_samples

    surrogate = load_surrogate(args.surrogate)
    dataset = read_dataset(args.dataset)
    if tuple(dataset.labels) != surrogate.basis.joint.labels:
        print(
            f"error: dataset inputs {dataset.labels} do not match surrogate joint "
            f"{surrogate.basis.joint.labels}",
            file=sys.stderr,
        )
        return 1
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    draws = sample_surrogate(surrogate, args.draws, args.seed if args.seed is not None else 0)
    ok = dataset.ok_mask()
    gt = dataset.outputs[ok]
    report = {"n_draws": args.draws, "n_reference": int(ok.sum()),
              "n_excluded": int((~ok).sum()), "outputs": {}}
    for col, label in enumerate(OUTPUT_LABELS):
        comp = compare_samples(gt[:, col], draws[:, col])
        report["outputs"][label] = {
            "ks": comp.ks_statistic,
            "mean_rel_err": comp.mean_rel_err,
            "std_rel_err": comp.std_rel_err,
        }
        plotting.kde_overlay(gt[:, col], draws[:, col], label, out / f"kde_{label}.svg")
    plotting.hist2d_quartet(gt, draws, out / "comparison_quartet.svg")
    (out / "comparison.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(json.dumps(report["outputs"], indent=2, sort_keys=True))
    return 0


def _cmd_study(args) -> int:
    overrides = {}
    if args.config is not None:
        overrides = json.loads(Path(args.config).read_text())
    if args.seed is not None:
        overrides = deep_merge(overrides, {"seed": args.seed})
    summary = run_study(args.name, args.out_dir, overrides, cache=_cache(args), jobs=args.jobs)
    print(f"study {args.name} complete; summary at {Path(args.out_dir) / 'summary.json'}")
    del summary
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phonon-uq",
        description="Bandgap uncertainty quantification for pixelated acoustic metamaterials.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dispersion", help="band diagram + gap table for the configured cell")
    _add_common(p)
    p.set_defaults(func=_cmd_dispersion)

    p = sub.add_parser("defects", help="write seeded defect realizations of the configured cell")
    _add_common(p)
    p.add_argument("--count", type=int, default=5, help="number of realizations")
    p.add_argument("--fp", type=float, default=0.05, help="edge-pixel flip proportion")
    p.set_defaults(func=_cmd_defects)

    p = sub.add_parser("sample", help="generate a dataset under the configured sampling plan")
    _add_common(p)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("fit", help="fit the configured PCE surrogate to a dataset")
    _add_common(p)
    p.add_argument("--dataset", type=Path, required=True, help="dataset directory from 'sample'")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("compare", help="compare a surrogate against a ground-truth dataset")
    p.add_argument("--surrogate", type=Path, required=True)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--draws", type=int, default=10000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", type=Path, required=True)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("study", help="run a named end-to-end study")
    p.add_argument("name", choices=STUDY_NAMES)
    _add_common(p, config_required=False)
    p.set_defaults(func=_cmd_study)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, PipelineError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
