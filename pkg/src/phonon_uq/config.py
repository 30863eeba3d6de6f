"""JSON experiment configuration.

A config fully determines an experiment: geometry source, nominal phase
materials, the joint input distribution over chosen properties, FEM and
gap-extraction settings, the sampling plan, PCE settings and seeds. Input
dimensions are named ``<property>_<phase>`` (property one of E, nu, K, G,
rho against the phase's declared parameterization) or ``fp`` for the
defect flip proportion. Configs round-trip through JSON losslessly.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .bandgap import GapPolicy
from .designs import get_design
from .distributions import Distribution1D, JointDistribution
from .geometry import UnitCellBitmap, read_bitmap
from .materials import ElasticMaterial, MaterialPair

SCHEMA_VERSION = 1

_MATERIAL_PARAM_SETS = (("E", "nu", "rho"), ("K", "G", "rho"))


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GeometryConfig:
    design: str = "builtin:cross8"
    scale: int = 2

    def __post_init__(self):
        if self.scale < 1:
            raise ConfigError(f"geometry scale must be >= 1, got {self.scale}")

    def load(self) -> UnitCellBitmap:
        """Design bitmap before scaling."""
        if self.design.startswith("builtin:"):
            return get_design(self.design.split(":", 1)[1])
        path = Path(self.design)
        if not path.exists():
            raise ConfigError(f"geometry file does not exist: {path}")
        return read_bitmap(path)


@dataclass(frozen=True)
class PhaseConfig:
    """Nominal values for one phase, keyed by its parameterization."""

    params: dict

    def __post_init__(self):
        keys = tuple(sorted(self.params))
        if keys not in tuple(tuple(sorted(s)) for s in _MATERIAL_PARAM_SETS):
            raise ConfigError(
                f"phase must be given as one of {_MATERIAL_PARAM_SETS}, got keys {keys}"
            )

    @property
    def parameterization(self) -> tuple[str, ...]:
        return ("E", "nu", "rho") if "E" in self.params else ("K", "G", "rho")

    def material(self, overrides: dict | None = None) -> ElasticMaterial:
        vals = dict(self.params)
        for name, value in (overrides or {}).items():
            if name not in vals:
                raise ConfigError(
                    f"cannot override {name!r}: phase is parameterized by {self.parameterization}"
                )
            vals[name] = value
        if "E" in vals:
            return ElasticMaterial.from_EN(vals["E"], vals["nu"], vals["rho"])
        return ElasticMaterial.from_KG(vals["K"], vals["G"], vals["rho"])


@dataclass(frozen=True)
class FemConfig:
    n_bands: int = 10
    n_per_segment: int = 8
    solver: str = "auto"

    def __post_init__(self):
        if self.n_bands < 2:
            raise ConfigError(f"n_bands must be >= 2, got {self.n_bands}")
        if self.n_per_segment < 2:
            raise ConfigError(f"n_per_segment must be >= 2, got {self.n_per_segment}")
        if self.solver not in ("auto", "dense", "iterative"):
            raise ConfigError(f"solver must be auto|dense|iterative, got {self.solver!r}")


@dataclass(frozen=True)
class PlanConfig:
    """Sampling plan: mc (n points), quadrature (degree), or sparse (level)."""

    method: str = "mc"
    n: int | None = None
    degree: int | None = None
    level: int | None = None

    def __post_init__(self):
        if self.method == "mc":
            if not self.n or self.n < 1:
                raise ConfigError(f"mc plan needs n >= 1, got {self.n}")
        elif self.method == "quadrature":
            if self.degree is None or self.degree < 0:
                raise ConfigError(f"quadrature plan needs degree >= 0, got {self.degree}")
        elif self.method == "sparse":
            if self.level is None or self.level < 0:
                raise ConfigError(f"sparse plan needs level >= 0, got {self.level}")
        else:
            raise ConfigError(f"plan method must be mc|quadrature|sparse, got {self.method!r}")


@dataclass(frozen=True)
class PceConfig:
    degree: int = 1
    fit: str = "auto"

    def __post_init__(self):
        if self.degree < 0:
            raise ConfigError(f"pce degree must be >= 0, got {self.degree}")
        if self.fit not in ("auto", "least_squares", "projection"):
            raise ConfigError(f"pce fit must be auto|least_squares|projection, got {self.fit!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    lattice_constant: float = 0.1
    soft: PhaseConfig = field(default_factory=lambda: PhaseConfig({"E": 200e6, "nu": 0.38, "rho": 1000.0}))
    hard: PhaseConfig = field(default_factory=lambda: PhaseConfig({"E": 200e9, "nu": 0.28, "rho": 8000.0}))
    fem: FemConfig = field(default_factory=FemConfig)
    gap_policy: GapPolicy = field(default_factory=GapPolicy)
    inputs: tuple[dict, ...] = ()
    plan: PlanConfig = field(default_factory=PlanConfig)
    pce: PceConfig = field(default_factory=PceConfig)
    seed: int = 0
    surrogate_draws: int = 10000

    def __post_init__(self):
        if not self.lattice_constant > 0:
            raise ConfigError(f"lattice_constant must be positive, got {self.lattice_constant}")
        if self.seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed}")
        for spec in self.inputs:
            self._check_label(spec.get("name", ""))

    def _check_label(self, label: str) -> None:
        if label == "fp":
            return
        prop, _, phase = label.partition("_")
        if phase not in ("soft", "hard"):
            raise ConfigError(
                f"input label {label!r} must be 'fp' or '<property>_<phase>' with phase soft|hard"
            )
        phase_cfg = self.soft if phase == "soft" else self.hard
        if prop not in phase_cfg.parameterization:
            raise ConfigError(
                f"input label {label!r}: {phase} phase is parameterized by "
                f"{phase_cfg.parameterization}"
            )

    def joint(self) -> JointDistribution:
        if not self.inputs:
            raise ConfigError("config declares no stochastic inputs")
        comps = tuple(Distribution1D.from_json_obj(spec) for spec in self.inputs)
        labels = tuple(spec["name"] for spec in self.inputs)
        return JointDistribution(comps, labels)

    def materials(self, overrides_by_label: dict | None = None) -> MaterialPair:
        """Nominal pair with sampled per-label overrides applied."""
        soft_over: dict = {}
        hard_over: dict = {}
        for label, value in (overrides_by_label or {}).items():
            if label == "fp":
                continue
            prop, _, phase = label.partition("_")
            (soft_over if phase == "soft" else hard_over)[prop] = value
        return MaterialPair(
            soft=self.soft.material(soft_over), hard=self.hard.material(hard_over)
        )

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "geometry": {"design": self.geometry.design, "scale": self.geometry.scale},
            "lattice_constant": self.lattice_constant,
            "materials": {"soft": dict(self.soft.params), "hard": dict(self.hard.params)},
            "fem": asdict(self.fem),
            "gap_policy": {"mode": self.gap_policy.mode, "band": self.gap_policy.band},
            "inputs": [dict(spec) for spec in self.inputs],
            "plan": {k: v for k, v in asdict(self.plan).items() if v is not None},
            "pce": asdict(self.pce),
            "seed": self.seed,
            "surrogate_draws": self.surrogate_draws,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        version = obj.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version}, expected {SCHEMA_VERSION}")
        known = {
            "schema_version", "geometry", "lattice_constant", "materials", "fem",
            "gap_policy", "inputs", "plan", "pce", "seed", "surrogate_draws",
        }
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        mats = obj.get("materials", {})
        gp = obj.get("gap_policy", {})
        return cls(
            geometry=GeometryConfig(**obj.get("geometry", {})),
            lattice_constant=obj.get("lattice_constant", 0.1),
            soft=PhaseConfig(dict(mats.get("soft", {"E": 200e6, "nu": 0.38, "rho": 1000.0}))),
            hard=PhaseConfig(dict(mats.get("hard", {"E": 200e9, "nu": 0.28, "rho": 8000.0}))),
            fem=FemConfig(**obj.get("fem", {})),
            gap_policy=GapPolicy(mode=gp.get("mode", "largest"), band=gp.get("band")),
            inputs=tuple(obj.get("inputs", ())),
            plan=PlanConfig(**obj.get("plan", {})),
            pce=PceConfig(**obj.get("pce", {})),
            seed=obj.get("seed", 0),
            surrogate_draws=obj.get("surrogate_draws", 10000),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            obj = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        return cls.from_dict(obj)


def deep_merge(base: dict, override: dict) -> dict:
    """Recursive dict merge; override wins, lists replace wholesale."""
    out = dict(base)
    for key, value in override.items():
        if key in out and isinstance(out[key], dict) and isinstance(value, dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = value
    return out
