"""Parametric 1D distributions and independent joint input models.

Five families are supported: uniform, normal, truncated normal, gamma
(shape/scale), and beta on [0, 1]. Joint models are products of
independent marginals with named dimensions. Sampling is inverse-transform
on dimension-keyed Philox streams: entry (i, j) of a sample matrix depends
only on (seed, dimension j, row i), so draws are reproducible across
platforms and invariant to evaluation order or sample count.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.stats

from .rng import substream

FAMILIES = ("uniform", "normal", "truncated_normal", "gamma", "beta")

_PARAM_NAMES = {
    "uniform": ("lo", "hi"),
    "normal": ("mu", "sigma"),
    "truncated_normal": ("mu", "sigma", "lo", "hi"),
    "gamma": ("shape", "scale"),
    "beta": ("alpha", "beta"),
}


@dataclass(frozen=True)
class Distribution1D:
    """One marginal: family name plus its parameter tuple (see _PARAM_NAMES)."""

    family: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        names = _PARAM_NAMES[self.family]
        if len(self.params) != len(names):
            raise ValueError(f"{self.family} needs params {names}, got {self.params}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        p = dict(zip(names, self.params))
        if self.family == "uniform" and not p["lo"] < p["hi"]:
            raise ValueError(f"uniform needs lo < hi, got {self.params}")
        if self.family in ("normal", "truncated_normal") and not p["sigma"] > 0:
            raise ValueError(f"sigma must be positive, got {p['sigma']}")
        if self.family == "truncated_normal":
            if not p["lo"] < p["hi"]:
                raise ValueError(f"truncation needs lo < hi, got {self.params}")
            z = scipy.stats.norm(p["mu"], p["sigma"])
            if z.cdf(p["hi"]) - z.cdf(p["lo"]) < 1e-12:
                raise ValueError("truncation interval carries negligible probability mass")
        if self.family == "gamma" and not (p["shape"] > 0 and p["scale"] > 0):
            raise ValueError(f"gamma needs shape > 0 and scale > 0, got {self.params}")
        if self.family == "beta" and not (p["alpha"] > 0 and p["beta"] > 0):
            raise ValueError(f"beta needs alpha > 0 and beta > 0, got {self.params}")

    # -- constructors ------------------------------------------------------

    @classmethod
    def uniform(cls, lo, hi):
        return cls("uniform", (lo, hi))

    @classmethod
    def normal(cls, mu, sigma):
        return cls("normal", (mu, sigma))

    @classmethod
    def truncated_normal(cls, mu, sigma, lo, hi):
        return cls("truncated_normal", (mu, sigma, lo, hi))

    @classmethod
    def gamma(cls, shape, scale):
        return cls("gamma", (shape, scale))

    @classmethod
    def beta(cls, alpha, beta):
        return cls("beta", (alpha, beta))

    # -- scipy bridge ------------------------------------------------------

    def frozen(self):
        """Equivalent frozen scipy.stats distribution."""
        p = dict(zip(_PARAM_NAMES[self.family], self.params))
        if self.family == "uniform":
            return scipy.stats.uniform(p["lo"], p["hi"] - p["lo"])
        if self.family == "normal":
            return scipy.stats.norm(p["mu"], p["sigma"])
        if self.family == "truncated_normal":
            za = (p["lo"] - p["mu"]) / p["sigma"]
            zb = (p["hi"] - p["mu"]) / p["sigma"]
            return scipy.stats.truncnorm(za, zb, loc=p["mu"], scale=p["sigma"])
        if self.family == "gamma":
            return scipy.stats.gamma(p["shape"], scale=p["scale"])
        return scipy.stats.beta(p["alpha"], p["beta"])

    def pdf(self, x):
        return self.frozen().pdf(x)

    def cdf(self, x):
        return self.frozen().cdf(x)

    def ppf(self, q):
        return self.frozen().ppf(q)

    def isf(self, q):
        """Upper-tail quantile (inverse survival function)."""
        return self.frozen().isf(q)

    def mean(self) -> float:
        return float(self.frozen().mean())

    def std(self) -> float:
        return float(self.frozen().std())

    def support(self) -> tuple[float, float]:
        lo, hi = self.frozen().support()
        return float(lo), float(hi)

    def sample(self, n: int, seed: int) -> np.ndarray:
        return np.asarray(self.ppf(substream(seed, 0).random(n)))

    # -- serialization (joint spec schema: {name, family, params, truncation?}) --

    def to_json_obj(self, name: str | None = None) -> dict:
        names = _PARAM_NAMES[self.family]
        obj: dict = {}
        if name is not None:
            obj["name"] = name
        if self.family == "truncated_normal":
            obj["family"] = "normal"
            obj["params"] = {"mu": self.params[0], "sigma": self.params[1]}
            obj["truncation"] = {"lo": self.params[2], "hi": self.params[3]}
        else:
            obj["family"] = self.family
            obj["params"] = dict(zip(names, self.params))
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Distribution1D":
        family = obj["family"]
        params = obj["params"]
        if "truncation" in obj:
            if family not in ("normal", "truncated_normal"):
                raise ValueError(f"truncation is only supported for normal, got {family!r}")
            return cls.truncated_normal(
                params["mu"], params["sigma"], obj["truncation"]["lo"], obj["truncation"]["hi"]
            )
        names = _PARAM_NAMES[family]
        return cls(family, tuple(params[n] for n in names))


def gamma_from_mean_cov(mean: float, cov: float) -> Distribution1D:
    """Gamma with given mean and coefficient of variation: shape 1/cov^2, scale mean*cov^2."""
    if not mean > 0:
        raise ValueError(f"mean must be positive, got {mean}")
    if not 0 < cov < 1:
        raise ValueError(f"cov ratio must lie in (0, 1), got {cov}")
    shape = 1.0 / (cov * cov)
    return Distribution1D.gamma(shape, mean / shape)


def beta_from_mean_std(mean: float, std: float) -> Distribution1D:
    """Beta on [0, 1] matching the given mean and standard deviation."""
    if not 0 < mean < 1:
        raise ValueError(f"mean must lie in (0, 1), got {mean}")
    var = std * std
    if not 0 < var < mean * (1.0 - mean):
        raise ValueError(f"infeasible std {std} for mean {mean}: need 0 < var < mean*(1-mean)")
    common = mean * (1.0 - mean) / var - 1.0
    return Distribution1D.beta(mean * common, (1.0 - mean) * common)


def truncate(dist: Distribution1D, lo: float | None = None, hi: float | None = None) -> Distribution1D:
    """Truncate a normal marginal; bounds default to mean +/- 4 sigma."""
    if dist.family != "normal":
        raise ValueError(f"truncate expects a normal distribution, got {dist.family!r}")
    mu, sigma = dist.params
    if lo is None:
        lo = mu - 4.0 * sigma
    if hi is None:
        hi = mu + 4.0 * sigma
    return Distribution1D.truncated_normal(mu, sigma, lo, hi)


@dataclass(frozen=True)
class JointDistribution:
    """Product of independent named marginals."""

    components: tuple[Distribution1D, ...]
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        components = tuple(self.components)
        if not components:
            raise ValueError("joint distribution needs at least one component")
        labels = tuple(self.labels) or tuple(f"x{j}" for j in range(len(components)))
        if len(labels) != len(components):
            raise ValueError(f"{len(components)} components but {len(labels)} labels")
        if len(set(labels)) != len(labels):
            raise ValueError(f"dimension labels must be unique, got {labels}")
        object.__setattr__(self, "components", components)
        object.__setattr__(self, "labels", labels)

    @property
    def m(self) -> int:
        return len(self.components)

    def sample(self, n: int, seed: int) -> np.ndarray:
        """i.i.d. sample matrix [n x m]; row i / column j depends only on (seed, j, i)."""
        if n < 1:
            raise ValueError(f"sample count must be >= 1, got {n}")
        out = np.empty((n, self.m))
        for j, dist in enumerate(self.components):
            u = substream(seed, j).random(n)
            out[:, j] = dist.ppf(u)
        return out

    def pdf(self, x) -> float:
        """Joint density: product of marginal densities (zero outside support)."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.m,):
            raise ValueError(f"point must have length {self.m}, got shape {x.shape}")
        out = 1.0
        for xi, dist in zip(x, self.components):
            out *= float(dist.pdf(xi))
        return out

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no dimension labelled {label!r}; have {self.labels}") from None

    def to_json_obj(self) -> list[dict]:
        return [d.to_json_obj(name) for name, d in zip(self.labels, self.components)]

    @classmethod
    def from_json_obj(cls, obj: list[dict]) -> "JointDistribution":
        comps = tuple(Distribution1D.from_json_obj(o) for o in obj)
        labels = tuple(o.get("name", f"x{j}") for j, o in enumerate(obj))
        return cls(comps, labels)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_obj(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "JointDistribution":
        return cls.from_json_obj(json.loads(Path(path).read_text()))


def sample_joint(joint: JointDistribution, n: int, seed: int) -> np.ndarray:
    """Functional alias for :meth:`JointDistribution.sample`."""
    return joint.sample(n, seed)


def pdf_joint(joint: JointDistribution, x) -> float:
    return joint.pdf(x)


def write_samples_csv(matrix: np.ndarray, labels, path) -> None:
    """Sample matrix CSV with labelled header, full double precision."""
    matrix = np.asarray(matrix)
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(labels))
        for row in matrix:
            writer.writerow([repr(float(v)) for v in row])


def read_samples_csv(path) -> tuple[np.ndarray, list[str]]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        labels = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return np.array(rows), labels


def poisson_ratio_guard(value: float, label: str) -> float:
    """Clamp-free validity check for sampled Poisson ratios."""
    if not -1.0 < value < 0.5:
        raise ValueError(f"sampled {label}={value} outside physical range (-1, 0.5)")
    return value
