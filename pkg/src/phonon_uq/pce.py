"""Polynomial chaos surrogates: basis construction, fitting, evaluation.

The basis is the total-degree truncation of products of univariate
orthonormal polynomials matched to each input marginal. Coefficients can
be estimated three ways: Monte Carlo projection, least-squares regression
on sampled points, or spectral projection on quadrature nodes (tensor and
Smolyak rules share the same code path). Outputs are fitted per column, so
a q-output surrogate is q scalar expansions over one shared basis.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from math import comb
from pathlib import Path

import numpy as np

from .distributions import JointDistribution
from .orthopoly import Recurrence, eval_orthonormal_table, recurrence_for
from .quadrature import QuadratureRule
from .rng import substream


class UnderdeterminedError(ValueError):
    """Fewer samples than basis functions in a regression fit."""


class ConditioningError(RuntimeError):
    """Design matrix is numerically rank deficient."""


@dataclass(frozen=True)
class MultiIndexSet:
    """All m-tuples with total degree <= p, lexicographic, zero tuple first."""

    m: int
    p: int
    indices: tuple[tuple[int, ...], ...] = field(default=())

    def __post_init__(self):
        if self.m < 1 or self.p < 0:
            raise ValueError(f"need m >= 1 and p >= 0, got m={self.m}, p={self.p}")
        if not self.indices:
            object.__setattr__(self, "indices", tuple(_total_degree_indices(self.m, self.p)))
        if len(self.indices) != comb(self.m + self.p, self.p):
            raise ValueError(
                f"index set must have C(m+p, p) = {comb(self.m + self.p, self.p)} entries, "
                f"got {len(self.indices)}"
            )

    def __len__(self) -> int:
        return len(self.indices)


def _total_degree_indices(m: int, p: int):
    """Yield multi-indices with component sum <= p in lexicographic order."""
    def rec(prefix, remaining_dims, budget):
        if remaining_dims == 0:
            yield prefix
            return
        for d in range(budget + 1):
            yield from rec(prefix + (d,), remaining_dims - 1, budget - d)

    yield from rec((), m, p)


def multi_indices(m: int, p: int) -> MultiIndexSet:
    return MultiIndexSet(m=m, p=p)


@dataclass(frozen=True)
class PCEBasis:
    """Multi-index set plus one orthonormal recurrence per input dimension."""

    joint: JointDistribution
    index_set: MultiIndexSet
    recurrences: tuple[Recurrence, ...]

    def __post_init__(self):
        if self.index_set.m != self.joint.m:
            raise ValueError(
                f"index set dimension {self.index_set.m} does not match joint dimension {self.joint.m}"
            )
        if len(self.recurrences) != self.joint.m:
            raise ValueError("need one recurrence per input dimension")

    @classmethod
    def total_degree(cls, joint: JointDistribution, p: int) -> "PCEBasis":
        recs = tuple(recurrence_for(d, p) for d in joint.components)
        return cls(joint=joint, index_set=multi_indices(joint.m, p), recurrences=recs)

    @property
    def p(self) -> int:
        return self.index_set.p

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Basis matrix [n_points, n_indices]: products of univariate values."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.joint.m:
            raise ValueError(f"points must have {self.joint.m} columns, got {points.shape[1]}")
        tables = [
            eval_orthonormal_table(rec, self.p, points[:, j])
            for j, rec in enumerate(self.recurrences)
        ]
        out = np.ones((points.shape[0], len(self.index_set)))
        for col, idx in enumerate(self.index_set.indices):
            for j, deg in enumerate(idx):
                if deg:
                    out[:, col] *= tables[j][deg]
        return out


def eval_basis(basis: PCEBasis, x) -> np.ndarray:
    """Basis vector at a single point."""
    return basis.evaluate(np.atleast_2d(x))[0]


@dataclass(frozen=True)
class TrainingSet:
    """Aligned inputs [n, m] and outputs [n, q]; weights only in quadrature mode."""

    inputs: np.ndarray
    outputs: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        outputs = np.asarray(self.outputs, dtype=float)
        if outputs.ndim == 1:
            outputs = outputs[:, None]
        if inputs.shape[0] != outputs.shape[0]:
            raise ValueError(f"{inputs.shape[0]} input rows but {outputs.shape[0]} output rows")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape[0] != inputs.shape[0]:
                raise ValueError("weights must align with rows")
            if abs(w.sum() - 1.0) > 1e-10:
                raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
            object.__setattr__(self, "weights", w)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]


@dataclass(frozen=True)
class PCESurrogate:
    """Truncated expansion: coefficients [n_indices, q] over a PCEBasis."""

    basis: PCEBasis
    coefficients: np.ndarray
    fit_method: str
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        coeffs = np.atleast_2d(np.asarray(self.coefficients, dtype=float))
        if coeffs.shape[0] != len(self.basis.index_set):
            raise ValueError(
                f"coefficient rows {coeffs.shape[0]} must match basis size {len(self.basis.index_set)}"
            )
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def q(self) -> int:
        return self.coefficients.shape[1]

    def __call__(self, x) -> np.ndarray:
        return evaluate(self, x)


def fit_mc_projection(train: TrainingSet, basis: PCEBasis) -> PCESurrogate:
    """Projection estimate: each coefficient is the sample mean of y * basis value."""
    if train.weights is not None:
        raise ValueError("Monte Carlo projection takes an unweighted training set")
    phi = basis.evaluate(train.inputs)
    coeffs = phi.T @ train.outputs / train.n
    return PCESurrogate(basis=basis, coefficients=coeffs, fit_method="mc_projection")


def fit_least_squares(train: TrainingSet, basis: PCEBasis) -> PCESurrogate:
    """Least-squares collocation; requires at least as many rows as basis functions."""
    n_basis = len(basis.index_set)
    if train.n < n_basis:
        raise UnderdeterminedError(
            f"least-squares fit needs at least {n_basis} samples for {n_basis} coefficients, "
            f"got {train.n}"
        )
    phi = basis.evaluate(train.inputs)
    coeffs, _, rank, sv = np.linalg.lstsq(phi, train.outputs, rcond=None)
    if rank < n_basis:
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
        raise ConditioningError(
            f"design matrix rank {rank} < {n_basis} basis functions (condition ~{cond:.2e})"
        )
    return PCESurrogate(basis=basis, coefficients=coeffs, fit_method="least_squares")


def fit_quadrature(rule: QuadratureRule, outputs: np.ndarray, basis: PCEBasis) -> PCESurrogate:
    """Spectral projection on quadrature nodes: a_n = sum_i w_i y_i Phi_n(x_i).

    The same path serves tensor and Smolyak rules; outputs must be
    row-aligned with the rule nodes.
    """
    outputs = np.asarray(outputs, dtype=float)
    if outputs.ndim == 1:
        outputs = outputs[:, None]
    if outputs.shape[0] != rule.n_nodes:
        raise ValueError(f"outputs rows {outputs.shape[0]} must align with {rule.n_nodes} nodes")
    phi = basis.evaluate(rule.nodes)
    coeffs = phi.T @ (rule.weights[:, None] * outputs)
    return PCESurrogate(basis=basis, coefficients=coeffs, fit_method="quadrature")


def evaluate(surrogate: PCESurrogate, x) -> np.ndarray:
    """Surrogate outputs at one point (q,) or a batch [n, q]."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    phi = surrogate.basis.evaluate(np.atleast_2d(x))
    out = phi @ surrogate.coefficients
    return out[0] if single else out


def surrogate_moments(surrogate: PCESurrogate) -> tuple[np.ndarray, np.ndarray]:
    """(mean, variance) per output from the orthonormal coefficients."""
    mean = surrogate.coefficients[0].copy()
    var = (surrogate.coefficients[1:] ** 2).sum(axis=0)
    return mean, var


def sample_surrogate(surrogate: PCESurrogate, n: int, seed: int) -> np.ndarray:
    """Push n joint-distribution draws through the surrogate."""
    x = surrogate.basis.joint.sample(n, seed)
    return evaluate(surrogate, x)


def training_hash(train_inputs: np.ndarray, train_outputs: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(np.asarray(train_inputs, dtype=float)).tobytes())
    h.update(np.ascontiguousarray(np.asarray(train_outputs, dtype=float)).tobytes())
    return h.hexdigest()


def save_surrogate(surrogate: PCESurrogate, path) -> None:
    """JSON with joint spec, multi-index list, coefficients and provenance."""
    obj = {
        "schema_version": 1,
        "joint": surrogate.basis.joint.to_json_obj(),
        "m": surrogate.basis.joint.m,
        "p": surrogate.basis.p,
        "multi_indices": [list(i) for i in surrogate.basis.index_set.indices],
        "coefficients": [[repr(float(v)) for v in row] for row in surrogate.coefficients],
        "fit_method": surrogate.fit_method,
        "provenance": surrogate.provenance,
    }
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def load_surrogate(path) -> PCESurrogate:
    obj = json.loads(Path(path).read_text())
    joint = JointDistribution.from_json_obj(obj["joint"])
    basis = PCEBasis.total_degree(joint, obj["p"])
    stored = tuple(tuple(i) for i in obj["multi_indices"])
    if stored != basis.index_set.indices:
        raise ValueError("stored multi-index list does not match the total-degree basis")
    coeffs = np.array([[float(v) for v in row] for row in obj["coefficients"]])
    return PCESurrogate(
        basis=basis,
        coefficients=coeffs,
        fit_method=obj["fit_method"],
        provenance=obj.get("provenance", {}),
    )
