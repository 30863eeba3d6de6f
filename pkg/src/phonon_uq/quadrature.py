"""Gauss rules, tensor-product grids and Smolyak sparse grids.

All rules integrate against probability measures, so weights sum to one;
Smolyak combination weights may be negative. Nodes are (n, m) arrays in
deterministic lexicographic order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import comb
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from .distributions import Distribution1D, JointDistribution
from .orthopoly import recurrence_for


class GridSizeError(ValueError):
    """Requested grid exceeds the configured node cap."""


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes (n, m) and weights (n,) of an m-dimensional cubature."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.atleast_2d(np.asarray(self.nodes, dtype=float))
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape[0] != weights.shape[0]:
            raise ValueError(f"{nodes.shape[0]} nodes but {weights.shape[0]} weights")
        if abs(weights.sum() - 1.0) > 1e-10:
            raise ValueError(f"weights must sum to 1 (probability measure), got {weights.sum()!r}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def dimension(self) -> int:
        return self.nodes.shape[1]


@dataclass(frozen=True)
class SparseGridSpec:
    level: int
    dimension: int

    def __post_init__(self):
        if self.level < 0:
            raise ValueError(f"level must be >= 0, got {self.level}")
        if self.dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}")


def gauss_rule(dist: Distribution1D, n_points: int) -> QuadratureRule:
    """n-point Gauss rule for a distribution via the Jacobi-matrix eigenproblem.

    Nodes are the eigenvalues of the symmetric tridiagonal matrix built from
    the recurrence; weights are the squared first eigenvector components.
    Exact for polynomials up to degree 2n - 1 against the measure.
    """
    if n_points < 1:
        raise ValueError(f"n_points must be >= 1, got {n_points}")
    rec = recurrence_for(dist, n_points)
    if n_points == 1:
        return QuadratureRule(nodes=np.array([[rec.alpha[0]]]), weights=np.array([1.0]))
    diag = rec.alpha[:n_points]
    off = np.sqrt(rec.beta[1:n_points])
    vals, vecs = sla.eigh_tridiagonal(diag, off)
    weights = vecs[0, :] ** 2
    weights = weights / weights.sum()
    return QuadratureRule(nodes=vals[:, None], weights=weights)


def tensor_grid(rules: list[QuadratureRule], max_nodes: int = 2_000_000) -> QuadratureRule:
    """Full Cartesian product of 1D rules; errors out beyond ``max_nodes``."""
    if not rules:
        raise ValueError("need at least one 1D rule")
    for r in rules:
        if r.dimension != 1:
            raise ValueError("tensor_grid expects 1D component rules")
    count = 1
    for r in rules:
        count *= r.n_nodes
        if count > max_nodes:
            raise GridSizeError(
                f"tensor grid would have {'>' if count > max_nodes else ''}{count} nodes, "
                f"cap is {max_nodes}"
            )
    axes = [r.nodes[:, 0] for r in rules]
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([g.ravel() for g in mesh], axis=1)
    weights = rules[0].weights
    for r in rules[1:]:
        weights = np.multiply.outer(weights, r.weights).ravel()
    return QuadratureRule(nodes=nodes, weights=weights)


def _compositions(total: int, parts: int):
    """All tuples of ``parts`` positive ints summing to ``total``, lexicographic."""
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first, *rest)


def _merge_nodes(nodes: np.ndarray, weights: np.ndarray):
    """Union-find merge of nodes equal within 1e-12 relative per coordinate."""
    n, m = nodes.shape
    scale = np.maximum(np.abs(nodes).max(axis=0), 1.0)
    parent = np.arange(n)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    # pairwise comparison in chunks; sparse grids stay small so this is cheap
    chunk = max(1, 10_000_000 // max(n * m, 1))
    for start in range(0, n, chunk):
        block = nodes[start : start + chunk, None, :]
        close = (np.abs(block - nodes[None, :, :]) <= 1e-12 * scale).all(axis=2)
        for bi, j in zip(*np.nonzero(close)):
            i = start + int(bi)
            j = int(j)
            if i < j:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    roots = np.array([find(i) for i in range(n)])
    uniq, inverse = np.unique(roots, return_inverse=True)
    merged_w = np.zeros(len(uniq))
    np.add.at(merged_w, inverse, weights)
    merged_nodes = nodes[uniq]
    order = np.lexsort(merged_nodes.T[::-1])
    return merged_nodes[order], merged_w[order]


def smolyak_grid(
    joint: JointDistribution,
    spec: SparseGridSpec,
    max_nodes: int = 2_000_000,
) -> QuadratureRule:
    """Smolyak sparse grid with Gauss component rules of growth n(level) = level + 1.

    Uses the classical combination formula over one-dimensional levels whose
    sum is constrained by the grid level; duplicate nodes are merged by weight
    summation. At dimension 1 this reduces to the plain (level + 1)-point
    Gauss rule.
    """
    m = joint.m
    if spec.dimension != m:
        raise ValueError(f"spec dimension {spec.dimension} does not match joint dimension {m}")
    q = spec.level + m
    cache: dict[tuple[int, int], QuadratureRule] = {}

    def rule_1d(dim: int, pts: int) -> QuadratureRule:
        key = (dim, pts)
        if key not in cache:
            cache[key] = gauss_rule(joint.components[dim], pts)
        return cache[key]

    all_nodes = []
    all_weights = []
    for total in range(max(m, q - m + 1), q + 1):
        coeff = (-1.0) ** (q - total) * comb(m - 1, q - total)
        if coeff == 0.0:
            continue
        for levels in _compositions(total, m):
            part = tensor_grid([rule_1d(j, levels[j]) for j in range(m)], max_nodes=max_nodes)
            all_nodes.append(part.nodes)
            all_weights.append(coeff * part.weights)
            if sum(len(w) for w in all_weights) > max_nodes:
                raise GridSizeError(f"sparse grid exceeded node cap {max_nodes}")
    nodes = np.vstack(all_nodes)
    weights = np.concatenate(all_weights)
    nodes, weights = _merge_nodes(nodes, weights)
    return QuadratureRule(nodes=nodes, weights=weights)


def write_rule_csv(rule: QuadratureRule, path) -> None:
    """Columns: node_1..node_m, weight (full double precision)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"node_{j + 1}" for j in range(rule.dimension)] + ["weight"])
        for x, w in zip(rule.nodes, rule.weights):
            writer.writerow([repr(float(v)) for v in x] + [repr(float(w))])


def read_rule_csv(path) -> QuadratureRule:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        rows = [[float(v) for v in row] for row in reader]
    arr = np.array(rows)
    return QuadratureRule(nodes=arr[:, :-1], weights=arr[:, -1])
