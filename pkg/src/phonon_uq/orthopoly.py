"""Orthonormal polynomial families for the supported input measures.

Each family is stored as the three-term recurrence of its monic orthogonal
polynomials: p_{k+1}(x) = (x - alpha_k) p_k(x) - beta_k p_{k-1}(x), with
beta_0 = 1 (probability measures). The orthonormal family follows by
normalizing with sqrt(beta). Closed forms cover uniform -> Legendre,
normal -> Hermite, gamma -> Laguerre and beta -> Jacobi, each mapped to the
distribution's actual support; anything else (notably truncated normals)
goes through the discretized Stieltjes procedure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import Distribution1D


class RecurrenceError(RuntimeError):
    """Recurrence construction broke down; message names the degree reached."""


@dataclass(frozen=True, eq=False)
class Recurrence:
    """Monic three-term recurrence coefficients up to ``max_degree``."""

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        beta = np.asarray(self.beta, dtype=float)
        if alpha.shape != beta.shape or alpha.ndim != 1:
            raise ValueError("alpha and beta must be 1D arrays of equal length")
        if abs(beta[0] - 1.0) > 1e-12:
            raise ValueError(f"beta[0] must equal the measure mass 1, got {beta[0]}")
        if len(beta) > 1 and np.any(beta[1:] <= 0):
            k = 1 + int(np.argmax(beta[1:] <= 0))
            raise ValueError(f"beta[{k}] = {beta[k]} must be positive")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def max_degree(self) -> int:
        return len(self.alpha) - 1

    def affine(self, shift: float, scale: float) -> "Recurrence":
        """Recurrence of the measure pushed through x -> shift + scale * x."""
        beta = self.beta * scale * scale
        beta[0] = 1.0
        return Recurrence(alpha=shift + scale * self.alpha, beta=beta)


def _legendre(max_degree: int) -> Recurrence:
    k = np.arange(max_degree + 1, dtype=float)
    beta = np.empty(max_degree + 1)
    beta[0] = 1.0
    if max_degree >= 1:
        kk = k[1:]
        beta[1:] = kk * kk / (4.0 * kk * kk - 1.0)
    return Recurrence(alpha=np.zeros(max_degree + 1), beta=beta)


def _hermite(max_degree: int) -> Recurrence:
    beta = np.arange(max_degree + 1, dtype=float)
    beta[0] = 1.0
    return Recurrence(alpha=np.zeros(max_degree + 1), beta=beta)


def _laguerre(max_degree: int, shape: float) -> Recurrence:
    k = np.arange(max_degree + 1, dtype=float)
    alpha = 2.0 * k + shape
    beta = k * (k + shape - 1.0)
    beta[0] = 1.0
    return Recurrence(alpha=alpha, beta=beta)


def _jacobi(max_degree: int, a: float, b: float) -> Recurrence:
    """Weight (1-x)^a (1+x)^b on [-1, 1], probability-normalized (a, b > -1)."""
    alpha = np.empty(max_degree + 1)
    beta = np.empty(max_degree + 1)
    beta[0] = 1.0
    apb = a + b
    alpha[0] = (b - a) / (apb + 2.0)
    for k in range(1, max_degree + 1):
        den = (2.0 * k + apb) * (2.0 * k + apb + 2.0)
        alpha[k] = (b * b - a * a) / den
        if k == 1:
            beta[1] = 4.0 * (a + 1.0) * (b + 1.0) / ((apb + 2.0) ** 2 * (apb + 3.0))
        else:
            beta[k] = (
                4.0 * k * (k + a) * (k + b) * (k + apb)
                / ((2.0 * k + apb) ** 2 * (2.0 * k + apb + 1.0) * (2.0 * k + apb - 1.0))
            )
    return Recurrence(alpha=alpha, beta=beta)


def discretize_measure(dist: Distribution1D, n_points: int = 4096):
    """Composite Gauss-Legendre discretization (nodes, weights) of a measure.

    Unbounded support edges are clipped at extreme quantiles (1e-20); any
    finite edge is used exactly. The clip must sit this far out because the
    recurrence needs moments to twice the maximum degree, and for a normal
    tail even the 1e-12 quantile still carries ~1e-5 of the degree-16
    moment. Weights are renormalized to unit mass.
    """
    lo, hi = dist.support()
    if not np.isfinite(lo):
        lo = float(dist.ppf(1e-20))
    if not np.isfinite(hi):
        hi = float(dist.isf(1e-20))
    per_panel = 16
    n_panels = max(1, n_points // per_panel)
    gl_nodes, gl_weights = np.polynomial.legendre.leggauss(per_panel)
    edges = np.linspace(lo, hi, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * gl_nodes[None, :]).ravel()
    weights = (half[:, None] * gl_weights[None, :]).ravel() * dist.pdf(nodes)
    total = weights.sum()
    if not total > 0:
        raise RecurrenceError("measure discretization has no mass")
    return nodes, weights / total


def stieltjes(nodes: np.ndarray, weights: np.ndarray, max_degree: int) -> Recurrence:
    """Recurrence of the discrete measure sum_i w_i delta(x - x_i).

    Runs on normalized polynomials so values stay bounded; raises
    :class:`RecurrenceError` at the degree where orthogonalization breaks
    down (beta <= 0 or non-finite).
    """
    x = np.asarray(nodes, dtype=float)
    w = np.asarray(weights, dtype=float)
    alpha = np.zeros(max_degree + 1)
    beta = np.zeros(max_degree + 1)
    beta[0] = 1.0
    phi_prev = np.zeros_like(x)
    phi = np.ones_like(x)
    sqrt_b = 0.0
    for k in range(max_degree + 1):
        alpha[k] = float(w @ (x * phi * phi))
        if k == max_degree:
            break
        nxt = (x - alpha[k]) * phi - sqrt_b * phi_prev
        b_next = float(w @ (nxt * nxt))
        if not np.isfinite(b_next) or b_next <= 0:
            raise RecurrenceError(f"Stieltjes breakdown at degree {k + 1}: beta = {b_next}")
        beta[k + 1] = b_next
        sqrt_b = np.sqrt(b_next)
        phi_prev, phi = phi, nxt / sqrt_b
    return Recurrence(alpha=alpha, beta=beta)


def stieltjes_recurrence(dist: Distribution1D, max_degree: int, n_points: int = 4096) -> Recurrence:
    """Stieltjes on a standardized discretization, mapped back to natural scale.

    Assumes a bounded density: measures with endpoint singularities (beta
    with a shape parameter below 1) converge poorly under the composite
    Gauss-Legendre discretization and should use their closed form.
    """
    mu, sigma = dist.mean(), dist.std()
    nodes, weights = discretize_measure(dist, n_points)
    rec = stieltjes((nodes - mu) / sigma, weights, max_degree)
    return rec.affine(mu, sigma)


def recurrence_for(dist: Distribution1D, max_degree: int, method: str = "auto") -> Recurrence:
    """Orthonormal-family recurrence for a distribution.

    ``method='auto'`` uses the closed form where one exists and Stieltjes
    otherwise; ``'stieltjes'`` forces the discretized construction (useful
    for cross-validation).
    """
    if max_degree < 0:
        raise ValueError(f"max_degree must be >= 0, got {max_degree}")
    if method not in ("auto", "closed_form", "stieltjes"):
        raise ValueError(f"unknown recurrence method {method!r}")
    if method == "stieltjes":
        return stieltjes_recurrence(dist, max_degree)
    if dist.family == "uniform":
        lo, hi = dist.params
        return _legendre(max_degree).affine((lo + hi) / 2.0, (hi - lo) / 2.0)
    if dist.family == "normal":
        mu, sigma = dist.params
        return _hermite(max_degree).affine(mu, sigma)
    if dist.family == "gamma":
        shape, scale = dist.params
        return _laguerre(max_degree, shape).affine(0.0, scale)
    if dist.family == "beta":
        a_param, b_param = dist.params
        return _jacobi(max_degree, b_param - 1.0, a_param - 1.0).affine(0.5, 0.5)
    if method == "closed_form":
        raise ValueError(f"no closed-form recurrence for family {dist.family!r}")
    return stieltjes_recurrence(dist, max_degree)


def eval_orthonormal(rec: Recurrence, degree: int, x) -> np.ndarray:
    """Value of the orthonormal polynomial of given degree at x."""
    return eval_orthonormal_table(rec, degree, x)[degree]


def eval_orthonormal_table(rec: Recurrence, max_degree: int, x) -> np.ndarray:
    """Table [degree, point] of orthonormal values for degrees 0..max_degree."""
    if max_degree > rec.max_degree:
        raise ValueError(f"recurrence only reaches degree {rec.max_degree}, asked for {max_degree}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    table = np.empty((max_degree + 1, len(x)))
    table[0] = 1.0
    if max_degree >= 1:
        table[1] = (x - rec.alpha[0]) / np.sqrt(rec.beta[1])
    for k in range(1, max_degree):
        table[k + 1] = (
            (x - rec.alpha[k]) * table[k] - np.sqrt(rec.beta[k]) * table[k - 1]
        ) / np.sqrt(rec.beta[k + 1])
    return table
