import numpy as np
import pytest

from phonon_uq.distributions import Distribution1D, JointDistribution, beta_from_mean_std, gamma_from_mean_cov
from phonon_uq.quadrature import (
    GridSizeError,
    QuadratureRule,
    SparseGridSpec,
    gauss_rule,
    read_rule_csv,
    smolyak_grid,
    tensor_grid,
    write_rule_csv,
)

FAMILIES = {
    "uniform": Distribution1D.uniform(-1.0, 1.0),
    "normal": Distribution1D.normal(0.0, 1.0),
    "gamma": Distribution1D.gamma(3.5, 2.0),
    "beta": Distribution1D.beta(152.0, 5940.0),
    "truncated_normal": Distribution1D.truncated_normal(0.0, 1.0, -4.0, 4.0),
}


def gamma_beta_joint():
    comps = tuple(gamma_from_mean_cov(m, c) for m, c in
                  ((278e6, 0.08), (152e9, 0.02), (72.5e6, 0.08),
                   (78.1e9, 0.02), (1000.0, 0.08), (8000.0, 0.02)))
    comps += (beta_from_mean_std(0.025, 0.002),)
    return JointDistribution(comps, tuple(f"x{i}" for i in range(7)))


def exact_moment(dist, k):
    """Closed-form raw moment oracle (scipy only for the truncated normal)."""
    if k == 0:
        return 1.0
    if dist.family == "uniform":
        lo, hi = dist.params
        return (hi ** (k + 1) - lo ** (k + 1)) / ((k + 1) * (hi - lo))
    if dist.family == "normal":
        from math import comb

        mu, sigma = dist.params
        total = 0.0
        for j in range(0, k + 1, 2):  # central moments: (j-1)!! sigma^j
            dfact = 1.0
            for m in range(j - 1, 0, -2):
                dfact *= m
            total += comb(k, j) * dfact * sigma**j * mu ** (k - j)
        return total
    if dist.family == "gamma":
        shape, scale = dist.params
        out = 1.0
        for i in range(k):
            out *= (shape + i) * scale
        return out
    if dist.family == "beta":
        a, b = dist.params
        out = 1.0
        for i in range(k):
            out *= (a + i) / (a + b + i)
        return out
    return float(dist.frozen().moment(k))


class TestGaussRule:
    def test_three_point_uniform(self):
        # Gauss-Legendre nodes with probability-normalized weights
        rule = gauss_rule(Distribution1D.uniform(-1, 1), 3)
        assert np.allclose(np.sort(rule.nodes[:, 0]), [-np.sqrt(0.6), 0.0, np.sqrt(0.6)], atol=1e-14)
        assert np.allclose(np.sort(rule.weights), np.sort([5 / 18, 4 / 9, 5 / 18]), atol=1e-14)

    @pytest.mark.parametrize("name", list(FAMILIES), ids=str)
    @pytest.mark.parametrize("n", [1, 2, 5, 8])
    def test_weights_sum_to_one(self, name, n):
        rule = gauss_rule(FAMILIES[name], n)
        assert abs(rule.weights.sum() - 1.0) < 1e-12

    def test_normal_odd_moment_exact_zero(self):
        rule = gauss_rule(Distribution1D.normal(0, 1), 4)
        moment7 = float(rule.weights @ rule.nodes[:, 0] ** 7)
        assert abs(moment7) < 1e-10

    @pytest.mark.parametrize("name", list(FAMILIES), ids=str)
    @pytest.mark.parametrize("n", [2, 4, 8])
    def test_monomial_exactness_to_2n_minus_1(self, name, n):
        # relative to the absolute moment: odd moments of symmetric measures
        # are exact zeros reached only through floating-point cancellation
        dist = FAMILIES[name]
        rule = gauss_rule(dist, n)
        for k in range(2 * n):
            got = float(rule.weights @ rule.nodes[:, 0] ** k)
            want = exact_moment(dist, k)
            scale = max(abs(want), float(rule.weights @ np.abs(rule.nodes[:, 0]) ** k), 1e-300)
            assert abs(got - want) <= 1e-9 * scale

    def test_single_point_rule_is_mean(self):
        dist = Distribution1D.gamma(4.0, 0.5)
        rule = gauss_rule(dist, 1)
        assert rule.nodes[0, 0] == pytest.approx(dist.mean(), rel=1e-12)
        assert rule.weights[0] == 1.0


class TestTensorGrid:
    def test_seven_dim_counts_match_published_table(self):
        joint = gamma_beta_joint()
        deg1 = tensor_grid([gauss_rule(c, 2) for c in joint.components])
        deg2 = tensor_grid([gauss_rule(c, 3) for c in joint.components])
        assert deg1.n_nodes == 128
        assert deg2.n_nodes == 2187

    def test_single_dim_degenerate(self):
        rule = gauss_rule(Distribution1D.uniform(0, 1), 4)
        grid = tensor_grid([rule])
        assert np.array_equal(grid.nodes, rule.nodes)
        assert np.array_equal(grid.weights, rule.weights)

    def test_weights_are_products(self):
        r1 = gauss_rule(Distribution1D.uniform(0, 1), 2)
        r2 = gauss_rule(Distribution1D.normal(0, 1), 3)
        grid = tensor_grid([r1, r2])
        assert grid.n_nodes == 6
        assert abs(grid.weights.sum() - 1.0) < 1e-12
        # first block of the C-ordered product carries r1's first weight
        assert np.allclose(grid.weights[:3], r1.weights[0] * r2.weights, rtol=1e-14)

    def test_oversize_error(self):
        rules = [gauss_rule(Distribution1D.uniform(0, 1), 10)] * 8
        with pytest.raises(GridSizeError, match="cap"):
            tensor_grid(rules, max_nodes=10_000)


class TestSmolyakGrid:
    def test_level1_seven_dim_has_15_nodes(self):
        grid = smolyak_grid(gamma_beta_joint(), SparseGridSpec(level=1, dimension=7))
        assert grid.n_nodes == 15
        assert abs(grid.weights.sum() - 1.0) < 1e-10

    def test_level0_single_node(self):
        joint = gamma_beta_joint()
        grid = smolyak_grid(joint, SparseGridSpec(level=0, dimension=7))
        assert grid.n_nodes == 1
        assert grid.weights[0] == pytest.approx(1.0, abs=1e-12)
        for j, dist in enumerate(joint.components):
            assert grid.nodes[0, j] == pytest.approx(dist.mean(), rel=1e-10)

    @pytest.mark.parametrize("level", [0, 1, 3])
    def test_one_dim_degenerates_to_gauss(self, level):
        dist = Distribution1D.uniform(-2, 5)
        joint = JointDistribution((dist,), ("x",))
        grid = smolyak_grid(joint, SparseGridSpec(level=level, dimension=1))
        gauss = gauss_rule(dist, level + 1)
        assert np.allclose(np.sort(grid.nodes[:, 0]), np.sort(gauss.nodes[:, 0]), rtol=1e-14)
        assert np.allclose(grid.weights.sum(), 1.0, atol=1e-14)
        order = np.argsort(grid.nodes[:, 0])
        gorder = np.argsort(gauss.nodes[:, 0])
        assert np.allclose(grid.weights[order], gauss.weights[gorder], rtol=1e-12)

    def test_duplicate_nodes_merged_for_symmetric_measures(self):
        # the 1-point and 3-point Gauss rules share the center node
        joint = JointDistribution(
            (Distribution1D.normal(0, 1), Distribution1D.normal(0, 1)), ("a", "b")
        )
        grid = smolyak_grid(joint, SparseGridSpec(level=2, dimension=2))
        # every retained node is separated from all others in some coordinate
        for i in range(grid.n_nodes):
            for j in range(i + 1, grid.n_nodes):
                diff = np.abs(grid.nodes[i] - grid.nodes[j])
                scale = np.maximum(np.abs(grid.nodes).max(axis=0), 1.0)
                assert (diff > 1e-12 * scale).any()
        assert abs(grid.weights.sum() - 1.0) < 1e-10

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError, match="dimension"):
            smolyak_grid(gamma_beta_joint(), SparseGridSpec(level=1, dimension=3))

    def test_smolyak_exact_for_low_degree_polynomials(self):
        # level-1 grids integrate total degree <= 3 exactly
        joint = gamma_beta_joint()
        grid = smolyak_grid(joint, SparseGridSpec(level=1, dimension=7))
        means = np.array([c.mean() for c in joint.components])
        stds = np.array([c.std() for c in joint.components])
        z = (grid.nodes - means) / stds
        got = float(grid.weights @ (z[:, 0] * z[:, 3]))
        assert abs(got) < 1e-10  # E[z0 z3] = 0 by independence
        got2 = float(grid.weights @ (z[:, 1] ** 2))
        assert got2 == pytest.approx(1.0, abs=1e-9)


class TestRuleValidation:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum to 1"):
            QuadratureRule(nodes=np.zeros((2, 1)), weights=np.array([0.6, 0.6]))

    def test_csv_round_trip(self, tmp_path):
        grid = smolyak_grid(gamma_beta_joint(), SparseGridSpec(level=1, dimension=7))
        path = tmp_path / "rule.csv"
        write_rule_csv(grid, path)
        back = read_rule_csv(path)
        assert np.array_equal(back.nodes, grid.nodes)
        assert np.array_equal(back.weights, grid.weights)
        header = path.read_text().splitlines()[0]
        assert header == ",".join([f"node_{j}" for j in range(1, 8)] + ["weight"])
