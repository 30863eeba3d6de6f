import numpy as np
import pytest

from phonon_uq.distributions import Distribution1D, beta_from_mean_std, gamma_from_mean_cov
from phonon_uq.orthopoly import (
    Recurrence,
    RecurrenceError,
    discretize_measure,
    eval_orthonormal,
    eval_orthonormal_table,
    recurrence_for,
    stieltjes,
    stieltjes_recurrence,
)
from phonon_uq.quadrature import gauss_rule

TABLE_FAMILIES = {
    "uniform": Distribution1D.uniform(-1.0, 1.0),
    "normal": Distribution1D.normal(0.0, 1.0),
    "gamma": gamma_from_mean_cov(278e6, 0.08),
    "beta": beta_from_mean_std(0.025, 0.002),
    "truncated_normal": Distribution1D.truncated_normal(200e6, 16e6, 200e6 - 64e6, 200e6 + 64e6),
}


class TestClosedForms:
    def test_legendre_coefficients(self):
        rec = recurrence_for(Distribution1D.uniform(-1, 1), 8)
        assert np.allclose(rec.alpha, 0.0, atol=1e-15)
        ks = np.arange(1, 9, dtype=float)
        assert np.allclose(rec.beta[1:], ks * ks / (4 * ks * ks - 1), rtol=1e-14)

    def test_hermite_coefficients(self):
        rec = recurrence_for(Distribution1D.normal(0, 1), 8)
        assert np.allclose(rec.alpha, 0.0, atol=1e-15)
        assert np.allclose(rec.beta[1:], np.arange(1, 9, dtype=float), rtol=1e-14)

    def test_degree_zero_normalized(self):
        for dist in TABLE_FAMILIES.values():
            rec = recurrence_for(dist, 4)
            assert rec.beta[0] == 1.0
            x = np.linspace(*_bulk_range(dist), 7)
            assert np.allclose(eval_orthonormal(rec, 0, x), 1.0)

    def test_affine_covariance(self):
        base = recurrence_for(Distribution1D.uniform(-1, 1), 6)
        shifted = recurrence_for(Distribution1D.uniform(3, 7), 6)
        assert np.allclose(shifted.alpha, 5.0 + 2.0 * base.alpha, rtol=1e-14)
        assert np.allclose(shifted.beta[1:], 4.0 * base.beta[1:], rtol=1e-14)


def _bulk_range(dist):
    return float(dist.ppf(0.05)), float(dist.ppf(0.95))


class TestOrthonormality:
    @pytest.mark.parametrize("name", list(TABLE_FAMILIES), ids=str)
    def test_gram_identity_degree_6(self, name):
        dist = TABLE_FAMILIES[name]
        rec = recurrence_for(dist, 7)
        rule = gauss_rule(dist, 64)
        table = eval_orthonormal_table(rec, 6, rule.nodes[:, 0])
        gram = (table * rule.weights) @ table.T
        tol = 1e-6 if name == "truncated_normal" else 1e-8
        assert np.abs(gram - np.eye(7)).max() < tol

    def test_first_degree_unit_norm(self):
        dist = Distribution1D.normal(2.0, 3.0)
        rec = recurrence_for(dist, 2)
        rule = gauss_rule(dist, 40)
        phi1 = eval_orthonormal(rec, 1, rule.nodes[:, 0])
        assert float(rule.weights @ (phi1 * phi1)) == pytest.approx(1.0, abs=1e-12)


class TestStieltjes:
    @pytest.mark.parametrize(
        "name", ["uniform", "normal", "gamma", "beta"], ids=str
    )
    def test_matches_closed_form_to_degree_8(self, name):
        dist = TABLE_FAMILIES[name]
        closed = recurrence_for(dist, 8)
        built = stieltjes_recurrence(dist, 8)
        scale = max(np.abs(closed.alpha).max(), np.sqrt(closed.beta[1:]).max())
        assert np.abs(closed.alpha - built.alpha).max() <= 1e-8 * scale
        assert np.abs(closed.beta - built.beta).max() <= 1e-8 * scale * scale

    def test_discretization_mass(self):
        nodes, weights = discretize_measure(Distribution1D.normal(0, 1), 4096)
        assert len(nodes) == 4096
        assert weights.sum() == pytest.approx(1.0, abs=1e-14)
        assert (weights >= 0).all()

    def test_breakdown_names_degree(self):
        # a two-atom measure supports polynomials only up to degree 1
        nodes = np.array([0.0, 1.0])
        weights = np.array([0.5, 0.5])
        with pytest.raises(RecurrenceError, match="degree 2"):
            stieltjes(nodes, weights, 5)

    def test_truncated_normal_goes_through_stieltjes(self):
        dist = TABLE_FAMILIES["truncated_normal"]
        auto = recurrence_for(dist, 6)
        explicit = stieltjes_recurrence(dist, 6)
        assert np.allclose(auto.alpha, explicit.alpha, rtol=1e-12)
        assert np.allclose(auto.beta, explicit.beta, rtol=1e-12)

    def test_closed_form_unavailable_error(self):
        with pytest.raises(ValueError, match="closed-form"):
            recurrence_for(TABLE_FAMILIES["truncated_normal"], 4, method="closed_form")


class TestEvaluation:
    def test_constant_term_is_one(self):
        rec = recurrence_for(Distribution1D.gamma(5.0, 2.0), 3)
        assert np.allclose(eval_orthonormal(rec, 0, [0.1, 5.0, 40.0]), 1.0)

    def test_degree_beyond_recurrence_rejected(self):
        rec = recurrence_for(Distribution1D.uniform(0, 1), 3)
        with pytest.raises(ValueError, match="degree"):
            eval_orthonormal(rec, 4, 0.5)

    def test_table_rows_match_single_eval(self):
        rec = recurrence_for(Distribution1D.uniform(-1, 1), 5)
        x = np.linspace(-1, 1, 9)
        table = eval_orthonormal_table(rec, 5, x)
        for d in range(6):
            assert np.array_equal(table[d], eval_orthonormal(rec, d, x))

    def test_recurrence_validation(self):
        with pytest.raises(ValueError, match="beta\\[0\\]"):
            Recurrence(alpha=np.zeros(3), beta=np.array([0.5, 1.0, 1.0]))
        with pytest.raises(ValueError, match="positive"):
            Recurrence(alpha=np.zeros(3), beta=np.array([1.0, -1.0, 1.0]))
