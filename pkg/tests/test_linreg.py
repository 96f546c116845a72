import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from hegyboot.errors import (
    AllColumnsRemoved,
    ConfigurationError,
    DimensionMismatch,
    SingularDesign,
    ZeroResidualVariance,
    ZeroVariance,
)
from hegyboot.linreg import (
    DesignMatrix,
    f_statistic,
    ols_fit,
    stepwise_t_prune,
    stepwise_vif_prune,
    t_statistic,
    vif,
)

from oracles import gauss_jordan_inverse, normal_equations


def design(rng, n, p):
    return DesignMatrix(rng.standard_normal((n, p)), [f"x{i}" for i in range(p)])


seeds = st.integers(0, 2**32 - 1)


class TestDesignMatrix:
    def test_from_columns_and_drop(self):
        X = DesignMatrix.from_columns({"a": [1, 2, 3], "b": [0, 1, 0], "c": [0, 0, 0]})
        assert X.names == ("a", "b", "c")
        assert X.zero_columns() == ["c"]
        Y = X.drop(["b"])
        assert Y.names == ("a", "c") and Y.removed == ("b",)
        np.testing.assert_array_equal(Y.column("a"), [1, 2, 3])

    def test_mismatched_columns(self):
        with pytest.raises(DimensionMismatch):
            DesignMatrix.from_columns({"a": [1, 2], "b": [1, 2, 3]})
        with pytest.raises(DimensionMismatch):
            DesignMatrix(np.ones((3, 2)), ["a"])
        with pytest.raises(DimensionMismatch):
            DesignMatrix(np.ones((3, 2)), ["a", "a"])

    def test_unknown_column(self):
        X = DesignMatrix(np.ones((3, 1)), ["a"])
        with pytest.raises(KeyError):
            X.column("z")


class TestOls:
    def test_exact_fit(self):
        fit = ols_fit(DesignMatrix([[1.0], [2.0], [3.0]], ["x"]), [2.0, 4.0, 6.0])
        assert fit.coefficients["x"] == pytest.approx(2.0)
        np.testing.assert_allclose(fit.residuals, 0.0, atol=1e-14)
        assert fit.sigma2 == pytest.approx(0.0, abs=1e-28)

    def test_orthogonal_columns_project_separately(self, rng):
        q, _ = np.linalg.qr(rng.standard_normal((10, 2)))
        y = rng.standard_normal(10)
        fit = ols_fit(DesignMatrix(q, ["a", "b"]), y)
        for j, nm in enumerate("ab"):
            assert fit.coefficients[nm] == pytest.approx(q[:, j] @ y / (q[:, j] @ q[:, j]), rel=1e-12)

    def test_two_by_two_hand_solve(self, rng):
        X = rng.standard_normal((8, 2))
        y = rng.standard_normal(8)
        a, b = X[:, 0] @ X[:, 0], X[:, 0] @ X[:, 1]
        d = X[:, 1] @ X[:, 1]
        u, v = X[:, 0] @ y, X[:, 1] @ y
        det = a * d - b * b
        expected = [(d * u - b * v) / det, (a * v - b * u) / det]
        fit = ols_fit(DesignMatrix(X, ["a", "b"]), y)
        np.testing.assert_allclose(fit.coef_array(), expected, rtol=1e-12)

    @given(seeds, st.integers(1, 5), st.integers(0, 10))
    def test_contract(self, seed, p, extra):
        rng = np.random.default_rng(seed)
        n = p + 2 + extra
        X = design(rng, n, p)
        y = rng.standard_normal(n)
        fit = ols_fit(X, y)
        beta, sigma2, inv, rss = normal_equations(X.data, y)
        np.testing.assert_allclose(fit.coef_array(), beta, rtol=1e-9, atol=1e-11)
        assert fit.rss == pytest.approx(np.sum(fit.residuals**2), rel=1e-10)
        assert fit.sigma2 == pytest.approx(sigma2, rel=1e-9)
        # residuals orthogonal to the design
        xe = np.abs(X.data.T @ fit.residuals).max()
        assert xe <= 1e-8 * np.linalg.norm(X.data) * max(np.linalg.norm(fit.residuals), 1e-300)
        cov = fit.coef_cov
        np.testing.assert_allclose(cov, cov.T, atol=0)
        assert np.linalg.eigvalsh(cov).min() >= -1e-12 * np.abs(cov).max()

    @given(seeds, st.integers(2, 5))
    def test_permutation_invariance(self, seed, p):
        rng = np.random.default_rng(seed)
        X = design(rng, 15, p)
        y = rng.standard_normal(15)
        perm = rng.permutation(p)
        Xp = DesignMatrix(X.data[:, perm], [X.names[i] for i in perm])
        a, b = ols_fit(X, y), ols_fit(Xp, y)
        for nm in X.names:
            assert b.coefficients[nm] == pytest.approx(a.coefficients[nm], rel=1e-10, abs=1e-12)
            assert t_statistic(b, nm) == pytest.approx(t_statistic(a, nm), rel=1e-10, abs=1e-12)

    @given(seeds, st.floats(0.01, 100))
    def test_scale_equivariance(self, seed, c):
        rng = np.random.default_rng(seed)
        X = design(rng, 12, 3)
        y = rng.standard_normal(12)
        data = X.data.copy()
        data[:, 1] *= c
        a, b = ols_fit(X, y), ols_fit(DesignMatrix(data, X.names), y)
        assert b.coefficients["x1"] == pytest.approx(a.coefficients["x1"] / c, rel=1e-8)
        assert t_statistic(b, "x1") == pytest.approx(t_statistic(a, "x1"), rel=1e-8)

    def test_singular_design(self):
        x = np.arange(1.0, 7.0)
        with pytest.raises(SingularDesign):
            ols_fit(DesignMatrix(np.column_stack([x, 2 * x]), ["a", "b"]), np.ones(6))

    def test_zero_column_is_singular(self):
        X = DesignMatrix(np.column_stack([np.arange(5.0), np.zeros(5)]), ["a", "b"])
        with pytest.raises(SingularDesign):
            ols_fit(X, np.ones(5))

    def test_badly_scaled_but_regular_design_fits(self, rng):
        X = rng.standard_normal((30, 3)) * np.array([1e-6, 1.0, 1e6])
        y = rng.standard_normal(30)
        fit = ols_fit(DesignMatrix(X, ["a", "b", "c"]), y)
        np.testing.assert_allclose(fit.coef_array(), np.linalg.lstsq(X, y, rcond=None)[0], rtol=1e-8)

    def test_dimension_checks(self):
        with pytest.raises(DimensionMismatch):
            ols_fit(DesignMatrix(np.ones((3, 1)), ["a"]), np.ones(4))
        with pytest.raises(DimensionMismatch):
            ols_fit(DesignMatrix(np.eye(2), ["a", "b"]), np.ones(2))
        with pytest.raises(AllColumnsRemoved):
            ols_fit(DesignMatrix(np.ones((3, 0)), []), np.ones(3))


class TestStatistics:
    def test_t_zero_variance(self):
        fit = ols_fit(DesignMatrix([[1.0], [2.0], [3.0]], ["x"]), [2.0, 4.0, 6.0])
        with pytest.raises(ZeroVariance):
            t_statistic(fit, "x")

    def test_t_zero_coefficient(self):
        x = np.array([1.0, -1.0, 1.0, -1.0])
        y = np.array([1.0, 1.0, -1.0, -1.0])  # orthogonal to x
        fit = ols_fit(DesignMatrix(x[:, None], ["x"]), y)
        assert t_statistic(fit, "x") == pytest.approx(0.0, abs=1e-15)

    def test_t_against_cofactor_inverse(self, rng):
        X = rng.standard_normal((12, 2))
        y = X @ [0.5, -1.0] + rng.standard_normal(12)
        fit = ols_fit(DesignMatrix(X, ["a", "b"]), y)
        xtx = X.T @ X
        det = xtx[0, 0] * xtx[1, 1] - xtx[0, 1] ** 2
        inv11 = xtx[1, 1] / det
        s2 = np.sum((y - X @ fit.coef_array()) ** 2) / 10
        assert t_statistic(fit, "a") == pytest.approx(fit.coefficients["a"] / np.sqrt(s2 * inv11), rel=1e-10)

    def test_t_unknown_name(self, rng):
        fit = ols_fit(design(rng, 6, 1), rng.standard_normal(6))
        with pytest.raises(KeyError):
            t_statistic(fit, "nope")

    @given(seeds, st.integers(1, 5))
    def test_f_equals_t_squared(self, seed, p):
        rng = np.random.default_rng(seed)
        X = design(rng, 14, p)
        y = rng.standard_normal(14)
        fit = ols_fit(X, y)
        for nm in X.names:
            assert f_statistic(fit, X, y, [nm]) == pytest.approx(t_statistic(fit, nm) ** 2, rel=1e-10)

    def test_f_two_restrictions_by_two_regressions(self, rng):
        X = design(rng, 12, 3)
        y = rng.standard_normal(12)
        fit = ols_fit(X, y)
        _, _, _, rss_u = normal_equations(X.data, y)
        _, _, _, rss_r = normal_equations(X.data[:, [0]], y)
        expected = ((rss_r - rss_u) / 2) / (rss_u / 9)
        assert f_statistic(fit, X, y, ["x1", "x2"]) == pytest.approx(expected, rel=1e-10)

    def test_f_all_columns_restricted_uses_total_sum_of_squares(self, rng):
        X = design(rng, 10, 2)
        y = rng.standard_normal(10)
        fit = ols_fit(X, y)
        expected = ((y @ y - fit.rss) / 2) / fit.sigma2
        assert f_statistic(fit, X, y, ["x0", "x1"]) == pytest.approx(expected, rel=1e-12)

    def test_f_zero_when_restricted_column_explains_nothing(self, rng):
        q, _ = np.linalg.qr(rng.standard_normal((10, 3)))
        # y loads on the first column only; the remainder is orthogonal to both regressors
        y = 3 * q[:, 0] + q[:, 2]
        X = DesignMatrix(q[:, :2], ["a", "b"])
        fit = ols_fit(X, y)
        assert f_statistic(fit, X, y, ["b"]) == pytest.approx(0.0, abs=1e-12)

    def test_f_zero_residual_variance(self):
        X = DesignMatrix(np.column_stack([np.arange(1.0, 6.0), np.ones(5)]), ["a", "b"])
        y = 2 * np.arange(1.0, 6.0) + 1
        fit = ols_fit(X, y)
        fit = type(fit)(**{**fit.__dict__, "rss": 0.0})
        with pytest.raises(ZeroResidualVariance):
            f_statistic(fit, X, y, ["a"])

    def test_f_argument_checks(self, rng):
        X = design(rng, 8, 2)
        y = rng.standard_normal(8)
        fit = ols_fit(X, y)
        with pytest.raises(ConfigurationError):
            f_statistic(fit, X, y, [])
        with pytest.raises(KeyError):
            f_statistic(fit, X, y, ["zz"])


class TestVif:
    def test_orthogonal_columns(self):
        X = DesignMatrix(np.eye(4)[:, :2], ["a", "b"])
        assert vif(X, "a") == pytest.approx(1.0)

    def test_duplicate_column_is_infinite(self, rng):
        x = rng.standard_normal(10)
        assert np.isinf(vif(DesignMatrix(np.column_stack([x, x]), ["a", "b"]), "a"))

    def test_correlation_formula(self, rng):
        # zero-mean unit vectors with inner product r give VIF 1 / (1 - r^2)
        r = 0.9
        q, _ = np.linalg.qr(rng.standard_normal((50, 2)))
        a = q[:, 0]
        b = r * q[:, 0] + np.sqrt(1 - r**2) * q[:, 1]
        X = DesignMatrix(np.column_stack([a, b]), ["a", "b"])
        assert vif(X, "b") == pytest.approx(5.2632, abs=1e-3)

    def test_needs_two_columns(self):
        with pytest.raises(ConfigurationError):
            vif(DesignMatrix(np.ones((3, 1)), ["a"]), "a")


def _greedy_vif(data, names, threshold):
    """Reference greedy rule with R^2 from the explicit inverse of X'X."""
    cols = list(range(data.shape[1]))
    while len(cols) >= 2:
        sub = data[:, cols]
        inv = gauss_jordan_inverse(sub.T @ sub)
        # uncentred VIF_j = (X'X)_jj * (X'X)^-1_jj
        v = np.array([(sub[:, j] @ sub[:, j]) * inv[j][j] for j in range(len(cols))])
        top = v.max()
        if top <= threshold:
            break
        j = max(i for i in range(len(cols)) if v[i] >= top - 1e-9 * top)
        cols.pop(j)
    return tuple(names[c] for c in cols)


class TestVifPrune:
    def test_orthogonal_design_unchanged(self):
        X = DesignMatrix(np.eye(6)[:, :3], ["a", "b", "c"])
        assert stepwise_vif_prune(X, 10).names == X.names

    def test_duplicate_removes_later_copy(self, rng):
        x = rng.standard_normal(20)
        X = DesignMatrix(np.column_stack([rng.standard_normal(20), x, x]), ["a", "b", "c"])
        out = stepwise_vif_prune(X, 10)
        assert out.names == ("a", "b")
        assert out.removed == ("c",)

    def test_protected_column_survives(self, rng):
        x = rng.standard_normal(20)
        X = DesignMatrix(np.column_stack([x, x + 1e-9 * rng.standard_normal(20)]), ["a", "b"])
        out = stepwise_vif_prune(X, 10, protected=["b"])
        assert out.names == ("b",)

    @pytest.mark.parametrize("seed", range(8))
    def test_planted_collinear_triple_matches_greedy_replay(self, seed):
        rng = np.random.default_rng(seed)
        base = rng.standard_normal((40, 3))
        triple = base[:, :2] @ rng.uniform(0.5, 1.5, 2)
        data = np.column_stack([base, triple + 0.05 * rng.standard_normal(40),
                                rng.standard_normal((40, 2))])
        names = [f"c{i}" for i in range(6)]
        out = stepwise_vif_prune(DesignMatrix(data, names), 10)
        assert out.names == _greedy_vif(data, names, 10)
        assert len(out.names) < 6

    def test_bad_threshold_and_empty(self):
        with pytest.raises(ConfigurationError):
            stepwise_vif_prune(DesignMatrix(np.eye(3)[:, :2], ["a", "b"]), 1.0)
        with pytest.raises(AllColumnsRemoved):
            stepwise_vif_prune(DesignMatrix(np.ones((3, 0)), []), 10)


class TestTPrune:
    def test_strong_candidates_kept(self, rng):
        X = design(rng, 50, 3)
        y = X.data @ [3.0, 3.0, 3.0] + 0.1 * rng.standard_normal(50)
        fit = stepwise_t_prune(X, y, ["x1", "x2"], 1.65)
        assert fit.retained == X.names and fit.removal_log == ()

    def test_only_candidates_are_removed(self, rng):
        X = design(rng, 60, 3)
        y = rng.standard_normal(60)
        fit = stepwise_t_prune(X, y, ["x2"], 1e6)
        assert fit.retained == ("x0", "x1")
        assert [nm for nm, _ in fit.removal_log] == ["x2"]

    def test_noise_column_removal_rate(self):
        rng = np.random.default_rng(7)
        removed = 0
        reps = 1000
        for _ in range(reps):
            X = design(rng, 200, 2)
            y = X.data[:, 0] + rng.standard_normal(200)
            fit = stepwise_t_prune(X, y, ["x1"], 1.65)
            removed += "x1" not in fit.retained
        expected = 2 * stats.norm.cdf(1.65) - 1  # 0.901
        assert abs(removed / reps - expected) < 0.03

    def test_zero_variance_candidate_is_kept_and_logged(self):
        X = DesignMatrix(np.column_stack([np.arange(1.0, 5.0), [1.0, 0.0, 1.0, 0.0]]), ["a", "lag1"])
        y = X.data @ [1.0, 2.0]
        fit = stepwise_t_prune(X, y, ["lag1"], 1.65)
        assert "lag1" in fit.retained
        assert ("lag1", None) in fit.removal_log

    def test_deterministic(self, rng):
        X = design(rng, 40, 4)
        y = rng.standard_normal(40)
        a = stepwise_t_prune(X, y, ["x1", "x2", "x3"], 1.65)
        b = stepwise_t_prune(X, y, ["x1", "x2", "x3"], 1.65)
        assert a.removal_log == b.removal_log and a.retained == b.retained

    def test_unknown_candidate(self, rng):
        with pytest.raises(KeyError):
            stepwise_t_prune(design(rng, 10, 2), np.ones(10), ["zz"], 1.65)
