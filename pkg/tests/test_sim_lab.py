import pickle

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from hegyboot.boot_block import BlockBootConfig
from hegyboot.boot_iid import IidBootConfig
from hegyboot.core_series import LagPolynomial, QuarterlySeries
from hegyboot.errors import ConfigurationError, ReplicateFailure, SeriesTooShort
from hegyboot.sim_lab import (
    NOISE_KINDS,
    REFERENCE_SIZES,
    BootstrapProcedure,
    DgpSpec,
    NoiseSpec,
    composite_filter,
    empirical_rejection,
    generate_noise,
    generate_series,
    parse_cell,
    power_curve,
    power_table,
    resolve_threads,
    table_cell_experiment,
    tilde_gamma,
)


def always_reject(y, seed):
    return True


def reject_on_odd_seed(y, seed):
    return bool(seed % 2)


def fail_on_short(y, seed):
    raise SeriesTooShort("deliberate")


def periodic_ar_moments(phi):
    """Stationary season variances of V_t = eps_t + phi_s V_{t-1}, by fixed point."""
    v = np.ones(4)
    for _ in range(500):
        for s in range(4):
            v[s] = 1 + phi[s] ** 2 * v[s - 1]
    g1 = np.mean([phi[s] * v[s - 1] for s in range(4)])
    return v, v.mean(), g1


class TestNoise:
    N = 100_000

    def test_iid_variance(self, rng):
        x = generate_noise(NoiseSpec("iid"), self.N, rng)
        assert abs(x.var() - 1) < 4 * np.sqrt(2 / self.N)

    @pytest.mark.parametrize("kind,theta", [("ma_pos", 0.5), ("ma_neg", -0.5)])
    def test_ma_autocovariances(self, kind, theta, rng):
        x = generate_noise(NoiseSpec(kind), self.N, rng)
        g0, g1 = tilde_gamma(x, 0), tilde_gamma(x, 1)
        assert abs(g0 - (1 + theta**2)) < 3 * 2.0 / np.sqrt(self.N)
        assert abs(g1 - theta) < 3 * 1.5 / np.sqrt(self.N)
        assert abs(tilde_gamma(x, 2)) < 3 * 1.5 / np.sqrt(self.N)

    def test_heteroscedastic_seasons(self, rng):
        x = generate_noise(NoiseSpec("heter"), self.N, rng)
        var = [x[s::4].var() for s in range(4)]
        assert var[0] == pytest.approx(100, rel=0.03)
        np.testing.assert_allclose(var[1:], 1, rtol=0.03)

    def test_ar_lag_one(self, rng):
        x = generate_noise(NoiseSpec("ar"), self.N, rng)
        assert tilde_gamma(x, 1) / tilde_gamma(x, 0) == pytest.approx(0.5, abs=0.02)

    def test_periodic_ar_against_fixed_point(self, rng):
        spec = NoiseSpec("period")
        season_var, g0, g1 = periodic_ar_moments(spec.phi)
        x = generate_noise(spec, 4 * self.N, rng)
        np.testing.assert_allclose([x[s::4].var() for s in range(4)], season_var, rtol=0.03)
        assert tilde_gamma(x, 1) / tilde_gamma(x, 0) == pytest.approx(g1 / g0, abs=0.02)
        assert g1 / g0 == pytest.approx(0.5, abs=0.05)

    @pytest.mark.parametrize("kind", NOISE_KINDS)
    def test_length_and_finite(self, kind, rng):
        x = generate_noise(NoiseSpec(kind), 37, rng)
        assert x.shape == (37,) and np.all(np.isfinite(x))

    @pytest.mark.parametrize("kw", [{"kind": "garch"}, {"phi": (0.2, 1.0, 0.1, 0.1)},
                                    {"sigma": (1, 2)}, {"burn_in": 6}, {"ar": -1.2}])
    def test_invalid(self, kw):
        with pytest.raises(ConfigurationError):
            NoiseSpec(**kw)


class TestFilters:
    def test_unit_root_at_one_differences_back(self, rng):
        spec = DgpSpec("plus1", False, 0.0, "iid", T=30)
        r1, r2 = np.random.default_rng(3), np.random.default_rng(3)
        y = generate_series(spec, r1).values
        v = generate_noise(spec.noise, spec.n, r2)
        np.testing.assert_allclose(np.diff(y), v[1:], atol=1e-10)

    @pytest.mark.parametrize("root", ["plus1", "minus1", "complex"])
    def test_nuisance_cell_is_seasonal_random_walk(self, root):
        spec = DgpSpec(root, True, 0.0, "ma_pos", T=25)
        y = generate_series(spec, np.random.default_rng(8)).values
        v = generate_noise(spec.noise, spec.n, np.random.default_rng(8))
        np.testing.assert_allclose(y[4:] - y[:-4], v[4:], atol=1e-9)

    @pytest.mark.parametrize("root,nuisance,coefs", [
        ("plus1", False, [1, -0.99]),
        ("minus1", False, [1, 0.99]),
        ("complex", False, [1, 0, 0.99]),
        ("plus1", True, [1, 0.01, 0.01, 0.01, -0.99]),
        ("minus1", True, [1, -0.01, 0.01, -0.01, -0.99]),
        ("complex", True, [1, 0, -0.01, 0, -0.99]),
    ])
    def test_composite_coefficients(self, root, nuisance, coefs):
        np.testing.assert_allclose(composite_filter(root, nuisance, 0.01).coefficients, coefs,
                                   atol=1e-15)

    def test_zero_noise_gives_zero_path(self):
        spec = DgpSpec("complex", True, 0.0, NoiseSpec("heter", sigma=(0, 0, 0, 0)), T=10)
        np.testing.assert_array_equal(generate_series(spec).values, 0.0)

    def test_stationary_path_is_burned_in(self):
        spec = DgpSpec("plus1", False, 0.5, "iid", T=10)
        y = generate_series(spec, np.random.default_rng(1)).values
        v = np.random.default_rng(1).standard_normal(spec.n + spec.burn_in)
        full = np.zeros_like(v)
        for t in range(v.size):
            full[t] = v[t] + 0.5 * (full[t - 1] if t else 0.0)
        np.testing.assert_allclose(y, full[spec.burn_in :], atol=1e-12)

    def test_shapes_and_properties(self):
        spec = DgpSpec("minus1", T=7)
        y = generate_series(spec)
        assert isinstance(y, QuarterlySeries) and y.length == 28 and y.start_season == 1
        assert str(spec.hypothesis) == "{2}"
        assert isinstance(spec.filter(), LagPolynomial)

    @pytest.mark.parametrize("kw", [{"target_root": "zero"}, {"rho": 1.0}, {"rho": -0.1},
                                    {"T": 0}, {"noise": "cauchy"}])
    def test_invalid(self, kw):
        with pytest.raises(ConfigurationError):
            DgpSpec(**kw)

    @given(st.integers(0, 2**63 - 1))
    def test_seed_determinism(self, seed):
        spec = DgpSpec("complex", True, 0.0, "period", T=6, seed=seed)
        np.testing.assert_array_equal(generate_series(spec).values, generate_series(spec).values)


class TestTildeGamma:
    def test_symmetric_in_lag(self, rng):
        x = rng.standard_normal(400)
        assert tilde_gamma(x, -2) == tilde_gamma(x, 2)

    def test_iid_lag_zero(self, rng):
        assert tilde_gamma(rng.standard_normal(100_000), 0) == pytest.approx(1, abs=0.02)

    def test_by_hand(self):
        x = np.arange(1.0, 9.0)
        # lag 1 products: 2,6,12,20,30,42,56 at seasons 2,3,4,1,2,3,4
        expected = np.mean([20, (2 + 30) / 2, (6 + 42) / 2, (12 + 56) / 2])
        assert tilde_gamma(x, 1) == pytest.approx(expected)

    def test_too_short(self):
        with pytest.raises(SeriesTooShort):
            tilde_gamma(np.ones(5), 2)


class TestHarness:
    dgp = DgpSpec("plus1", False, 0.0, "iid", T=8, seed=11)

    def test_always_reject(self):
        res = empirical_rejection(self.dgp, always_reject, 12, threads=1)
        assert res.rejection_rate == 1.0 and res.se == 0.0
        assert res.decisions.shape == (12,) and np.all(np.isnan(res.p_values))

    def test_thread_count_does_not_matter(self):
        a = empirical_rejection(self.dgp, reject_on_odd_seed, 25, threads=1)
        b = empirical_rejection(self.dgp, reject_on_odd_seed, 25, threads=2)
        np.testing.assert_array_equal(a.decisions, b.decisions)
        assert 0 < a.rejection_rate < 1

    def test_real_procedure_thread_invariant(self):
        dgp = DgpSpec("plus1", False, 0.0, "iid", T=12)
        proc = BootstrapProcedure("block-unaug", "1", BlockBootConfig(B=9))
        a = empirical_rejection(dgp, proc, 4, seed=3, threads=1)
        b = empirical_rejection(dgp, proc, 4, seed=3, threads=2)
        np.testing.assert_array_equal(a.p_values, b.p_values)

    def test_seed_changes_draws(self):
        a = empirical_rejection(self.dgp, reject_on_odd_seed, 40, seed=1, threads=1)
        b = empirical_rejection(self.dgp, reject_on_odd_seed, 40, seed=2, threads=1)
        assert not np.array_equal(a.decisions, b.decisions)

    def test_failure_names_replicate_and_seed(self):
        with pytest.raises(ReplicateFailure, match=r"replicate 0 failed \(experiment seed 11"):
            empirical_rejection(self.dgp, fail_on_short, 3, threads=1)

    def test_level_override(self):
        proc = BootstrapProcedure("iid-aug", "1", IidBootConfig(B=9))
        assert proc.with_level(0.1).level == 0.1 and proc.level == 0.05
        with pytest.raises(ConfigurationError):
            empirical_rejection(self.dgp, always_reject, 2, level=0.1)

    def test_procedure_pickles_and_validates(self):
        proc = BootstrapProcedure("block-unaug", "34")
        assert pickle.loads(pickle.dumps(proc)) == proc
        with pytest.raises(ConfigurationError):
            BootstrapProcedure("block-unaug", "1", IidBootConfig())
        with pytest.raises(ConfigurationError):
            BootstrapProcedure("wild", "1")

    def test_bad_N(self):
        with pytest.raises(ConfigurationError):
            empirical_rejection(self.dgp, always_reject, 0)

    def test_threads_from_environment(self, monkeypatch):
        monkeypatch.setenv("HEGY_THREADS", "3")
        assert resolve_threads() == 3 and resolve_threads(1) == 1
        monkeypatch.setenv("HEGY_THREADS", "many")
        with pytest.raises(ConfigurationError):
            resolve_threads()
        monkeypatch.delenv("HEGY_THREADS")
        assert resolve_threads() >= 1

    def test_power_curve_reuses_seed(self):
        res = power_curve(self.dgp, reject_on_odd_seed, 10, rho_grid=[0.0, 0.5], seed=4, threads=1)
        np.testing.assert_array_equal(res[0].decisions, res[1].decisions)
        rows = power_table(res)
        assert [r["rho"] for r in rows] == [0.0, 0.5]
        assert set(rows[0]) == {"rho", "rate", "se"}
        with pytest.raises(ConfigurationError):
            power_curve(self.dgp, always_reject, 2, rho_grid=[])

    @pytest.mark.slow
    def test_power_increases_with_distance_from_root(self):
        proc = BootstrapProcedure("iid-aug", "1", IidBootConfig(B=49, k_max=0))
        grid = [0.0, 0.05, 0.1, 0.2]
        rates = [r.rejection_rate for r in
                 power_curve(DgpSpec("plus1", T=30), proc, 60, grid, seed=9, threads=1)]
        rho_s, _ = stats.spearmanr(grid, rates)
        assert rho_s > 0.8 and rates[-1] > rates[0]


class TestCells:
    def test_parse(self):
        cell = parse_cell(3, "False,iid,t4")
        assert (cell.table, cell.nuisance, cell.noise, cell.column) == (3, False, "iid", "t4")
        assert cell.block_size == 4 and cell.statistic_choice == "t" and cell.target_root == "plus1"
        assert cell.reference == pytest.approx(0.067)
        assert str(cell) == "False,iid,t4"
        assert parse_cell(4, "True, ma_pos, pi_12").column == "pi12"
        assert parse_cell(5, "true,heter,F8").block_size == 8

    @pytest.mark.parametrize("table,text", [(6, "False,iid,t4"), (3, "False,iid"),
                                            (3, "maybe,iid,t4"), (3, "False,iid,F4"),
                                            (5, "False,iid,t4"), (4, "False,white,t4")])
    def test_parse_errors(self, table, text):
        with pytest.raises(ConfigurationError):
            parse_cell(table, text)

    def test_reference_tables_complete(self):
        for table, cols in ((3, 6), (4, 6), (5, 3)):
            rows = REFERENCE_SIZES[table]
            assert len(rows) == 2 * len(NOISE_KINDS)
            for row in rows.values():
                assert len(row) == cols
                assert all(0 <= v <= 1 for v in row.values())

    def test_cell_experiment_runs(self):
        res = table_cell_experiment(parse_cell(5, "False,iid,F4"), N=3, B=9, T=12, seed=1, threads=1)
        assert res.N == 3 and res.dgp.target_root == "complex"
        assert np.all((res.p_values > 0) & (res.p_values <= 1))
