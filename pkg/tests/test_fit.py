import numpy as np
import pytest
import scipy.optimize

from extreme_blocks import (
    ConstantColumnError,
    KOutOfRangeError,
    SampleSet,
    ScaleError,
    UnderdeterminedError,
    build_block_graph,
    fit_delta,
    fit_delta_from_covariances,
    gaussian_limit,
    log_spacings,
    nnls_active_set,
    rank_transform,
    sample_pareto_conditioned,
)
from conftest import FIG2_DELTA
from gen import random_block_graph, random_delta


class TestRankTransform:
    def test_three_point_column(self):
        s = SampleSet(np.array([[3.0], [1.0], [2.0]]), ("a",))
        out = rank_transform(s)
        assert np.allclose(out.data[:, 0], [4.0, 4.0 / 3.0, 2.0])
        assert out.scale == "pareto"

    def test_extremes_map_to_known_values(self):
        rng = np.random.default_rng(0)
        col = rng.standard_normal(25)
        out = rank_transform(SampleSet(col[:, None], ("a",)))
        n = 25
        assert out.data[np.argmax(col), 0] == pytest.approx(n + 1)
        assert out.data[np.argmin(col), 0] == pytest.approx((n + 1) / n)

    def test_monotone_invariance(self):
        rng = np.random.default_rng(1)
        col = rng.standard_normal(40)
        a = rank_transform(SampleSet(col[:, None], ("a",))).data
        b = rank_transform(SampleSet(np.exp(col)[:, None], ("a",))).data
        assert np.array_equal(a, b)

    def test_average_ranks_for_ties(self):
        out = rank_transform(SampleSet(np.array([[1.0], [1.0], [2.0]]), ("a",)))
        # tied pair gets rank 1.5 -> (n+1)/(n+1-1.5)
        assert np.allclose(out.data[:2, 0], 4.0 / 2.5)

    def test_constant_column_rejected(self):
        with pytest.raises(ConstantColumnError):
            rank_transform(SampleSet(np.ones((5, 1)), ("a",)))

    def test_wrong_scale_rejected(self):
        s = SampleSet(np.ones((5, 1)) + np.arange(5)[:, None], ("a",), "pareto")
        with pytest.raises(ScaleError):
            rank_transform(s)


class TestLogSpacings:
    def test_exact_multiplicative_structure(self):
        rng = np.random.default_rng(2)
        n = 30
        x_u = 1.0 / (1.0 - rng.random(n))
        a = rng.uniform(0.5, 2.0, size=(n, 2))
        data = np.column_stack([a[:, 0] * x_u, a[:, 1] * x_u, x_u])
        s = SampleSet(data, ("a", "b", "u"), "pareto")
        k = 10
        rows = log_spacings(s, "u", k)
        top = np.argsort(-x_u, kind="stable")[:k]
        assert np.allclose(rows, np.log(a[top]), atol=1e-14)

    def test_k_boundaries(self):
        rng = np.random.default_rng(3)
        data = 1.0 / (1.0 - rng.random((10, 2)))
        s = SampleSet(data, ("a", "b"), "pareto")
        assert log_spacings(s, "a", 9).shape == (9, 1)
        with pytest.raises(KOutOfRangeError):
            log_spacings(s, "a", 0)
        with pytest.raises(KOutOfRangeError):
            log_spacings(s, "a", 10)

    def test_requires_pareto_scale(self):
        rng = np.random.default_rng(4)
        s = SampleSet(rng.standard_normal((10, 2)), ("a", "b"))
        with pytest.raises(ScaleError):
            log_spacings(s, "a", 5)

    def test_deterministic_tie_break(self):
        data = np.array([[2.0, 1.0], [2.0, 3.0], [2.0, 5.0]])
        s = SampleSet(data, ("a", "b"), "pareto")
        rows = log_spacings(s, "a", 2)
        # all anchor values tie; rows 0 and 1 win by index
        assert np.allclose(rows[:, 0], np.log([1.0, 3.0]) - np.log(2.0))

    def test_simulated_spacings_center_on_minus_2p(self, fig2_family):
        n = 100000
        g = fig2_family.graph
        y = sample_pareto_conditioned(fig2_family, "2", n, 6)
        s = SampleSet(y, g.nodes, "pareto")
        rows = log_spacings(s, "2", n - 1)
        lim = gaussian_limit(fig2_family, "2")
        se = np.sqrt(np.diag(lim.cov) / (n - 1))
        assert np.all(np.abs(rows.mean(axis=0) - lim.mean) <= 4 * se)


class TestNnls:
    @pytest.mark.parametrize("seed", range(8))
    def test_matches_scipy_oracle(self, seed):
        rng = np.random.default_rng(seed)
        m, n = 30, 6
        a = rng.standard_normal((m, n))
        b = rng.standard_normal(m)
        ours = nnls_active_set(a, b)
        ref, _ = scipy.optimize.nnls(a, b)
        assert np.allclose(ours, ref, atol=1e-8)

    def test_kkt_conditions(self):
        rng = np.random.default_rng(42)
        a = rng.standard_normal((40, 7))
        b = rng.standard_normal(40)
        x = nnls_active_set(a, b)
        grad = a.T @ (b - a @ x)
        scale = np.abs(a.T @ b).max()
        assert np.all(x >= 0)
        assert np.all(grad[x == 0] <= 1e-9 * scale)
        assert np.all(np.abs(grad[x > 0]) <= 1e-9 * scale)


class TestFitDelta:
    def test_exact_moments_recover_exactly(self, fig2_graph, fig2_family):
        covs = {u: gaussian_limit(fig2_family, u).cov for u in fig2_graph.nodes}
        res = fit_delta_from_covariances(fig2_graph, covs)
        assert res.objective <= 1e-18
        for e, v in FIG2_DELTA.items():
            assert res.delta2_hat[e] == pytest.approx(v, abs=1e-9)

    def test_single_edge_quarter_variance(self):
        g = build_block_graph(["a", "b"], [("a", "b")])
        covs = {"a": np.array([[2.9]])}
        res = fit_delta_from_covariances(g, covs)
        assert res.delta2_hat[("a", "b")] == pytest.approx(2.9 / 4.0)

    def test_single_anchor_suffices(self, fig2_graph, fig2_family):
        covs = {"1": gaussian_limit(fig2_family, "1").cov}
        res = fit_delta_from_covariances(fig2_graph, covs)
        for e, v in FIG2_DELTA.items():
            assert res.delta2_hat[e] == pytest.approx(v, abs=1e-9)

    def test_mean_condition_flag(self, fig2_graph, fig2_family):
        covs, means = {}, {}
        for u in fig2_graph.nodes:
            lim = gaussian_limit(fig2_family, u)
            covs[u], means[u] = lim.cov, lim.mean
        res = fit_delta_from_covariances(fig2_graph, covs, means, mean_weight=2.0)
        for e, v in FIG2_DELTA.items():
            assert res.delta2_hat[e] == pytest.approx(v, abs=1e-9)

    def test_equivariance_under_scaling(self, fig2_graph, fig2_family):
        covs = {u: gaussian_limit(fig2_family, u).cov for u in fig2_graph.nodes}
        base = fit_delta_from_covariances(fig2_graph, covs)
        scaled = fit_delta_from_covariances(
            fig2_graph, {u: 3.0 * c for u, c in covs.items()})
        for e in FIG2_DELTA:
            assert scaled.delta2_hat[e] == pytest.approx(3.0 * base.delta2_hat[e],
                                                         rel=1e-9)

    def test_objective_convexity_along_segments(self, fig2_graph, fig2_family):
        # three-point midpoint check of the quadratic objective
        edges = fig2_graph.edges_sorted()
        covs = {u: gaussian_limit(fig2_family, u).cov for u in fig2_graph.nodes}
        from extreme_blocks.model import sigma_coefficient_matrix
        m = len(fig2_graph.nodes) - 1
        blocks = [sigma_coefficient_matrix(fig2_graph, u).reshape(m * m, len(edges))
                  for u in fig2_graph.nodes]
        design = np.vstack(blocks)
        target = np.concatenate([covs[u].reshape(-1) for u in fig2_graph.nodes])

        def objective(vec):
            r = design @ vec - target
            return r @ r

        rng = np.random.default_rng(9)
        for _ in range(20):
            a = rng.uniform(0.0, 3.0, len(edges))
            b = rng.uniform(0.0, 3.0, len(edges))
            mid = objective((a + b) / 2)
            assert mid <= (objective(a) + objective(b)) / 2 + 1e-9

    @pytest.mark.parametrize("seed", range(4))
    def test_design_full_rank_on_random_graphs(self, seed):
        rng = np.random.default_rng(60 + seed)
        g = random_block_graph(rng, max_nodes=10)
        fam = random_delta(g, rng)
        covs = {u: gaussian_limit(fam, u).cov for u in g.nodes}
        res = fit_delta_from_covariances(g, covs)  # raises if rank-deficient
        for e, v in fam.edge_params.items():
            assert res.delta2_hat[e] == pytest.approx(v, abs=1e-7)

    def test_underdetermined_reports_null_edges(self, fig2_graph, fig2_family, monkeypatch):
        import extreme_blocks.fit as fit_mod
        real = fit_mod.sigma_coefficient_matrix
        dead_edge = ("5", "6")
        edges = fig2_graph.edges_sorted()
        dead_idx = edges.index(dead_edge)

        def crippled(g, u):
            coeffs = real(g, u).copy()
            coeffs[:, :, dead_idx] = 0.0
            return coeffs

        monkeypatch.setattr(fit_mod, "sigma_coefficient_matrix", crippled)
        covs = {u: gaussian_limit(fig2_family, u).cov for u in fig2_graph.nodes}
        with pytest.raises(UnderdeterminedError) as err:
            fit_delta_from_covariances(fig2_graph, covs)
        assert dead_edge in err.value.null_edges

    def test_spacings_pipeline(self, fig2_graph, fig2_family):
        spacings = {}
        for j, u in enumerate(fig2_graph.nodes):
            y = sample_pareto_conditioned(fig2_family, u, 20000, 100 + j)
            iu = fig2_graph.nodes.index(u)
            cols = [i for i in range(len(fig2_graph.nodes)) if i != iu]
            spacings[u] = np.log(y[:, cols]) - np.log(y[:, [iu]])
        res = fit_delta(fig2_graph, spacings)
        assert res.diagnostics["1"]["rows"] == 20000
        for e, v in FIG2_DELTA.items():
            assert res.delta2_hat[e] == pytest.approx(v, rel=0.15)
