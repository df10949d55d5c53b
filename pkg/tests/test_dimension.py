import math

import numpy as np
import pytest

from porodim.bounds import LOG2, psi, solve_s
from porodim.dimension import (
    estimate_packing_dim,
    hmin_and_converse,
    node_stats,
    path_trajectory,
    sampled_trajectory,
)
from porodim.dyadic import porous_split, root, subdivide_uniform
from porodim.measure import (
    Bernoulli,
    CascadeDirichlet,
    CascadeFiniteMixture,
    GeneratorSpec,
    build_tree_measure,
)
from porodim.porosity import PorosityParams

from conftest import make_measure

BERNOULLI_DIM = (psi(0.25) + psi(0.75)) / LOG2  # 0.811278...


class TestNodeStats:
    def test_uniform_is_full_dimension(self):
        for d in (1, 2, 3):
            part = subdivide_uniform(root(d))
            st = node_stats(part, (2.0**-d,) * (1 << d))
            assert st.H == pytest.approx(d * LOG2, abs=1e-12)
            assert st.lam == pytest.approx(LOG2, abs=1e-15)
            assert st.ratio == pytest.approx(d, abs=1e-12)

    def test_point_mass_is_zero(self):
        part = subdivide_uniform(root(2))
        st = node_stats(part, (1.0, 0.0, 0.0, 0.0))
        assert st.H == 0.0
        assert st.ratio == 0.0

    def test_porous_split_geometric_weights(self):
        # per-level masses y^i with 3(y + y^2) = 1 achieve the supremum
        y = (-1.0 + math.sqrt(7.0 / 3.0)) / 2.0
        parent = root(2)
        part = porous_split(parent, parent.descendant((0, 0), 2), 2)
        weights = []
        for child in part.children[:-1]:
            weights.append(y ** (child.level - parent.level))
        weights.append(0.0)  # hole
        st = node_stats(part, tuple(weights))
        assert st.ratio == pytest.approx(1.9227, abs=1e-4)
        assert st.ratio == pytest.approx(solve_s(2, 2, 0.0), abs=1e-9)

    def test_ratio_is_d_iff_volume_weights(self):
        rng = np.random.default_rng(77)
        for d in (1, 2):
            part = subdivide_uniform(root(d))
            n = 1 << d
            vol = (2.0**-d,) * n
            assert node_stats(part, vol).ratio == pytest.approx(d, abs=1e-9)
            for _ in range(25):
                w = rng.dirichlet(np.full(n, 1.0))
                if np.max(np.abs(w - 2.0**-d)) < 1e-2:
                    continue
                st = node_stats(part, tuple(float(x) for x in w))
                assert st.ratio < d - 1e-9

    def test_length_mismatch(self):
        part = subdivide_uniform(root(1))
        with pytest.raises(ValueError, match="entries"):
            node_stats(part, (1.0,))


class TestTrajectory:
    def test_uniform_exact(self, uniform2):
        traj = sampled_trajectory(uniform2, 30, 5)
        assert np.allclose(traj.D, 2.0, atol=1e-12)
        assert traj.terminal_D == 2.0
        assert np.all(traj.res_H == 0.0)
        assert np.all(traj.res_L == 0.0)

    def test_point_mass_exact(self, point_mass):
        traj = sampled_trajectory(point_mass, 25, 5)
        assert np.all(traj.D == 0.0)
        assert math.fsum(traj.H) == 0.0

    def test_dyadic_frame_identities(self, bern_quarter):
        traj = sampled_trajectory(bern_quarter, 30, 9)
        assert np.array_equal(traj.Mbar, traj.L)
        assert np.allclose(traj.lam, LOG2)
        assert np.all(traj.I >= 0.0)
        assert np.all(traj.res_L == 0.0)

    def test_bernoulli_residuals_and_terminal(self, bern_quarter):
        mu = make_measure(1, Bernoulli((0.25, 0.75)), depth=10_000)
        traj = sampled_trajectory(mu, 10_000, 3)
        assert abs(traj.res_H[-1]) < 0.01
        assert traj.terminal_D == pytest.approx(BERNOULLI_DIM, abs=0.02)

    def test_martingale_rate_battery(self):
        # |res(n)| < 5 sigma_hat n^{-1/2} at n in {1e3, 1e4} for fixed seeds
        mu = make_measure(1, Bernoulli((0.25, 0.75)), depth=10_000)
        mix = make_measure(
            1, CascadeFiniteMixture(((0.5, 0.5), (0.1, 0.9)), (0.5, 0.5)),
            depth=10_000, seed=5,
        )
        for measure, seeds in ((mu, range(6)), (mix, range(6, 10))):
            for seed in seeds:
                traj = sampled_trajectory(measure, 10_000, seed)
                diffs = traj.I - traj.H
                sigma = float(np.std(diffs))
                for n in (1_000, 10_000):
                    res = float(np.mean(diffs[:n]))
                    assert abs(res) < 5.0 * sigma / math.sqrt(n)

    def test_path_trajectory_on_existing_lineage(self, bern_quarter):
        path = bern_quarter.sample_path(4, steps=20)
        traj = path_trajectory(bern_quarter, path)
        assert traj.steps == 20
        assert not traj.porous.any()

    def test_classifier_projection(self):
        mu = make_measure(1, Bernoulli((0.1, 0.9)), depth=60)
        path = mu.sample_path(8, steps=60)
        traj = path_trajectory(mu, path, classifier=PorosityParams(k=2, eps=0.05))
        assert traj.porous.all()  # every node of this measure is (2, .05)-porous
        jumps = np.diff(traj.levels)
        assert set(jumps.tolist()) <= {1, 2}
        hp, mp = traj.porous_partial_sums
        assert hp == pytest.approx(math.fsum(traj.H))
        assert mp == pytest.approx(math.fsum(traj.Mbar))

    def test_csv_rows_shape(self, bern_quarter):
        traj = sampled_trajectory(bern_quarter, 5, 1)
        rows = list(traj.csv_rows())
        assert len(rows) == 5
        assert len(rows[0]) == 10


class TestEstimator:
    def test_uniform_exact_any_depth(self):
        from porodim.measure import Uniform

        for d in (1, 2):
            mu = build_tree_measure(
                GeneratorSpec(d, Uniform()), "uniform", 64, max_level=64
            )
            est = estimate_packing_dim(mu, 64, 5, seed=2)
            assert est.value == float(d)
            assert est.mean == float(d)

    def test_point_mass_zero(self, point_mass):
        est = estimate_packing_dim(point_mass, 30, 5, seed=2)
        assert est.value == 0.0

    def test_bernoulli_estimate(self):
        mu = make_measure(1, Bernoulli((0.25, 0.75)), depth=10_000)
        est = estimate_packing_dim(mu, 10_000, 20, seed=12)
        assert est.value == pytest.approx(BERNOULLI_DIM, abs=0.02)
        assert est.p95 <= est.value
        assert est.mean <= est.value

    def test_schedule_independence(self):
        # per-path derived seeds: the same battery in any order
        mu = make_measure(1, CascadeDirichlet((0.8, 0.8)), depth=200, seed=3)
        a = estimate_packing_dim(mu, 200, 8, seed=40)
        b = estimate_packing_dim(mu, 200, 8, seed=40)
        assert a == b

    def test_value_in_range(self):
        mu = make_measure(2, CascadeDirichlet((0.5,) * 4), depth=300, seed=6)
        est = estimate_packing_dim(mu, 300, 10, seed=1)
        assert 0.0 <= est.value <= 2.0


class TestHmin:
    def test_boundary_forces_uniform(self):
        for d in (1, 2, 3):
            cb = hmin_and_converse(d, 2.0**-d, 0.5)
            assert cb.hmin == pytest.approx(d * LOG2, abs=1e-12)

    def test_zero_eps_point_mass(self):
        assert hmin_and_converse(2, 0.0, 0.3).hmin == 0.0

    def test_d1_closed_form_example(self):
        cb = hmin_and_converse(1, 0.25, 0.5)
        assert cb.hmin == pytest.approx(0.562335, abs=1e-6)
        assert cb.lower_bound == pytest.approx(0.405639, abs=1e-6)

    def test_grid_minimization_oracle_d1(self):
        # independent check: entropy minimized over the eps-floored simplex
        for eps in (0.05, 0.1, 0.25, 0.4):
            grid = np.arange(eps, 1.0 - eps + 1e-12, 1e-3)
            ent = np.array([psi(p) + psi(1 - p) for p in grid])
            assert hmin_and_converse(1, eps, 0.0).hmin == pytest.approx(
                float(ent.min()), abs=1e-6
            )

    def test_limit_to_full_dimension(self):
        for d in (1, 2):
            prev = 0.0
            for j in range(1, 12):
                eta = 2.0**-j
                eps = 2.0**-d * (1 - 2.0**-j)
                val = hmin_and_converse(d, eps, eta).lower_bound
                assert val >= prev - 1e-12
                prev = val
            assert d - prev < 1e-3

    def test_range_checks(self):
        with pytest.raises(ValueError):
            hmin_and_converse(1, 0.6, 0.5)
        with pytest.raises(ValueError):
            hmin_and_converse(1, 0.1, 1.5)
