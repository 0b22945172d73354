#
# Copyright 2024 The robgp Authors.
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU Affero General Public License as
# published by the Free Software Foundation, either version 3 of the
# License, or (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Affero General Public License for more details.
#
# You should have received a copy of the GNU Affero General Public License
# along with this program.  If not, see <https://www.gnu.org/licenses/>.
#
from unittest import TestCase

import numpy as np
from robgp.errors import InvalidInputError
from robgp.errors import NumericalError
from robgp.generators import make_grid
from robgp.generators import sample_gp
from robgp.gp_core import DistanceTable
from robgp.gp_core import find_neighbors
from robgp.gp_core import neighborhood_distances
from robgp.gp_core import posterior_mean
from robgp.gp_core import posterior_variance
from robgp.gp_core import predict_batch
from robgp.gp_core import quadratic_forms
from robgp.gp_core import sigma2_downsample_median
from robgp.gp_core import sigma2_mean_estimate
from robgp.gp_core import SpatialDataset
from robgp.gp_core import VARIANCE_FLOOR
from robgp.kernel import kernel_matrix
from robgp.kernel import matern_from_distances
from robgp.kernel import MaternParams
from robgp.neighbors import build_index
from robgp.neighbors import make_batch
from robgp.neighbors import NeighborSet
from robgp.neighbors import query_knn


def dense_kriging(query, coords, targets, params):
    """Full-GP kriging mean and variance by dense solves."""
    cov = kernel_matrix(coords, None, params, add_nugget=True)
    cross = kernel_matrix(np.atleast_2d(query), coords, params)[0]
    mean = cross @ np.linalg.solve(cov, targets)
    variance = params.sigma2 - cross @ np.linalg.solve(cov, cross)
    return mean, variance


class SpatialDatasetTestCase(TestCase):
    """Tests for the dataset record."""

    def test_shapes(self):
        """Test sizes and column bookkeeping."""
        data = SpatialDataset(np.zeros((4, 2)), np.arange(4), ("a", "b"), "t")
        self.assertEqual((data.n, data.d), (4, 2))
        self.assertEqual(data.subset([2, 0]).targets.tolist(), [2.0, 0.0])

    def test_mismatched_lengths(self):
        """Test that coordinate rows and targets must agree."""
        with self.assertRaises(InvalidInputError):
            SpatialDataset(np.zeros((3, 2)), np.zeros(2))

    def test_non_finite(self):
        """Test that non-finite entries are rejected."""
        with self.assertRaises(InvalidInputError):
            SpatialDataset(np.zeros((2, 2)), [0.0, np.inf])

    def test_with_targets_leaves_original(self):
        """Test that replacing targets copies the dataset."""
        data = SpatialDataset(np.zeros((2, 1)), [1.0, 2.0])
        changed = data.with_targets([5.0, 6.0])
        self.assertEqual(data.targets.tolist(), [1.0, 2.0])
        self.assertEqual(changed.targets.tolist(), [5.0, 6.0])


class PosteriorTestCase(TestCase):
    """Tests for the kriging mean and variance."""

    def setUp(self):
        """Build a random 12-point dataset."""
        rng = np.random.default_rng(12)
        self.coords = rng.uniform(size=(12, 2))
        self.targets = rng.normal(size=12)
        self.data = SpatialDataset(self.coords, self.targets)
        self.index = build_index(self.coords)

    def test_coincident_single_neighbor_mean(self):
        """Test that a coincident neighbor is interpolated exactly."""
        data = SpatialDataset([[0.3, 0.3]], [1.7])
        ns = NeighborSet(-1, [0], [0.0])
        params = MaternParams(nu=0.8, ell=0.4)
        self.assertAlmostEqual(posterior_mean([0.3, 0.3], ns, data, params), 1.7, places=12)
        self.assertEqual(posterior_variance([0.3, 0.3], ns, data, params), VARIANCE_FLOOR)

    def test_constant_field(self):
        """Test that a constant field is reproduced at a data point."""
        data = SpatialDataset(self.coords, np.full(12, 4.2))
        ns = query_knn(self.index, self.coords[3], 5)
        self.assertAlmostEqual(posterior_mean(self.coords[3], ns, data, MaternParams(ell=0.3)), 4.2, places=8)

    def test_far_query_reverts_to_prior(self):
        """Test that a far query has the prior variance."""
        params = MaternParams(sigma2=2.0, nu=0.5, ell=0.01)
        query = np.array([1.5, 1.5])
        ns = query_knn(self.index, query, 4)
        self.assertAlmostEqual(posterior_variance(query, ns, self.data, params), 2.0, delta=2e-6)
        self.assertAlmostEqual(posterior_mean(query, ns, self.data, params), 0.0, places=6)

    def test_matches_dense_kriging(self):
        """Test that 11 neighbors of 12 points reproduce the dense GP."""
        params = MaternParams(sigma2=1.3, nu=0.5, ell=0.3, tau2=1e-6)
        query = np.array([0.41, 0.57])
        ns = query_knn(self.index, query, 11)
        subset = ns.indices
        mean, variance = dense_kriging(query, self.coords[subset], self.targets[subset], params)
        self.assertAlmostEqual(posterior_mean(query, ns, self.data, params), mean, places=9)
        self.assertAlmostEqual(posterior_variance(query, ns, self.data, params), variance, places=9)

    def test_matches_dense_kriging_general_order(self):
        """Test a non-half-integer smoothness against the dense GP."""
        params = MaternParams(nu=0.8, ell=0.25, tau2=1e-6)
        query = np.array([0.2, 0.8])
        ns = query_knn(self.index, query, 11)
        mean, variance = dense_kriging(query, self.coords[ns.indices], self.targets[ns.indices], params)
        posterior = predict_batch([query], self.data, params, 11)[0]
        self.assertAlmostEqual(posterior.mean, mean, places=9)
        self.assertAlmostEqual(posterior.variance, variance, places=9)

    def test_variance_floor(self):
        """Test that variances never drop below the floor."""
        params = MaternParams(nu=0.5, ell=0.5)
        posteriors = predict_batch(self.coords[:4], self.data, params, 3)
        for posterior in posteriors:
            self.assertGreaterEqual(posterior.variance, VARIANCE_FLOOR)

    def test_singular_neighborhood(self):
        """Test that a non-factorizable neighborhood raises a numerical error."""
        data = SpatialDataset([[0.0, 0.0], [0.0, 0.0]], [1.0, 2.0])
        ns = NeighborSet(-1, [0, 1], [0.5, 0.5])
        with self.assertRaises(NumericalError):
            posterior_mean([0.5, 0.0], ns, data, MaternParams())


class PredictBatchTestCase(TestCase):
    """Tests for batched prediction."""

    def test_single_query_matches_scalar_api(self):
        """Test that a one-query batch agrees with posterior_mean/posterior_variance."""
        rng = np.random.default_rng(9)
        data = SpatialDataset(rng.uniform(size=(20, 2)), rng.normal(size=20))
        params = MaternParams(nu=1.5, ell=0.4, tau2=1e-6)
        query = np.array([0.5, 0.5])
        ns = query_knn(build_index(data.coords), query, 6)
        posterior = predict_batch([query], data, params, 6)[0]
        self.assertEqual(posterior.mean, posterior_mean(query, ns, data, params))
        self.assertEqual(posterior.variance, posterior_variance(query, ns, data, params))

    def test_leave_one_out_uses_the_others(self):
        """Test that leave-one-out on three points uses the other two."""
        data = SpatialDataset([[0.0], [1.0], [3.0]], [1.0, 2.0, 3.0])
        points, neighbor_sets = find_neighbors([0, 1, 2], data, 2, loo=True)
        for row, ns in enumerate(neighbor_sets):
            self.assertEqual(sorted(ns.indices), sorted({0, 1, 2} - {row}))
        np.testing.assert_array_equal(points, data.coords)

    def test_order_invariance(self):
        """Test that shuffling queries shuffles the output identically."""
        rng = np.random.default_rng(31)
        data = SpatialDataset(rng.uniform(size=(80, 2)), rng.normal(size=80))
        params = MaternParams(nu=0.5, ell=0.3, tau2=1e-7)
        queries = rng.uniform(size=(50, 2))
        perm = rng.permutation(50)
        natural = predict_batch(queries, data, params, 8)
        shuffled = predict_batch(queries[perm], data, params, 8)
        for i, j in enumerate(perm):
            self.assertAlmostEqual(shuffled[i].mean, natural[j].mean, places=12)
            self.assertAlmostEqual(shuffled[i].variance, natural[j].variance, places=12)


class Sigma2EstimateTestCase(TestCase):
    """Tests for the closed-form variance scale estimators."""

    def test_single_neighbor_closed_form(self):
        """Test b=1, k=1 against y^2 / (1 + tau2)."""
        data = SpatialDataset([[0.0, 0.0], [0.1, 0.0]], [0.7, -1.5])
        batch = make_batch(build_index(data.coords), [0], 1)
        params = MaternParams(nu=0.5, ell=1.0, tau2=0.25)
        self.assertAlmostEqual(sigma2_mean_estimate(batch, data, params), 1.5 ** 2 / 1.25, places=12)

    def test_zero_targets(self):
        """Test that all-zero targets give zero with a warning."""
        rng = np.random.default_rng(2)
        data = SpatialDataset(rng.uniform(size=(15, 2)), np.zeros(15))
        batch = make_batch(build_index(data.coords), np.arange(10), 4)
        params = MaternParams(ell=0.5, tau2=1e-7)
        with self.assertLogs("robgp", level="WARNING"):
            self.assertEqual(sigma2_mean_estimate(batch, data, params), 0.0)
        with self.assertLogs("robgp", level="WARNING"):
            self.assertEqual(sigma2_downsample_median(batch, data, params, 2, rng), 0.0)

    def test_median_reduces_to_mean(self):
        """Test that b=1 and k_star=k reproduce the mean estimator."""
        rng = np.random.default_rng(21)
        data = SpatialDataset(rng.uniform(size=(25, 2)), rng.normal(size=25))
        batch = make_batch(build_index(data.coords), [7], 6)
        params = MaternParams(nu=0.5, ell=0.4, tau2=1e-6)
        mean = sigma2_mean_estimate(batch, data, params)
        median = sigma2_downsample_median(batch, data, params, 6, rng)
        self.assertAlmostEqual(mean, median, places=12)

    def test_quadratic_forms_ignore_sigma2(self):
        """Test that the forms are computed at sigma2 = 1."""
        rng = np.random.default_rng(4)
        data = SpatialDataset(rng.uniform(size=(10, 2)), rng.normal(size=10))
        rows = np.array([[0, 1, 2], [3, 4, 5]])
        unit = quadratic_forms(rows, data, MaternParams(ell=0.5, tau2=1e-6))
        scaled = quadratic_forms(rows, data, MaternParams(sigma2=9.0, ell=0.5, tau2=1e-6))
        np.testing.assert_array_equal(unit, scaled)

    def test_recovers_simulated_scale(self):
        """Test the mean estimator on a field simulated with sigma2 = 2."""
        truth = MaternParams(sigma2=2.0, nu=0.5, ell=0.2)
        coords = make_grid(15)
        targets = sample_gp(coords, truth, 1e-7, np.random.default_rng(1234))
        data = SpatialDataset(coords, targets)
        batch = make_batch(build_index(coords), np.arange(data.n), 20)
        estimate = sigma2_mean_estimate(batch, data, truth.replace(sigma2=1.0, tau2=1e-7))
        self.assertGreater(estimate, 1.5)
        self.assertLess(estimate, 2.5)


class ScalingTestCase(TestCase):
    """Tests for how posteriors and estimates respond to scaled targets."""

    def setUp(self):
        """Build a random 40-point dataset and queries."""
        rng = np.random.default_rng(13)
        self.data = SpatialDataset(rng.uniform(size=(40, 2)), rng.normal(size=40))
        self.queries = rng.uniform(size=(10, 2))
        self.params = MaternParams(nu=0.8, ell=0.4, tau2=1e-6)

    def test_target_scaling(self):
        """Test that targets times c scale the means by c and leave the variances alone."""
        c = -2.5
        scaled = self.data.with_targets(c * self.data.targets)
        base = predict_batch(self.queries, self.data, self.params, 8)
        other = predict_batch(self.queries, scaled, self.params, 8)
        for a, b in zip(base, other):
            self.assertAlmostEqual(b.mean, c * a.mean, places=10)
            self.assertAlmostEqual(b.variance, a.variance, places=12)

    def test_sigma2_estimates_scale_quadratically(self):
        """Test that targets times c scale both sigma2 estimators by c^2."""
        c = 3.0
        scaled = self.data.with_targets(c * self.data.targets)
        batch = make_batch(build_index(self.data.coords), np.arange(0, 40, 2), 6)
        ratio = sigma2_mean_estimate(batch, scaled, self.params) / sigma2_mean_estimate(batch, self.data, self.params)
        self.assertAlmostEqual(ratio, c ** 2, places=9)
        first = sigma2_downsample_median(batch, self.data, self.params, 3, np.random.default_rng(1))
        second = sigma2_downsample_median(batch, scaled, self.params, 3, np.random.default_rng(1))
        self.assertAlmostEqual(second / first, c ** 2, places=9)

    def test_variance_bounded_by_prior(self):
        """Test that posterior variances never exceed sigma2 + tau2."""
        for params in (
            MaternParams(sigma2=1.0, nu=0.5, ell=0.2, tau2=1e-7),
            MaternParams(sigma2=2.5, nu=1.3, ell=0.05, tau2=1e-3),
            MaternParams(sigma2=0.3, nu=2.5, ell=0.5, tau2=1e-6),
        ):
            with self.subTest(params=params):
                for posterior in predict_batch(self.queries, self.data, params, 12):
                    self.assertLessEqual(posterior.variance, params.sigma2 + params.tau2)
                    self.assertGreaterEqual(posterior.variance, VARIANCE_FLOOR)


class RobustSigma2TestCase(TestCase):
    """Tests for the outlier resistance of the down-sampled median estimator."""

    def test_median_resists_outliers(self):
        """Test that gross outliers inflate the median estimate less than the mean estimate."""
        truth = MaternParams(sigma2=1.0, nu=0.5, ell=0.3)
        params = truth.replace(tau2=1e-7)
        coords = make_grid(15)
        index = build_index(coords)
        batch = make_batch(index, np.arange(len(coords)), 10)
        wins = 0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            clean = SpatialDataset(coords, sample_gp(coords, truth, 1e-7, rng))
            targets = np.array(clean.targets)
            outliers = rng.choice(clean.n, size=clean.n // 20, replace=False)
            targets[outliers] *= 10.0
            dirty = clean.with_targets(targets)
            mean_inflation = sigma2_mean_estimate(batch, dirty, params) / sigma2_mean_estimate(batch, clean, params)
            median_clean = sigma2_downsample_median(batch, clean, params, 5, np.random.default_rng(seed))
            median_dirty = sigma2_downsample_median(batch, dirty, params, 5, np.random.default_rng(seed))
            wins += median_dirty / median_clean < mean_inflation
        self.assertGreaterEqual(wins, 18)


class DistanceTableTestCase(TestCase):
    """Tests for kernel evaluation over distinct distances."""

    def setUp(self):
        """Build lattice neighborhoods."""
        coords = make_grid(10)
        batch = make_batch(build_index(coords), np.arange(0, 100, 3), 8)
        self.cross, self.pair = neighborhood_distances(coords[batch.element_indices], batch.index_matrix(), coords)

    def test_matches_direct_evaluation(self):
        """Test that the table reproduces element-wise kernel evaluation."""
        for nu in (0.5, 0.8, 2.2):
            params = MaternParams(sigma2=1.4, nu=nu, ell=0.3)
            for distances in (self.cross, self.pair):
                np.testing.assert_allclose(
                    DistanceTable(distances).kernel(params), matern_from_distances(distances, params), rtol=1e-13
                )

    def test_symmetric_blocks_collapse(self):
        """Test that mirrored entries and zero diagonals are stored once."""
        table = DistanceTable(self.pair)
        self.assertEqual(table.shape, self.pair.shape)
        self.assertLess(len(table.values), self.pair.size / 2)
        cov = table.kernel(MaternParams(nu=0.7, ell=0.5))
        np.testing.assert_array_equal(cov, np.swapaxes(cov, 1, 2))
