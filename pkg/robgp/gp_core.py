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
"""Nearest-neighbor conditional posteriors and closed-form sigma2 estimators."""
from dataclasses import dataclass

import numpy as np
from robgp.errors import InvalidInputError
from robgp.errors import NumericalError
from robgp.kernel import matern_from_distances
from robgp.neighbors import build_index
from robgp.neighbors import downsample_neighbors
from robgp.neighbors import query_knn
from robgp.util import LOG
from scipy import linalg

VARIANCE_FLOOR = 1e-14


@dataclass(frozen=True)
class PosteriorSummary:
    """Posterior mean and variance at one query point."""

    mean: float
    variance: float


@dataclass(frozen=True)
class SpatialDataset:
    """Coordinates (or scaled features) paired with responses."""

    coords: np.ndarray
    targets: np.ndarray
    columns: tuple = None
    target_name: str = None

    def __post_init__(self):
        """Coerce to float arrays and validate shapes."""
        coords = np.array(self.coords, dtype=float)
        if coords.ndim == 1:
            coords = coords.reshape(-1, 1)
        targets = np.array(self.targets, dtype=float).reshape(-1)
        if coords.ndim != 2 or coords.shape[0] < 1:
            raise InvalidInputError("a dataset needs at least one row of coordinates.")
        if coords.shape[0] != targets.shape[0]:
            raise InvalidInputError(f"{coords.shape[0]} coordinate rows but {targets.shape[0]} targets.")
        if not (np.all(np.isfinite(coords)) and np.all(np.isfinite(targets))):
            raise InvalidInputError("dataset entries must be finite.")
        if self.columns is not None and len(self.columns) != coords.shape[1]:
            raise InvalidInputError("one column name per coordinate dimension is required.")
        coords.setflags(write=False)
        targets.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "targets", targets)
        if self.columns is not None:
            object.__setattr__(self, "columns", tuple(self.columns))

    @property
    def n(self):
        """Number of rows."""
        return self.coords.shape[0]

    @property
    def d(self):
        """Coordinate dimension."""
        return self.coords.shape[1]

    def subset(self, indices):
        """Dataset restricted to the given rows, in the given order."""
        indices = np.asarray(indices, dtype=np.intp)
        return SpatialDataset(self.coords[indices], self.targets[indices], self.columns, self.target_name)

    def with_targets(self, targets):
        """Same coordinates, replacement targets."""
        return SpatialDataset(self.coords, targets, self.columns, self.target_name)

    def with_coords(self, coords):
        """Same targets, replacement coordinates."""
        return SpatialDataset(coords, self.targets, self.columns, self.target_name)


def neighborhood_distances(query_coords, nn_indices, coords):
    """Distances needed for a stack of neighborhoods.

    Returns the (m, k) query-to-neighbor distances and the (m, k, k)
    within-neighborhood distances.
    """
    query_coords = np.asarray(query_coords, dtype=float).reshape(len(nn_indices), -1)
    nn_coords = coords[nn_indices]
    cross = np.sqrt(np.sum((nn_coords - query_coords[:, None, :]) ** 2, axis=-1))
    diff = nn_coords[:, :, None, :] - nn_coords[:, None, :, :]
    pair = np.sqrt(np.sum(diff * diff, axis=-1))
    return cross, pair


class DistanceTable:
    """A distance array held as its distinct values plus an index back into them.

    Lattice neighborhoods repeat a few distances many times and every
    symmetric block holds each off-diagonal distance twice, so the kernel
    is evaluated once per distinct value.
    """

    def __init__(self, distances):
        """Factor the distances into unique values and their positions."""
        distances = np.asarray(distances, dtype=float)
        self.shape = distances.shape
        values, inverse = np.unique(distances, return_inverse=True)
        self.values = values
        self.inverse = np.asarray(inverse).reshape(-1)

    def kernel(self, params):
        """Matérn covariance of every entry, without nugget, in the original shape."""
        return matern_from_distances(self.values, params)[self.inverse].reshape(self.shape)


def _as_table(distances):
    return distances if isinstance(distances, DistanceTable) else DistanceTable(distances)


def _factor(matrix, label):
    try:
        return linalg.cho_factor(matrix, lower=True, check_finite=False)
    except linalg.LinAlgError as err:
        raise NumericalError(
            f"Cholesky factorization failed for {label}; the kernel matrix is not positive definite "
            "after adding the nugget (try a larger tau2)."
        ) from err


def _neighborhood_covariance(pair_dist, params):
    cov = _as_table(pair_dist).kernel(params)
    if params.tau2 > 0:
        idx = np.arange(cov.shape[-1])
        cov[..., idx, idx] += params.tau2
    return cov


def conditional_moments(cross_dist, pair_dist, nn_targets, params, labels=None, floor=VARIANCE_FLOOR):
    """Posterior means and variances for a stack of neighborhoods.

    Each k x k nugget-regularized kernel matrix is Cholesky factorized; no
    inverse is ever formed.

    Args:
        cross_dist (ndarray or DistanceTable): (m, k) query-to-neighbor distances
        pair_dist (ndarray or DistanceTable): (m, k, k) within-neighborhood distances
        nn_targets (ndarray): (m, k) neighbor responses
        params (MaternParams): hyperparameters
        labels (list): per-query identifiers used in error messages
        floor (float): lower clamp applied to every variance
    Returns:
        (tuple): (means, variances) arrays of length m

    """
    cross_cov = _as_table(cross_dist).kernel(params)
    cov = _neighborhood_covariance(pair_dist, params)
    m = cross_cov.shape[0]
    means = np.empty(m)
    variances = np.empty(m)
    for i in range(m):
        label = f"query {labels[i] if labels is not None else i}"
        factor = _factor(cov[i], label)
        solved = linalg.cho_solve(factor, np.column_stack((nn_targets[i], cross_cov[i])), check_finite=False)
        means[i] = cross_cov[i] @ solved[:, 0]
        variances[i] = params.sigma2 - cross_cov[i] @ solved[:, 1]
    return means, np.maximum(variances, floor)


def predict_from_neighbors(query_coords, neighbor_sets, data, params, floor=VARIANCE_FLOOR):
    """Posterior summaries for queries with precomputed neighbor sets."""
    if len(neighbor_sets) == 0:
        return []
    nn_indices = np.vstack([ns.indices for ns in neighbor_sets])
    cross, pair = neighborhood_distances(query_coords, nn_indices, data.coords)
    labels = [ns.query_index for ns in neighbor_sets]
    means, variances = conditional_moments(cross, pair, data.targets[nn_indices], params, labels, floor)
    return [PosteriorSummary(float(mu), float(var)) for mu, var in zip(means, variances)]


def posterior_mean(query, ns, data, params):
    """Kriging mean K(x, X_N) K(X_N, X_N)^-1 Y(X_N) of one query."""
    return predict_from_neighbors(np.asarray(query, dtype=float).reshape(1, -1), [ns], data, params)[0].mean


def posterior_variance(query, ns, data, params, floor=VARIANCE_FLOOR):
    """Kriging variance K(x, x) - K(x, X_N) K(X_N, X_N)^-1 K(X_N, x) of one query."""
    query = np.asarray(query, dtype=float).reshape(1, -1)
    return predict_from_neighbors(query, [ns], data, params, floor)[0].variance


def find_neighbors(queries, data, k, loo=False, index=None):
    """Neighbor sets for a batch of queries.

    In leave-one-out mode queries are training row indices and each one is
    excluded from its own neighbor set. Otherwise queries are points.
    """
    index = index if index is not None else build_index(data.coords)
    if loo:
        rows = np.asarray(queries, dtype=np.intp).reshape(-1)
        neighbor_sets = [query_knn(index, data.coords[row], k, exclude=int(row)) for row in rows]
        return data.coords[rows], neighbor_sets
    points = np.asarray(queries, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, data.d)
    neighbor_sets = [query_knn(index, point, k, query_index=i) for i, point in enumerate(points)]
    return points, neighbor_sets


def predict_batch(queries, data, params, k, loo=False, index=None):
    """One PosteriorSummary per query, in input order.

    Args:
        queries (array-like): (m, d) points, or training row indices when loo is set
        data (SpatialDataset): training data
        params (MaternParams): hyperparameters
        k (int): neighbor count
        loo (bool): leave-one-out mode
        index (NeighborIndex): optional prebuilt index over data.coords
    Returns:
        (list): PosteriorSummary per query

    """
    points, neighbor_sets = find_neighbors(queries, data, k, loo=loo, index=index)
    return predict_from_neighbors(points, neighbor_sets, data, params)


def quadratic_forms(nn_indices, data, params):
    """Y_N^T K(X_N, X_N; sigma2=1)^-1 Y_N for every row of nn_indices."""
    unit = params.replace(sigma2=1.0)
    nn_indices = np.atleast_2d(nn_indices)
    nn_coords = data.coords[nn_indices]
    diff = nn_coords[:, :, None, :] - nn_coords[:, None, :, :]
    cov = _neighborhood_covariance(np.sqrt(np.sum(diff * diff, axis=-1)), unit)
    forms = np.empty(len(nn_indices))
    for i, rows in enumerate(nn_indices):
        y = data.targets[rows]
        factor = _factor(cov[i], f"neighborhood {i}")
        forms[i] = y @ linalg.cho_solve(factor, y, check_finite=False)
    return forms


def _warn_degenerate(estimate, label):
    if estimate <= VARIANCE_FLOOR:
        LOG.warning(f"{label} sigma2 estimate is {estimate:.3g}; the targets look degenerate.")


def sigma2_mean_estimate(batch, data, params):
    """Average of the per-neighborhood closed-form sigma2 solutions.

    (1 / (b k)) sum_i Y_Ni^T K(X_Ni, X_Ni; sigma2=1)^-1 Y_Ni
    """
    forms = quadratic_forms(batch.index_matrix(), data, params)
    estimate = float(np.sum(forms) / (batch.size * batch.k))
    _warn_degenerate(estimate, "Mean")
    return estimate


def sigma2_downsample_median(batch, data, params, k_star, rng):
    """Median of down-sampled per-neighborhood sigma2 solutions.

    Each batch element keeps k_star random neighbors; its quadratic form is
    normalized by k_star before the median is taken across elements. This
    reads the single prefactor of the median formula as a per-neighborhood
    normalization, so that b=1, k_star=k reproduces the mean estimator.
    """
    subsets = [downsample_neighbors(ns, k_star, rng).indices for ns in batch.neighbor_sets]
    forms = quadratic_forms(np.vstack(subsets), data, params) / k_star
    estimate = float(np.median(forms))
    _warn_degenerate(estimate, "Median")
    return estimate
