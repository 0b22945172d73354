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
"""Exact nearest-neighbor indexing, batch sampling and neighbor down-sampling."""
from dataclasses import dataclass

import numpy as np
from robgp.errors import InvalidInputError
from scipy.spatial import cKDTree

DEFAULT_K = 50
DEFAULT_BATCH = 500


def default_k_star(k):
    """Half of k, rounded up."""
    return max(1, -(-int(k) // 2))


@dataclass(frozen=True)
class NeighborSet:
    """The k nearest training points of one query, sorted by distance."""

    query_index: int
    indices: np.ndarray
    distances: np.ndarray

    def __post_init__(self):
        """Freeze and validate the neighbor lists."""
        indices = np.asarray(self.indices, dtype=np.intp)
        distances = np.asarray(self.distances, dtype=float)
        if indices.shape != distances.shape or indices.ndim != 1:
            raise InvalidInputError("indices and distances must be 1-D and of equal length.")
        if np.any(np.diff(distances) < 0):
            raise InvalidInputError("distances must be non-decreasing.")
        if len(np.unique(indices)) != len(indices):
            raise InvalidInputError("neighbor indices must be unique.")
        indices.setflags(write=False)
        distances.setflags(write=False)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "distances", distances)

    @property
    def k(self):
        """Number of neighbors."""
        return len(self.indices)


@dataclass(frozen=True)
class Batch:
    """Batch elements paired with their leave-one-out neighbor sets."""

    element_indices: np.ndarray
    neighbor_sets: tuple

    def __post_init__(self):
        """Validate the pairing of elements and neighbor sets."""
        elements = np.asarray(self.element_indices, dtype=np.intp)
        if len(np.unique(elements)) != len(elements):
            raise InvalidInputError("batch element indices must be unique.")
        neighbor_sets = tuple(self.neighbor_sets)
        if len(neighbor_sets) != len(elements):
            raise InvalidInputError("one neighbor set per batch element is required.")
        for element, ns in zip(elements, neighbor_sets):
            if ns.query_index != element:
                raise InvalidInputError(f"neighbor set {ns.query_index} does not belong to element {element}.")
        if len({ns.k for ns in neighbor_sets}) > 1:
            raise InvalidInputError("all neighbor sets in a batch must share the same k.")
        elements.setflags(write=False)
        object.__setattr__(self, "element_indices", elements)
        object.__setattr__(self, "neighbor_sets", neighbor_sets)

    @property
    def size(self):
        """Number of batch elements b."""
        return len(self.element_indices)

    @property
    def k(self):
        """Shared neighbor count."""
        return self.neighbor_sets[0].k if self.neighbor_sets else 0

    def index_matrix(self):
        """Neighbor indices stacked into a (b, k) array."""
        return np.vstack([ns.indices for ns in self.neighbor_sets]) if self.neighbor_sets else np.empty((0, 0), int)


class NeighborIndex:
    """Immutable exact kNN index over training coordinates."""

    def __init__(self, coords):
        """Build the tree over an (n, d) coordinate array."""
        coords = np.array(coords, dtype=float)
        if coords.ndim == 1:
            coords = coords.reshape(-1, 1)
        if coords.ndim != 2 or coords.shape[0] < 1 or coords.shape[1] < 1:
            raise InvalidInputError("build_index requires at least one point of dimension >= 1.")
        if not np.all(np.isfinite(coords)):
            raise InvalidInputError("training coordinates must be finite.")
        coords.setflags(write=False)
        self.coords = coords
        self.tree = cKDTree(coords)

    @property
    def n(self):
        """Number of indexed points."""
        return self.coords.shape[0]

    @property
    def d(self):
        """Dimension of indexed points."""
        return self.coords.shape[1]

    def brute_distances(self, query, candidates):
        """Euclidean distances from query to the candidate rows."""
        diff = self.coords[candidates] - query
        return np.sqrt(np.sum(diff * diff, axis=1))

    def query(self, query, k, exclude=None):
        """Return (indices, distances) of the exact k nearest points.

        Ties are broken by the lower training index. The tree only supplies a
        search radius; every candidate inside it is re-ranked exactly.
        """
        available = self.n - (1 if exclude is not None else 0)
        if k < 0 or k > available:
            raise InvalidInputError(f"k={k} exceeds the {available} available neighbors.")
        if k == 0:
            return np.empty(0, dtype=np.intp), np.empty(0, dtype=float)
        query = np.asarray(query, dtype=float).reshape(-1)
        if query.shape[0] != self.d:
            raise InvalidInputError(f"query has dimension {query.shape[0]}, index has {self.d}.")

        n_query = min(self.n, k + (1 if exclude is not None else 0))
        _, cand_idx = self.tree.query(query, k=n_query)
        cand_idx = np.atleast_1d(cand_idx)
        if exclude is not None:
            cand_idx = cand_idx[cand_idx != exclude]
        radius = float(np.max(self.brute_distances(query, cand_idx[:k])))
        candidates = np.asarray(self.tree.query_ball_point(query, r=radius * (1.0 + 1e-9) + 1e-12), dtype=np.intp)
        if exclude is not None:
            candidates = candidates[candidates != exclude]
        distances = self.brute_distances(query, candidates)
        order = np.lexsort((candidates, distances))[:k]
        return candidates[order], distances[order]


def build_index(train_coords):
    """Build an exact kNN index over the training coordinates."""
    return NeighborIndex(train_coords)


def query_knn(index, query, k, exclude=None, query_index=-1):
    """Exact k nearest neighbors of query, optionally excluding one training index.

    Args:
        index (NeighborIndex): index built over the training coordinates
        query (array-like): a single d-dimensional point
        k (int): number of neighbors
        exclude (int): training index to leave out (leave-one-out mode)
        query_index (int): id recorded on the result; defaults to exclude
    Returns:
        (NeighborSet)

    """
    indices, distances = index.query(query, k, exclude=exclude)
    if exclude is not None and query_index == -1:
        query_index = exclude
    return NeighborSet(int(query_index), indices, distances)


def sample_batch(n_train, b, rng):
    """Uniform sample of b unique training indices without replacement."""
    if b < 1 or b > n_train:
        raise InvalidInputError(f"batch size {b} must lie in [1, {n_train}].")
    return rng.choice(n_train, size=b, replace=False)


def downsample_neighbors(ns, k_star, rng):
    """Keep a uniform random subset of k_star neighbors, still sorted by distance."""
    if k_star < 1 or k_star > ns.k:
        raise InvalidInputError(f"k_star={k_star} must lie in [1, {ns.k}].")
    keep = np.sort(rng.choice(ns.k, size=k_star, replace=False))
    return NeighborSet(ns.query_index, ns.indices[keep], ns.distances[keep])


def make_batch(index, element_indices, k):
    """Leave-one-out neighbor sets for the given training indices."""
    neighbor_sets = [
        query_knn(index, index.coords[element], k, exclude=int(element)) for element in element_indices
    ]
    return Batch(np.asarray(element_indices, dtype=np.intp), tuple(neighbor_sets))


def downsample_batch(batch, k_star, rng):
    """Down-sample every neighbor set of a batch to k_star."""
    neighbor_sets = [downsample_neighbors(ns, k_star, rng) for ns in batch.neighbor_sets]
    return Batch(batch.element_indices, tuple(neighbor_sets))
