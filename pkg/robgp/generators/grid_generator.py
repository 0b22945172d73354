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
"""Gaussian-process surfaces sampled on a regular 2-D lattice."""
import numpy as np
from robgp.errors import InvalidInputError
from robgp.errors import NumericalError
from robgp.generators.generator import AbstractGenerator
from robgp.gp_core import SpatialDataset
from robgp.kernel import kernel_matrix
from robgp.util import LOG
from scipy import linalg

GRID_COLUMNS = ("x", "y")


def make_grid(n_per_dim):
    """n_per_dim^2 lattice points over [0, 1]^2 with spacing 1 / (n_per_dim - 1)."""
    if int(n_per_dim) != n_per_dim or n_per_dim < 2:
        raise InvalidInputError(f"a grid needs at least 2 points per dimension, got {n_per_dim}.")
    axis = np.linspace(0.0, 1.0, int(n_per_dim))
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


def sample_gp(coords, params, noise_var, rng, stability_nugget=0.0):
    """Draw one realization of N(0, K + (noise_var + stability_nugget) I).

    The covariance is factorized densely, so this is meant for desk-scale
    point sets.
    """
    coords = np.asarray(coords, dtype=float)
    if noise_var < 0 or stability_nugget < 0:
        raise InvalidInputError("noise variances must be non-negative.")
    cov = kernel_matrix(coords, None, params)
    cov[np.diag_indices_from(cov)] += noise_var + stability_nugget
    try:
        lower = linalg.cholesky(cov, lower=True, check_finite=False)
    except linalg.LinAlgError as err:
        raise NumericalError(
            f"prior covariance of {len(coords)} points is not positive definite; "
            "increase the stability nugget or noise variance."
        ) from err
    return lower @ rng.standard_normal(len(coords))


class GridGPGenerator(AbstractGenerator):
    """Generator for a GP surface on the unit-square lattice."""

    def __init__(self, n_per_dim, params, noise_var, stability_nugget, seed=None, rng=None):
        """Initialize the generator."""
        super().__init__(seed, rng)
        self.n_per_dim = n_per_dim
        self.params = params
        self.noise_var = noise_var
        self.stability_nugget = stability_nugget

    def _locations(self):
        return make_grid(self.n_per_dim)

    def _responses(self, coords):
        return sample_gp(coords, self.params, self.noise_var, self.rng, self.stability_nugget)

    def generate_data(self):
        """Sample the full lattice dataset."""
        coords = self._locations()
        LOG.info(f"Sampling a GP surface on {len(coords)} grid points (nu={self.params.nu}).")
        return SpatialDataset(coords, self._responses(coords), GRID_COLUMNS, "z")
