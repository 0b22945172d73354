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
"""Matérn covariance evaluation and kernel matrix assembly."""
import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from robgp.errors import InvalidInputError
from scipy import special
from scipy.spatial.distance import cdist

HALF_INTEGER_NUS = (0.5, 1.5, 2.5)


@dataclass(frozen=True)
class MaternParams:
    """Matérn hyperparameters (sigma2, nu, ell, tau2).

    sigma2 is the variance scale, nu the smoothness, ell the length scale and
    tau2 the nugget added to self-covariance diagonals.
    """

    sigma2: float = 1.0
    nu: float = 0.5
    ell: float = 1.0
    tau2: float = 0.0

    def __post_init__(self):
        """Validate the hyperparameters."""
        for name in ("sigma2", "nu", "ell", "tau2"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating, np.integer)) or not math.isfinite(value):
                raise InvalidInputError(f"{name} must be a finite real, got {value!r}.")
            object.__setattr__(self, name, float(value))
        if self.sigma2 <= 0:
            raise InvalidInputError(f"sigma2 must be positive, got {self.sigma2}.")
        if self.nu <= 0:
            raise InvalidInputError(f"nu must be positive, got {self.nu}.")
        if self.ell <= 0:
            raise InvalidInputError(f"ell must be positive, got {self.ell}.")
        if self.tau2 < 0:
            raise InvalidInputError(f"tau2 must be non-negative, got {self.tau2}.")

    def replace(self, **changes):
        """Return a copy with the given fields changed."""
        return dataclasses.replace(self, **changes)

    def as_dict(self):
        """Return the hyperparameters as a plain dict."""
        return dataclasses.asdict(self)


def _half_integer(nu):
    for candidate in HALF_INTEGER_NUS:
        if nu == candidate:
            return candidate
    return None


def bessel_k(nu, x):
    """Modified Bessel function of the second kind, K_nu(x).

    Only |nu| is used since K_nu = K_-nu. Half-integer orders up to 5/2 use
    their closed forms; every other order goes through scipy.special.kv.

    Args:
        nu (float): order
        x (float or ndarray): strictly positive argument(s)
    Returns:
        (float or ndarray): K_nu(x)

    """
    nu = abs(float(nu))
    if nu == 0:
        raise InvalidInputError("bessel_k requires a non-zero order.")
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise InvalidInputError("bessel_k is only defined for finite x > 0.")

    half = _half_integer(nu)
    if half is None:
        value = special.kv(nu, arr)
    else:
        base = np.sqrt(np.pi / (2.0 * arr)) * np.exp(-arr)
        if half == 0.5:
            value = base
        elif half == 1.5:
            value = base * (1.0 + 1.0 / arr)
        else:
            value = base * (1.0 + 3.0 / arr + 3.0 / arr ** 2)
    if np.ndim(value) == 0:
        return float(value)
    return value


def _scaled_distance(h, params):
    return np.sqrt(2.0 * params.nu) * h / params.ell


def _matern_closed_form(h, params):
    """Closed-form Matérn for nu in {1/2, 3/2, 5/2}; h may be an array."""
    h = np.asarray(h, dtype=float)
    if params.nu == 0.5:
        r = h / params.ell
        return params.sigma2 * np.exp(-r)
    if params.nu == 1.5:
        r = math.sqrt(3.0) * h / params.ell
        return params.sigma2 * (1.0 + r) * np.exp(-r)
    if params.nu == 2.5:
        r = math.sqrt(5.0) * h / params.ell
        return params.sigma2 * (1.0 + r + r * r / 3.0) * np.exp(-r)
    raise InvalidInputError(f"No closed form for nu={params.nu}.")


def _matern_bessel(h, params):
    """General Matérn through K_nu; exact sigma2 where h == 0."""
    h = np.asarray(h, dtype=float)
    out = np.full(h.shape, params.sigma2)
    positive = h > 0
    if np.any(positive):
        x = _scaled_distance(h[positive], params)
        coef = params.sigma2 * 2.0 ** (1.0 - params.nu) / special.gamma(params.nu)
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            values = coef * np.power(x, params.nu) * special.kv(params.nu, x)
        # kv underflows to 0 long before x**nu overflows
        values[~np.isfinite(values)] = 0.0
        out[positive] = values
    return out


def matern_from_distances(distances, params):
    """Evaluate the Matérn covariance element-wise over a distance array."""
    distances = np.asarray(distances, dtype=float)
    if not np.all(np.isfinite(distances)):
        raise InvalidInputError("Distances must be finite.")
    if np.any(distances < 0):
        raise InvalidInputError("Distances must be non-negative.")
    if _half_integer(params.nu) is not None:
        return _matern_closed_form(distances, params)
    return _matern_bessel(distances, params)


def matern_value(h, params):
    """Matérn covariance at distance h (no nugget).

    Args:
        h (float): non-negative distance
        params (MaternParams): hyperparameters
    Returns:
        (float): C_nu(h), exactly sigma2 at h == 0

    """
    if not math.isfinite(h):
        raise InvalidInputError(f"Distance must be finite, got {h!r}.")
    if h < 0:
        raise InvalidInputError(f"Distance must be non-negative, got {h!r}.")
    if h == 0:
        return params.sigma2
    return float(matern_from_distances(np.array([h]), params)[0])


def _as_points(points, name):
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise InvalidInputError(f"{name} must be a point set of shape (n, d) with d >= 1.")
    return arr


def pairwise_distances(a, b):
    """Euclidean distances between every row of a and every row of b.

    Args:
        a (array-like): m x d point set
        b (array-like): n x d point set
    Returns:
        (ndarray): m x n distance matrix

    """
    a = _as_points(a, "A")
    b = _as_points(b, "B")
    if a.shape[1] != b.shape[1]:
        raise InvalidInputError(f"Dimension mismatch: {a.shape[1]} != {b.shape[1]}.")
    return cdist(a, b, metric="euclidean")


def kernel_matrix(a, b, params, add_nugget=False):
    """Matérn kernel matrix between point sets a and b.

    Passing b=None (or b is a) selects the self-covariance case, where
    add_nugget places tau2 on the diagonal. Cross-covariance blocks never
    receive the nugget.
    """
    self_covariance = b is None or b is a
    a_pts = _as_points(a, "A")
    dists = pairwise_distances(a_pts, a_pts if self_covariance else b)
    if self_covariance:
        np.fill_diagonal(dists, 0.0)
    matrix = matern_from_distances(dists, params)
    if self_covariance and add_nugget and params.tau2 > 0:
        matrix[np.diag_indices_from(matrix)] += params.tau2
    return matrix
