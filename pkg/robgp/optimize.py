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
"""Derivative-free bounded scalar minimization."""
import math

import numpy as np
from robgp.errors import InvalidInputError
from robgp.errors import OptimizationError
from robgp.util import LOG

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2
GRID_POINTS = 20


def _finite_or_inf(value):
    return value if math.isfinite(value) else math.inf


def golden_section_search(f, a, b, tol=1e-3):
    """
    Golden-section search.

    Given a function f with a single local minimum in the interval [a, b],
    return the midpoint of a bracketing interval no wider than tol.
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        return (a + b) / 2

    # Required steps to achieve tolerance
    n = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))

    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = _finite_or_inf(f(c))
    yd = _finite_or_inf(f(d))

    for _ in range(n - 1):
        if yc < yd:
            b = d
            d = c
            yd = yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = _finite_or_inf(f(c))
        else:
            a = c
            c = d
            yc = yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = _finite_or_inf(f(d))

    if yc < yd:
        return (a + d) / 2
    return (c + b) / 2


class Trace(list):
    """Log of (x, value) objective evaluations."""

    def wrap(self, f):
        """Return f, recording every evaluation."""

        def recorded(x):
            value = float(f(x))
            self.append((float(x), value))
            LOG.debug(f"objective({x:.6g}) = {value:.6g}")
            return value

        return recorded


def grid_golden_minimize(f, low, high, tol=1e-3, grid_points=GRID_POINTS, trace=None):
    """Minimize f over [low, high].

    A log-spaced grid locates the best cell, then golden-section search
    refines the interval between the grid neighbors of the best point.

    Args:
        f (callable): scalar objective
        low (float): lower bound, > 0
        high (float): upper bound
        tol (float): final interval width
        grid_points (int): number of coarse grid points
        trace (Trace): optional evaluation log
    Returns:
        (float): the minimizer, within [low, high]

    """
    if not (0 < low <= high) or not math.isfinite(high):
        raise InvalidInputError(f"invalid bounds [{low}, {high}].")
    if trace is not None:
        f = trace.wrap(f)
    if low == high:
        if not math.isfinite(f(low)):
            raise OptimizationError("objective is non-finite at the only admissible point.")
        return low

    grid = np.geomspace(low, high, grid_points)
    values = np.array([_finite_or_inf(f(x)) for x in grid])
    if not np.any(np.isfinite(values)):
        raise OptimizationError(f"objective is non-finite over the whole grid on [{low}, {high}].")
    best = int(np.argmin(values))
    left = grid[max(best - 1, 0)]
    right = grid[min(best + 1, len(grid) - 1)]

    refined = golden_section_search(f, left, right, tol=tol)
    refined_value = _finite_or_inf(f(refined))
    if refined_value <= values[best]:
        return float(min(max(refined, low), high))
    return float(grid[best])
