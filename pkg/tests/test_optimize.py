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
import math
from unittest import TestCase

from robgp.errors import InvalidInputError
from robgp.errors import OptimizationError
from robgp.optimize import golden_section_search
from robgp.optimize import grid_golden_minimize
from robgp.optimize import Trace


class GoldenSectionTestCase(TestCase):
    """Tests for golden-section search."""

    def test_quadratic_minimum(self):
        """Test a parabola with its minimum inside the interval."""
        xmin = golden_section_search(lambda x: (x - 1.3) ** 2, 0.0, 3.0, tol=1e-6)
        self.assertAlmostEqual(xmin, 1.3, places=5)

    def test_swapped_bounds(self):
        """Test that reversed bounds are accepted."""
        xmin = golden_section_search(lambda x: (x - 0.2) ** 2, 1.0, 0.0, tol=1e-6)
        self.assertAlmostEqual(xmin, 0.2, places=5)

    def test_narrow_interval(self):
        """Test that an interval narrower than tol returns its midpoint."""
        self.assertAlmostEqual(golden_section_search(lambda x: x, 1.0, 1.0005, tol=1e-3), 1.00025, places=12)

    def test_minimum_at_boundary(self):
        """Test a monotone function."""
        xmin = golden_section_search(lambda x: x, 2.0, 4.0, tol=1e-4)
        self.assertLess(xmin - 2.0, 1e-4)


class GridGoldenTestCase(TestCase):
    """Tests for the bounded grid-then-golden minimizer."""

    def test_quadratic_stub(self):
        """Test the (nu - 1)^2 stub objective."""
        self.assertAlmostEqual(grid_golden_minimize(lambda nu: (nu - 1.0) ** 2, 0.05, 3.0), 1.0, delta=1e-3)

    def test_bounds_are_respected(self):
        """Test that a minimum outside the bounds is clamped into them."""
        value = grid_golden_minimize(lambda nu: (nu - 1.0) ** 2, 0.4, 0.6)
        self.assertGreaterEqual(value, 0.4)
        self.assertLessEqual(value, 0.6)
        self.assertAlmostEqual(value, 0.6, delta=1e-3)

    def test_multimodal_picks_global_cell(self):
        """Test that the grid finds the deeper of two minima."""

        def f(x):
            return min((x - 0.2) ** 2 + 0.5, (x - 2.0) ** 2)

        self.assertAlmostEqual(grid_golden_minimize(f, 0.05, 3.0), 2.0, delta=1e-3)

    def test_non_finite_points_are_skipped(self):
        """Test that non-finite values lose against finite ones."""

        def f(x):
            return math.nan if x < 0.5 else (x - 1.5) ** 2

        self.assertAlmostEqual(grid_golden_minimize(f, 0.05, 3.0), 1.5, delta=1e-3)

    def test_all_non_finite(self):
        """Test that an objective that is never finite fails."""
        with self.assertRaises(OptimizationError):
            grid_golden_minimize(lambda x: math.inf, 0.05, 3.0)

    def test_degenerate_interval(self):
        """Test low == high."""
        self.assertEqual(grid_golden_minimize(lambda x: x, 0.7, 0.7), 0.7)

    def test_invalid_bounds(self):
        """Test that non-positive or inverted bounds are rejected."""
        with self.assertRaises(InvalidInputError):
            grid_golden_minimize(lambda x: x, 0.0, 1.0)
        with self.assertRaises(InvalidInputError):
            grid_golden_minimize(lambda x: x, 2.0, 1.0)

    def test_trace_records_evaluations(self):
        """Test that the trace keeps every evaluation."""
        trace = Trace()
        grid_golden_minimize(lambda x: (x - 1.0) ** 2, 0.05, 3.0, grid_points=5, trace=trace)
        self.assertGreater(len(trace), 5)
        x, value = trace[0]
        self.assertAlmostEqual(x, 0.05)
        self.assertAlmostEqual(value, 0.9025)
