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
"""Synthetic spatial data generators."""
from robgp.generators.generator import AbstractGenerator  # noqa: F401
from robgp.generators.grid_generator import GridGPGenerator  # noqa: F401
from robgp.generators.grid_generator import make_grid  # noqa: F401
from robgp.generators.grid_generator import sample_gp  # noqa: F401
