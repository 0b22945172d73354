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
"""Defines the abstract generator."""
from abc import ABC
from abc import abstractmethod

import numpy as np


class AbstractGenerator(ABC):
    """Base class for synthetic dataset generators.

    Subclasses pick the locations and draw responses there; all randomness
    comes from self.rng, seeded from seed or handed in by the caller.
    """

    def __init__(self, seed=None, rng=None):
        """Initialize the generator with its own random stream."""
        self.seed = seed
        self.rng = rng if rng is not None else np.random.default_rng(seed)
        super().__init__()

    @abstractmethod
    def _locations(self):
        """Create the point set the data lives on."""

    @abstractmethod
    def _responses(self, coords):
        """Draw responses at the given points."""

    @abstractmethod
    def generate_data(self):
        """Return a SpatialDataset."""
