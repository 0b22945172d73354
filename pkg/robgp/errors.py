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
"""Exception classes raised by robgp."""


class RobGPError(Exception):
    """A robgp Exception class."""

    category = "Error"
    exit_code = 1


class InvalidInputError(RobGPError, ValueError):
    """Bad arguments handed to a library operation."""

    category = "Invalid input"
    exit_code = 2


class ConfigError(RobGPError):
    """Missing, unknown or inconsistent configuration."""

    category = "Config error"
    exit_code = 2


class DataError(RobGPError):
    """Input data that cannot be used."""

    category = "Data error"
    exit_code = 3


class NumericalError(RobGPError):
    """A factorization or other numerical step failed."""

    category = "Numerical error"
    exit_code = 4


class OptimizationError(NumericalError):
    """The hyperparameter search produced no finite objective value."""

    category = "Optimization failed"
