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
"""Logging for the robgp package and its CLI."""
import logging
import sys

LOG = logging.getLogger("robgp")
LOG_FORMAT = "%(asctime)s [%(levelname)s] %(message)s"
# indexed by the number of -l flags
LOG_VERBOSITY = [logging.ERROR, logging.WARNING, logging.INFO, logging.DEBUG]
logging.basicConfig(format=LOG_FORMAT, level=logging.ERROR, stream=sys.stdout)


def set_log_level(count):
    """Set the package log level from a -l count; counts past the end mean DEBUG."""
    level = LOG_VERBOSITY[max(0, min(count, len(LOG_VERBOSITY) - 1))]
    LOG.setLevel(level)
    return level
