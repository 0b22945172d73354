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
"""Utility functions."""
import os
import tempfile
from collections import abc

import yaml

from .log import LOG  # noqa: F401
from .log import LOG_FORMAT  # noqa: F401
from .log import LOG_VERBOSITY  # noqa: F401
from .log import set_log_level  # noqa: F401


def load_yaml(objekt):
    """Load a yaml document.

    Params:
        objekt (str): A filename containing a YAML document OR a YAML document.
    """
    if objekt is None:
        return None

    yamlfile = None
    try:
        with open(objekt, "r") as yaml_file:
            yamlfile = yaml.safe_load(yaml_file)
    except (TypeError, OSError, IOError):
        yamlfile = yaml.safe_load(objekt)
    return yamlfile


def dump_yaml(data, path):
    """Write a yaml document atomically."""
    with atomic_writer(path) as stream:
        yaml.safe_dump(data, stream, default_flow_style=False, sort_keys=False)


def deepupdate(original, update):
    """Recursively update a dict.

    Subdict's won't be overwritten but also updated.
    """
    if not isinstance(original, abc.Mapping):
        return update
    for key, value in update.items():
        if isinstance(value, abc.Mapping):
            original[key] = deepupdate(original.get(key, {}), value)
        else:
            original[key] = value
    return original


class atomic_writer:
    """Context manager writing a text file through a temporary sibling.

    The target only appears once the block exits cleanly, so an interrupted
    run never leaves a truncated file behind.
    """

    def __init__(self, path, newline=None):
        """Initialize the writer."""
        self.path = os.path.abspath(path)
        self.newline = newline
        self._handle = None
        self._tmp_path = None

    def __enter__(self):
        directory = os.path.dirname(self.path)
        os.makedirs(directory, exist_ok=True)
        fd, self._tmp_path = tempfile.mkstemp(dir=directory, prefix=".robgp-", suffix=".tmp")
        self._handle = os.fdopen(fd, "w", newline=self.newline)
        return self._handle

    def __exit__(self, exc_type, exc, traceback):
        self._handle.close()
        if exc_type is None:
            os.replace(self._tmp_path, self.path)
        else:
            os.remove(self._tmp_path)
        return False


class dicta(dict):
    """
    Dict subclass that can access values via key or attribute.

    Ex:
        x = dicta(a=1, b=2)
        print(x.a)     # 1
        print(x['b'])  # 2
    """

    def __getattr__(self, key):
        """Get attribute."""
        try:
            return super().__getitem__(key)
        except KeyError as err:
            raise AttributeError(key) from err

    def __setattr__(self, key, val):
        """Set attribute."""
        super().__setitem__(key, val)

    def __delattr__(self, key):
        """Delete attribute."""
        super().__delitem__(key)

    def copy(self):
        """Get a copy."""
        return self.__class__(self)

    @classmethod
    def wrap(cls, value):
        """Recursively convert mappings into dicta."""
        if isinstance(value, abc.Mapping):
            return cls({key: cls.wrap(item) for key, item in value.items()})
        if isinstance(value, list):
            return [cls.wrap(item) for item in value]
        return value

    def unwrap(self):
        """Recursively convert back into plain dicts."""

        def _plain(value):
            if isinstance(value, dict):
                return {key: _plain(item) for key, item in value.items()}
            if isinstance(value, list):
                return [_plain(item) for item in value]
            return value

        return _plain(self)
