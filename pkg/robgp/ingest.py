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
"""Delimited-text ingestion and min-max feature scaling."""
import csv
import math
from dataclasses import dataclass

import numpy as np
from robgp.errors import ConfigError
from robgp.errors import DataError
from robgp.gp_core import SpatialDataset
from robgp.util import atomic_writer
from robgp.util import LOG


def _parse(value):
    if value is None:
        return None
    text = value.strip()
    if not text:
        return None
    try:
        number = float(text)
    except ValueError:
        return None
    return number if math.isfinite(number) else None


def load_csv(path, feature_columns, target_column=None):
    """Load selected numeric columns from a CSV file with a header row.

    Rows with a missing or non-numeric value in any selected column are
    dropped and counted in a warning. Without a target column the dataset
    gets zero targets (query files).

    Args:
        path (str): file location
        feature_columns (list): names of the feature columns
        target_column (str): name of the response column
    Returns:
        (SpatialDataset)

    """
    feature_columns = list(feature_columns)
    wanted = feature_columns + ([target_column] if target_column else [])
    try:
        with open(path, newline="") as csv_file:
            reader = csv.DictReader(csv_file)
            header = reader.fieldnames or []
            for column in wanted:
                if column not in header:
                    raise ConfigError(f"column {column!r} not found in {path}.")
            rows = []
            dropped = 0
            for record in reader:
                values = [_parse(record.get(column)) for column in wanted]
                if any(value is None for value in values):
                    dropped += 1
                    continue
                rows.append(values)
    except OSError as err:
        raise DataError(f"cannot read {path}: {err}") from err

    if dropped:
        LOG.warning(f"Dropped {dropped} row(s) of {path} with missing or non-numeric values.")
    if not rows:
        raise DataError(f"{path} has no usable rows.")
    table = np.array(rows, dtype=float)
    n_features = len(feature_columns)
    targets = table[:, n_features] if target_column else np.zeros(len(table))
    dataset = SpatialDataset(table[:, :n_features], targets, tuple(feature_columns), target_column)
    LOG.info(f"Loaded {dataset.n} rows from {path}.")
    return dataset


def write_csv(path, dataset, extra_columns=None):
    """Write a dataset (features, target, optional extra columns) to CSV."""
    columns = list(dataset.columns or [f"x{i}" for i in range(dataset.d)])
    target_name = dataset.target_name or "target"
    header = columns + [target_name] + list(extra_columns or {})
    with atomic_writer(path, newline="") as csv_file:
        writer = csv.writer(csv_file)
        writer.writerow(header)
        for i in range(dataset.n):
            row = [repr(float(v)) for v in dataset.coords[i]] + [repr(float(dataset.targets[i]))]
            row += [repr(float(values[i])) for values in (extra_columns or {}).values()]
            writer.writerow(row)
    return path


@dataclass(frozen=True)
class MinMaxScaler:
    """Per-column minima and maxima of the training features."""

    columns: tuple
    mins: tuple
    maxs: tuple

    def transform(self, coords):
        """Map features with the training min/max; values outside are not clamped."""
        coords = np.asarray(coords, dtype=float)
        return (coords - np.array(self.mins)) / (np.array(self.maxs) - np.array(self.mins))

    def apply(self, dataset):
        """Scaled copy of a dataset."""
        return dataset.with_coords(self.transform(dataset.coords))

    def as_dict(self):
        """Plain mapping for model files."""
        return {"columns": list(self.columns), "min": list(self.mins), "max": list(self.maxs)}

    @classmethod
    def from_dict(cls, data):
        """Rebuild from as_dict output."""
        return cls(tuple(data["columns"]), tuple(float(v) for v in data["min"]), tuple(float(v) for v in data["max"]))


def minmax_scale(data):
    """Scale every feature column of data to [0, 1].

    Returns:
        (tuple): (scaled SpatialDataset, MinMaxScaler)

    """
    mins = data.coords.min(axis=0)
    maxs = data.coords.max(axis=0)
    columns = data.columns or tuple(f"x{i}" for i in range(data.d))
    for name, low, high in zip(columns, mins, maxs):
        if not high > low:
            raise DataError(f"feature column {name!r} is constant and cannot be min-max scaled.")
    scaler = MinMaxScaler(tuple(columns), tuple(float(v) for v in mins), tuple(float(v) for v in maxs))
    return scaler.apply(data), scaler
