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
"""Accuracy and uncertainty statistics for posterior predictions."""
import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from robgp.errors import InvalidInputError
from scipy.stats import norm

Z_95 = 1.959964
METRIC_FIELDS = ["rmse", "crps", "mad", "mdv", "median_ci_size", "coverage"]


@dataclass(frozen=True)
class EvalReport:
    """The six evaluation statistics of a fitted model on held-out data."""

    rmse: float
    crps: float
    mad: float
    mdv: float
    median_ci_size: float
    coverage: float

    def __post_init__(self):
        """Reject non-finite statistics and out-of-range coverage."""
        for name in METRIC_FIELDS:
            if not math.isfinite(getattr(self, name)):
                raise InvalidInputError(f"{name} is not finite.")
        if not 0.0 <= self.coverage <= 1.0:
            raise InvalidInputError(f"coverage {self.coverage} lies outside [0, 1].")

    def to_record(self):
        """Flat key-value record in report column order."""
        return dataclasses.asdict(self)


def _pair(pred_means, truths):
    pred = np.asarray(pred_means, dtype=float).reshape(-1)
    truth = np.asarray(truths, dtype=float).reshape(-1)
    if pred.shape != truth.shape:
        raise InvalidInputError(f"{len(pred)} predictions but {len(truth)} truths.")
    if len(pred) == 0:
        raise InvalidInputError("metrics need at least one point.")
    return pred, truth


def _moments(posteriors):
    if len(posteriors) == 0:
        raise InvalidInputError("metrics need at least one point.")
    means = np.array([p.mean for p in posteriors], dtype=float)
    variances = np.array([p.variance for p in posteriors], dtype=float)
    if np.any(variances <= 0):
        raise InvalidInputError("posterior variances must be positive.")
    return means, variances


def rmse(pred_means, truths):
    """Root mean squared error."""
    pred, truth = _pair(pred_means, truths)
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def crps_gaussian(posteriors, truths):
    """Mean CRPS of Gaussian predictive distributions, in closed form."""
    means, variances = _moments(posteriors)
    _, truth = _pair(means, truths)
    sigma = np.sqrt(variances)
    z = (truth - means) / sigma
    scores = sigma * (z * (2.0 * norm.cdf(z) - 1.0) + 2.0 * norm.pdf(z) - 1.0 / np.sqrt(np.pi))
    return float(np.mean(scores))


def mad(pred_means, truths):
    """Median absolute residual."""
    pred, truth = _pair(pred_means, truths)
    return float(np.median(np.abs(pred - truth)))


def mdv(posteriors):
    """Median of the posterior variances."""
    _, variances = _moments(posteriors)
    return float(np.median(variances))


def ci_sizes(posteriors, z=Z_95):
    """Per-point central interval widths 2 z sqrt(variance)."""
    if z <= 0:
        raise InvalidInputError(f"z must be positive, got {z}.")
    _, variances = _moments(posteriors)
    return 2.0 * z * np.sqrt(variances)


def ci_metrics(posteriors, truths, z=Z_95):
    """Median interval size and the fraction of truths inside mean +/- z sd."""
    sizes = ci_sizes(posteriors, z)
    means, variances = _moments(posteriors)
    _, truth = _pair(means, truths)
    inside = np.abs(truth - means) <= z * np.sqrt(variances)
    return float(np.median(sizes)), float(np.mean(inside))


def evaluate(posteriors, truths, z=Z_95):
    """Compute every statistic into an EvalReport."""
    means, _ = _moments(posteriors)
    median_ci_size, coverage = ci_metrics(posteriors, truths, z)
    return EvalReport(
        rmse=rmse(means, truths),
        crps=crps_gaussian(posteriors, truths),
        mad=mad(means, truths),
        mdv=mdv(posteriors),
        median_ci_size=median_ci_size,
        coverage=coverage,
    )
