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
"""Leave-one-out loss functions and loss-surface tables."""
import enum
import itertools
from dataclasses import dataclass

import numpy as np
from robgp.errors import InvalidInputError

DEFAULT_DELTA = 3.0
LOSS_SURFACE_COLUMNS = ["delta", "residual", "variance", "loss"]


class LossKind(enum.Enum):
    """Supported loss functions."""

    MSE = "mse"
    LOOL = "lool"
    PSEUDO_HUBER = "ph"
    LOOPH = "looph"

    @classmethod
    def parse(cls, value):
        """Look a kind up by its value or name, case-insensitively."""
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower()
        for kind in cls:
            if text in (kind.value, kind.name.lower(), kind.name.lower().replace("_", "-")):
                return kind
        raise InvalidInputError(f"Unknown loss {value!r}; choose one of {[k.value for k in cls]}.")


@dataclass(frozen=True)
class LossSpec:
    """A loss kind with its boundary scale delta."""

    kind: LossKind = LossKind.LOOL
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        """Validate delta where it matters."""
        object.__setattr__(self, "kind", LossKind.parse(self.kind))
        if self.uses_delta:
            if self.delta is None or not np.isfinite(self.delta) or self.delta <= 0:
                raise InvalidInputError(f"{self.kind.value} requires delta > 0, got {self.delta!r}.")
            object.__setattr__(self, "delta", float(self.delta))

    @property
    def uses_delta(self):
        """Whether delta enters the loss."""
        return self.kind in (LossKind.PSEUDO_HUBER, LossKind.LOOPH)

    @property
    def label(self):
        """Short name used in reports."""
        return self.kind.value


def _arrays(posteriors, targets, need_variance=True):
    means = np.array([p.mean for p in posteriors], dtype=float)
    variances = np.array([p.variance for p in posteriors], dtype=float)
    targets = np.asarray(targets, dtype=float).reshape(-1)
    if means.shape != targets.shape:
        raise InvalidInputError(f"{len(means)} posteriors but {len(targets)} targets.")
    if need_variance and np.any(variances <= 0):
        raise InvalidInputError("posterior variances must be positive.")
    return means, variances, targets


def _check_delta(delta):
    if delta is None or not np.isfinite(delta) or delta <= 0:
        raise InvalidInputError(f"delta must be positive, got {delta!r}.")


def _huber_core(squared_ratio):
    # sqrt(1 + u) - 1 rewritten as u / (sqrt(1 + u) + 1) to keep precision for small u
    return squared_ratio / (np.sqrt(1.0 + squared_ratio) + 1.0)


def lool_terms(residuals, variances):
    """Per-point leave-one-out likelihood terms."""
    return residuals ** 2 / variances + np.log(variances)


def pseudo_huber_terms(residuals, delta):
    """Per-point pseudo-Huber terms delta^2 (sqrt(1 + (r / delta)^2) - 1)."""
    return delta ** 2 * _huber_core((residuals / delta) ** 2)


def looph_terms(residuals, variances, delta):
    """Per-point LOOPH terms; delta counts posterior standard deviations."""
    return 2.0 * delta ** 2 * _huber_core(residuals ** 2 / (delta ** 2 * variances)) + np.log(variances)


def lool(posteriors, targets):
    """Leave-one-out likelihood loss, summed over points."""
    means, variances, targets = _arrays(posteriors, targets)
    return float(np.sum(lool_terms(means - targets, variances)))


def pseudo_huber(posteriors, targets, delta):
    """Pseudo-Huber loss on the residuals, summed over points."""
    _check_delta(delta)
    means, _, targets = _arrays(posteriors, targets, need_variance=False)
    return float(np.sum(pseudo_huber_terms(means - targets, delta)))


def looph(posteriors, targets, delta=DEFAULT_DELTA):
    """Leave-one-out pseudo-Huber loss, summed over points."""
    _check_delta(delta)
    means, variances, targets = _arrays(posteriors, targets)
    return float(np.sum(looph_terms(means - targets, variances, delta)))


def mse(posteriors, targets):
    """Mean squared error of the posterior means."""
    means, _, targets = _arrays(posteriors, targets, need_variance=False)
    if len(means) == 0:
        raise InvalidInputError("mse of an empty batch is undefined.")
    return float(np.mean((means - targets) ** 2))


def evaluate_loss(spec, posteriors, targets):
    """Evaluate the loss selected by spec."""
    if spec.kind is LossKind.MSE:
        return mse(posteriors, targets)
    if spec.kind is LossKind.LOOL:
        return lool(posteriors, targets)
    if spec.kind is LossKind.PSEUDO_HUBER:
        return pseudo_huber(posteriors, targets, spec.delta)
    return looph(posteriors, targets, spec.delta)


def point_loss(spec, residual, variance):
    """Single-point (b=1) loss at a residual and posterior variance."""
    residual = np.asarray(residual, dtype=float)
    variance = np.asarray(variance, dtype=float)
    if spec.kind is not LossKind.PSEUDO_HUBER and spec.kind is not LossKind.MSE and np.any(variance <= 0):
        raise InvalidInputError("posterior variances must be positive.")
    if spec.kind is LossKind.MSE:
        return residual ** 2
    if spec.kind is LossKind.LOOL:
        return lool_terms(residual, variance)
    if spec.kind is LossKind.PSEUDO_HUBER:
        return pseudo_huber_terms(residual, spec.delta)
    return looph_terms(residual, variance, spec.delta)


def loss_surface_grid(spec, residual_grid, variance_grid):
    """Per-point loss over the residual x variance grid.

    Args:
        spec (LossSpec): loss to tabulate
        residual_grid (list): residual values
        variance_grid (list): positive posterior variances
    Returns:
        (list): dict rows with keys delta, residual, variance, loss

    """
    residual_grid = list(residual_grid)
    variance_grid = list(variance_grid)
    if not residual_grid or not variance_grid:
        raise InvalidInputError("loss surface grids must be nonempty.")
    if any(v <= 0 for v in variance_grid):
        raise InvalidInputError("loss surface variances must be positive.")
    delta = spec.delta if spec.uses_delta else ""
    rows = []
    for residual, variance in itertools.product(residual_grid, variance_grid):
        value = float(point_loss(spec, residual, variance))
        rows.append({"delta": delta, "residual": float(residual), "variance": float(variance), "loss": value})
    return rows
