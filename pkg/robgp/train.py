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
"""Hyperparameter training: Regular Sampling, Hybrid and Down-Sampling regimes."""
import dataclasses
import enum
from dataclasses import dataclass
from dataclasses import field

import numpy as np
from robgp.errors import ConfigError
from robgp.errors import InvalidInputError
from robgp.gp_core import conditional_moments
from robgp.gp_core import DistanceTable
from robgp.gp_core import find_neighbors
from robgp.gp_core import neighborhood_distances
from robgp.gp_core import PosteriorSummary
from robgp.gp_core import sigma2_downsample_median
from robgp.gp_core import sigma2_mean_estimate
from robgp.gp_core import VARIANCE_FLOOR
from robgp.kernel import MaternParams
from robgp.loss import evaluate_loss
from robgp.loss import LossSpec
from robgp.neighbors import build_index
from robgp.neighbors import DEFAULT_BATCH
from robgp.neighbors import DEFAULT_K
from robgp.neighbors import default_k_star
from robgp.neighbors import downsample_batch
from robgp.neighbors import downsample_neighbors
from robgp.neighbors import make_batch
from robgp.neighbors import sample_batch
from robgp.optimize import grid_golden_minimize
from robgp.optimize import Trace
from robgp.util import LOG

DEFAULT_NU_BOUNDS = (0.05, 3.0)
DEFAULT_ITERATIONS = 11
DEFAULT_TAU2 = 1e-7
NU_TOLERANCE = 1e-3
OBJECTIVE_CURVE_COLUMNS = ["loss", "delta", "nu", "objective"]


class Regime(enum.Enum):
    """Training regimes."""

    REGULAR = "regular"
    HYBRID = "hybrid"
    DOWNSAMPLE = "downsample"

    @classmethod
    def parse(cls, value):
        """Look a regime up by its value or name, case-insensitively."""
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower()
        for regime in cls:
            if text in (regime.value, regime.name.lower()):
                return regime
        raise InvalidInputError(f"Unknown regime {value!r}; choose one of {[r.value for r in cls]}.")


@dataclass(frozen=True)
class TrainConfig:
    """Everything a training run needs besides the data."""

    loss: LossSpec = field(default_factory=LossSpec)
    k: int = DEFAULT_K
    b: int = DEFAULT_BATCH
    nu_bounds: tuple = DEFAULT_NU_BOUNDS
    ell_fixed: float = None
    tau2: float = DEFAULT_TAU2
    regime: Regime = Regime.REGULAR
    n_iterations: int = DEFAULT_ITERATIONS
    k_star: int = None
    seed: int = 0

    def __post_init__(self):
        """Normalize enums and validate ranges."""
        object.__setattr__(self, "regime", Regime.parse(self.regime))
        low, high = (float(v) for v in self.nu_bounds)
        object.__setattr__(self, "nu_bounds", (low, high))
        if not (0 < low <= high):
            raise ConfigError(f"nu bounds must satisfy 0 < low <= high, got [{low}, {high}].")
        if self.k < 1:
            raise ConfigError(f"k must be at least 1, got {self.k}.")
        if self.b < 1:
            raise ConfigError(f"batch size must be at least 1, got {self.b}.")
        if self.n_iterations < 1:
            raise ConfigError(f"iterations must be at least 1, got {self.n_iterations}.")
        if self.k_star is None:
            object.__setattr__(self, "k_star", default_k_star(self.k))
        if not (1 <= self.k_star <= self.k):
            raise ConfigError(f"k_star must lie in [1, k={self.k}], got {self.k_star}.")
        if self.tau2 < 0:
            raise ConfigError(f"tau2 must be non-negative, got {self.tau2}.")
        if self.ell_fixed is not None and self.ell_fixed <= 0:
            raise ConfigError(f"ell must be positive, got {self.ell_fixed}.")

    def replace(self, **changes):
        """Return a copy with the given fields changed."""
        return dataclasses.replace(self, **changes)

    def unit_params(self, nu):
        """Kernel parameters used during training (sigma2 = 1)."""
        if self.ell_fixed is None:
            raise ConfigError("a fixed length scale (ell) is required for training.")
        return MaternParams(sigma2=1.0, nu=nu, ell=self.ell_fixed, tau2=self.tau2)


@dataclass
class FittedModel:
    """A trained model: fitted parameters plus how they were obtained."""

    params: MaternParams
    regime: Regime
    loss: LossSpec
    k: int
    k_star: int
    n_iterations: int
    trace: list = field(default_factory=list)
    nu_estimates: list = field(default_factory=list)

    def predict(self, queries, data, index=None):
        """Posteriors for query points using the full neighbor sets.

        Posteriors are computed at sigma2 = 1 and the variances are then
        scaled by the fitted sigma2, so tau2 acts relative to sigma2.
        """
        points, neighbor_sets = find_neighbors(queries, data, _effective_k(self.k, data.n, loo=False), index=index)
        return _scaled_posteriors(points, neighbor_sets, data, self.params)


def _effective_k(k, n, loo=True):
    available = n - 1 if loo else n
    if k > available:
        LOG.warning(f"k={k} exceeds the {available} available neighbors; using k={available}.")
        return available
    return k


def _scaled_posteriors(points, neighbor_sets, data, params):
    nn_indices = np.vstack([ns.indices for ns in neighbor_sets])
    cross, pair = neighborhood_distances(points, nn_indices, data.coords)
    means, variances = conditional_moments(
        cross, pair, data.targets[nn_indices], params.replace(sigma2=1.0), [ns.query_index for ns in neighbor_sets]
    )
    variances = np.maximum(variances * params.sigma2, VARIANCE_FLOOR)
    return [PosteriorSummary(float(mu), float(var)) for mu, var in zip(means, variances)]


class _BatchObjective:
    """Objective over nu with the batch geometry computed once."""

    def __init__(self, batch, data, config):
        self.config = config
        self.nn_indices = batch.index_matrix()
        self.targets = data.targets[batch.element_indices]
        self.nn_targets = data.targets[self.nn_indices]
        self.labels = list(batch.element_indices)
        cross, pair = neighborhood_distances(data.coords[batch.element_indices], self.nn_indices, data.coords)
        self.cross = DistanceTable(cross)
        self.pair = DistanceTable(pair)

    def posteriors(self, nu):
        """Leave-one-out posteriors of the batch at (sigma2=1, nu, ell, tau2)."""
        means, variances = conditional_moments(
            self.cross, self.pair, self.nn_targets, self.config.unit_params(nu), self.labels
        )
        return [PosteriorSummary(float(mu), float(var)) for mu, var in zip(means, variances)]

    def __call__(self, nu):
        return evaluate_loss(self.config.loss, self.posteriors(nu), self.targets)


def objective(nu, batch, data, config):
    """Configured loss of the leave-one-out batch posteriors at (sigma2=1, nu, ell, tau2)."""
    return _BatchObjective(batch, data, config)(nu)


def objective_curve(batch, data, config, nus, losses):
    """Objective value of every loss at every nu over one batch.

    The posteriors are computed once per nu and shared by the losses.

    Args:
        batch (Batch): leave-one-out batch
        data (SpatialDataset): training data
        config (TrainConfig): supplies ell and tau2
        nus (list): smoothness values, each > 0
        losses (list): LossSpec per curve
    Returns:
        (list): dicts with loss, delta, nu and objective, grouped by loss

    """
    if not nus or not losses:
        raise InvalidInputError("an objective curve needs at least one nu and one loss.")
    batch_objective = _BatchObjective(batch, data, config)
    rows = {spec: [] for spec in losses}
    for nu in nus:
        posteriors = batch_objective.posteriors(float(nu))
        for spec in losses:
            value = evaluate_loss(spec, posteriors, batch_objective.targets)
            delta = spec.delta if spec.uses_delta else ""
            rows[spec].append({"loss": spec.label, "delta": delta, "nu": float(nu), "objective": value})
    return [row for spec in losses for row in rows[spec]]


def optimize_nu(batch, data, config, objective_fn=None, trace=None):
    """Minimize the batch objective over nu within config.nu_bounds.

    Args:
        batch (Batch): leave-one-out batch
        data (SpatialDataset): training data
        config (TrainConfig): training configuration
        objective_fn (callable): replacement objective of nu alone
        trace (Trace): optional evaluation log
    Returns:
        (float): the fitted nu

    """
    f = objective_fn if objective_fn is not None else _BatchObjective(batch, data, config)
    low, high = config.nu_bounds
    return grid_golden_minimize(f, low, high, tol=NU_TOLERANCE, trace=trace)


def _seed_streams(seed):
    """Independent streams for batch sampling, sigma2, training down-samples and prediction down-samples."""
    batch_seq, sigma_seq, iter_seq, predict_seq = np.random.SeedSequence(seed).spawn(4)
    return np.random.default_rng(batch_seq), np.random.default_rng(sigma_seq), iter_seq, predict_seq


def _sample_training_batch(data, config, rng):
    k = _effective_k(config.k, data.n)
    if k < 1:
        raise InvalidInputError("training needs at least two data points.")
    b = min(config.b, data.n)
    if b < config.b:
        LOG.warning(f"batch size {config.b} exceeds n_train={data.n}; using b={b}.")
    index = build_index(data.coords)
    elements = sample_batch(data.n, b, rng)
    return make_batch(index, elements, k), k


def training_batch(data, config):
    """The leave-one-out batch regular training draws for this data and seed."""
    batch_rng, _, _, _ = _seed_streams(config.seed)
    batch, _ = _sample_training_batch(data, config, batch_rng)
    return batch


def _finish(data, config, nu, sigma2, trace, nu_estimates, k, k_star):
    if sigma2 <= VARIANCE_FLOOR:
        LOG.warning(f"sigma2 estimate {sigma2:.3g} clamped to {VARIANCE_FLOOR}.")
        sigma2 = VARIANCE_FLOOR
    params = MaternParams(sigma2=sigma2, nu=nu, ell=config.ell_fixed, tau2=config.tau2)
    LOG.info(f"Fitted {config.regime.value}/{config.loss.label}: nu={nu:.4f} sigma2={sigma2:.6g}")
    return FittedModel(
        params=params,
        regime=config.regime,
        loss=config.loss,
        k=k,
        k_star=k_star,
        n_iterations=config.n_iterations,
        trace=list(trace),
        nu_estimates=list(nu_estimates),
    )


def _k_star(config, k):
    return min(config.k_star, k)


def train_regular(data, config):
    """Regular Sampling: one batch, nu on full neighbor sets, mean sigma2."""
    batch_rng, _, _, _ = _seed_streams(config.seed)
    batch, k = _sample_training_batch(data, config, batch_rng)
    trace = Trace()
    nu = optimize_nu(batch, data, config, trace=trace)
    sigma2 = sigma2_mean_estimate(batch, data, config.unit_params(nu))
    return _finish(data, config, nu, sigma2, trace, [nu], k, k)


def train_hybrid(data, config):
    """Hybrid: nu on full neighbor sets, sigma2 from the down-sampled median."""
    batch_rng, sigma_rng, _, _ = _seed_streams(config.seed)
    batch, k = _sample_training_batch(data, config, batch_rng)
    k_star = _k_star(config, k)
    trace = Trace()
    nu = optimize_nu(batch, data, config, trace=trace)
    sigma2 = sigma2_downsample_median(batch, data, config.unit_params(nu), k_star, sigma_rng)
    return _finish(data, config, nu, sigma2, trace, [nu], k, k_star)


def train_downsample(data, config):
    """Down-Sampling: median nu over repeated neighbor down-samples, median sigma2."""
    batch_rng, sigma_rng, iter_seq, _ = _seed_streams(config.seed)
    batch, k = _sample_training_batch(data, config, batch_rng)
    k_star = _k_star(config, k)
    trace = Trace()
    nu_estimates = []
    for iteration, child in enumerate(iter_seq.spawn(config.n_iterations)):
        reduced = downsample_batch(batch, k_star, np.random.default_rng(child))
        nu_estimates.append(optimize_nu(reduced, data, config, trace=trace))
        LOG.debug(f"down-sampling iteration {iteration}: nu={nu_estimates[-1]:.4f}")
    nu = float(np.median(nu_estimates))
    sigma2 = sigma2_downsample_median(batch, data, config.unit_params(nu), k_star, sigma_rng)
    return _finish(data, config, nu, sigma2, trace, nu_estimates, k, k_star)


TRAINERS = {
    Regime.REGULAR: train_regular,
    Regime.HYBRID: train_hybrid,
    Regime.DOWNSAMPLE: train_downsample,
}


def fit(data, config):
    """Train with the regime named in config."""
    return TRAINERS[config.regime](data, config)


def predict_downsample_median(model, queries, data, config, index=None):
    """Per-query medians of posteriors over repeated neighbor down-samples.

    Every repetition keeps k_star random neighbors per query; the median of
    the means and the median of the variances are returned for each query.
    """
    k = _effective_k(model.k, data.n, loo=False)
    k_star = min(config.k_star, k)
    points, neighbor_sets = find_neighbors(queries, data, k, index=index)
    if not neighbor_sets:
        return []
    _, _, _, predict_seq = _seed_streams(config.seed)
    means = []
    variances = []
    for child in predict_seq.spawn(config.n_iterations):
        rng = np.random.default_rng(child)
        reduced = [downsample_neighbors(ns, k_star, rng) for ns in neighbor_sets]
        posteriors = _scaled_posteriors(points, reduced, data, model.params)
        means.append([p.mean for p in posteriors])
        variances.append([p.variance for p in posteriors])
    median_means = np.median(np.array(means), axis=0)
    median_vars = np.median(np.array(variances), axis=0)
    return [PosteriorSummary(float(mu), float(var)) for mu, var in zip(median_means, median_vars)]


def predict_model(model, queries, data, config, index=None):
    """Predict with the procedure matching the model's regime."""
    if model.regime is Regime.DOWNSAMPLE:
        return predict_downsample_median(model, queries, data, config, index=index)
    return model.predict(queries, data, index=index)
