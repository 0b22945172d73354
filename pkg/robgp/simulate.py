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
"""Simulation study: grid sampling, splitting, outlier injection and replication."""
import dataclasses
import math
from dataclasses import dataclass
from dataclasses import field

import numpy as np
from robgp.errors import InvalidInputError
from robgp.errors import RobGPError
from robgp.generators import GridGPGenerator
from robgp.kernel import MaternParams
from robgp.metrics import ci_sizes
from robgp.metrics import evaluate
from robgp.metrics import METRIC_FIELDS
from robgp.train import fit
from robgp.train import objective_curve
from robgp.train import predict_model
from robgp.train import training_batch
from robgp.util import LOG

DEFAULT_GRID = 40
DEFAULT_NOISE_VAR = 1e-7
DEFAULT_STABILITY_NUGGET = 1e-14
DEFAULT_TRAIN_FRAC = 0.9
DEFAULT_OUTLIER_FACTOR = 2.0


@dataclass(frozen=True)
class SimConfig:
    """Settings of one simulated experiment."""

    n_per_dim: int = DEFAULT_GRID
    true_params: MaternParams = field(default_factory=lambda: MaternParams(sigma2=1.0, nu=0.5, ell=1.0))
    noise_var: float = DEFAULT_NOISE_VAR
    stability_nugget: float = DEFAULT_STABILITY_NUGGET
    train_frac: float = DEFAULT_TRAIN_FRAC
    outlier_frac: float = 0.0
    outlier_factor: float = DEFAULT_OUTLIER_FACTOR
    seed: int = 0
    diagnostics: bool = False

    def __post_init__(self):
        """Validate the simulation settings."""
        if self.n_per_dim < 2:
            raise InvalidInputError(f"n_per_dim must be at least 2, got {self.n_per_dim}.")
        if not 0.0 < self.train_frac < 1.0:
            raise InvalidInputError(f"train_frac must lie in (0, 1), got {self.train_frac}.")
        if not 0.0 <= self.outlier_frac < 1.0:
            raise InvalidInputError(f"outlier_frac must lie in [0, 1), got {self.outlier_frac}.")
        if self.noise_var < 0 or self.stability_nugget < 0:
            raise InvalidInputError("noise variances must be non-negative.")

    def replace(self, **changes):
        """Return a copy with the given fields changed."""
        return dataclasses.replace(self, **changes)

    def summary(self):
        """Flat description used in reports."""
        return {
            "n_per_dim": self.n_per_dim,
            "true_nu": self.true_params.nu,
            "true_ell": self.true_params.ell,
            "true_sigma2": self.true_params.sigma2,
            "noise_var": self.noise_var,
            "outlier_frac": self.outlier_frac,
            "outlier_factor": self.outlier_factor,
            "seed": self.seed,
        }


@dataclass
class ModelOutcome:
    """Result of fitting and evaluating one (regime, loss) combination."""

    regime: str
    loss: str
    nu_hat: float = None
    sigma2_hat: float = None
    report: object = None
    error: str = None

    @property
    def ok(self):
        """Whether the model was fitted and evaluated."""
        return self.report is not None

    def to_record(self):
        """Flat key-value record in report column order."""
        record = {"regime": self.regime, "loss": self.loss, "nu_hat": self.nu_hat, "sigma2_hat": self.sigma2_hat}
        metrics = self.report.to_record() if self.report is not None else dict.fromkeys(METRIC_FIELDS)
        record.update(metrics)
        record["error"] = self.error or ""
        return record


@dataclass
class ReplicationResult:
    """One full pipeline pass of the simulation study."""

    replicate: int
    config: dict
    outcomes: dict = field(default_factory=dict)
    outlier_indices: list = field(default_factory=list)
    target_summaries: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)

    def records(self):
        """One flat record per model, prefixed with replicate and true nu."""
        rows = []
        for outcome in self.outcomes.values():
            row = {"replicate": self.replicate, "true_nu": self.config["true_nu"]}
            row.update(outcome.to_record())
            rows.append(row)
        return rows


def split_train_test(dataset, train_frac, rng):
    """Uniform random partition into floor(train_frac * n) training rows and the rest."""
    if not 0.0 < train_frac < 1.0:
        raise InvalidInputError(f"train_frac must lie in (0, 1), got {train_frac}.")
    n_train = int(math.floor(train_frac * dataset.n))
    if n_train == 0 or n_train == dataset.n:
        raise InvalidInputError(f"a {train_frac} split of {dataset.n} rows leaves an empty part.")
    order = rng.permutation(dataset.n)
    return dataset.subset(order[:n_train]), dataset.subset(order[n_train:])


def inject_outliers(train, frac, factor, rng):
    """Multiply the targets of floor(frac * n) random rows by factor.

    factor may be a number or a (low, high) range, in which case each
    selected row draws its own factor uniformly from the range. The input
    dataset is left untouched.
    """
    if not 0.0 <= frac < 1.0:
        raise InvalidInputError(f"outlier fraction must lie in [0, 1), got {frac}.")
    count = int(math.floor(frac * train.n))
    if count == 0:
        return train, np.empty(0, dtype=np.intp)
    indices = np.sort(rng.choice(train.n, size=count, replace=False))
    if isinstance(factor, (tuple, list)):
        low, high = (float(v) for v in factor)
        if low > high:
            raise InvalidInputError(f"outlier factor range [{low}, {high}] is empty.")
        factors = rng.uniform(low, high, size=count)
    else:
        factors = float(factor)
    targets = np.array(train.targets)
    targets[indices] = targets[indices] * factors
    return train.with_targets(targets), indices


def target_summary(dataset):
    """Five-number summary and mean of the targets (box-plot data)."""
    q = np.percentile(dataset.targets, [0, 25, 50, 75, 100])
    return {
        "min": float(q[0]),
        "q1": float(q[1]),
        "median": float(q[2]),
        "q3": float(q[3]),
        "max": float(q[4]),
        "mean": float(np.mean(dataset.targets)),
    }


def _diagnostic_rows(label, test, posteriors):
    sizes = ci_sizes(posteriors)
    rows = []
    for i, posterior in enumerate(posteriors):
        residual = posterior.mean - test.targets[i]
        row = {"model": label}
        row.update({name: float(value) for name, value in zip(test.columns or ("x", "y"), test.coords[i])})
        row.update(
            {
                "truth": float(test.targets[i]),
                "mean": posterior.mean,
                "variance": posterior.variance,
                "residual": float(residual),
                "ci_size": float(sizes[i]),
                "excess": float(abs(residual) - sizes[i] / 2.0),
            }
        )
        rows.append(row)
    return rows


def fit_and_evaluate(train, test, train_config):
    """Fit one configuration and evaluate it on the test split.

    Returns the ModelOutcome and the test posteriors (None on failure).
    """
    outcome = ModelOutcome(train_config.regime.value, train_config.loss.label)
    try:
        model = fit(train, train_config)
        posteriors = predict_model(model, test.coords, train, train_config)
        outcome.nu_hat = model.params.nu
        outcome.sigma2_hat = model.params.sigma2
        outcome.report = evaluate(posteriors, test.targets)
    except RobGPError as err:
        LOG.warning(f"{outcome.regime}/{outcome.loss} failed: {err}")
        outcome.error = f"{err.category}: {err}"
        return outcome, None
    return outcome, posteriors


def simulate_split(sim):
    """Sample the lattice field of sim, split it and contaminate the training part.

    Returns:
        (tuple): (train, test, outlier indices, clean training SpatialDataset)

    """
    rng = np.random.default_rng(sim.seed)
    generator = GridGPGenerator(sim.n_per_dim, sim.true_params, sim.noise_var, sim.stability_nugget, rng=rng)
    dataset = generator.generate_data()
    clean, test = split_train_test(dataset, sim.train_frac, rng)
    train, outliers = inject_outliers(clean, sim.outlier_frac, sim.outlier_factor, rng)
    return train, test, outliers, clean


def _study_config(train_config, sim):
    config = train_config.replace(seed=sim.seed)
    if config.ell_fixed is None:
        config = config.replace(ell_fixed=sim.true_params.ell)
    return config


def run_replication(sim, train_configs, replicate=0):
    """One pass: grid, GP sample, split, outliers, fit every configuration, evaluate.

    Training configurations inherit the replication seed so that every
    random choice flows from sim.seed.
    """
    train, test, outliers, clean = simulate_split(sim)
    result = ReplicationResult(replicate=replicate, config=sim.summary())
    result.target_summaries["clean"] = target_summary(clean)
    result.outlier_indices = [int(i) for i in outliers]
    result.target_summaries["training"] = target_summary(train)

    for train_config in train_configs:
        config = _study_config(train_config, sim)
        key = (config.regime.value, config.loss.label)
        if key in result.outcomes:
            raise InvalidInputError(f"{key[0]}/{key[1]} is configured more than once.")
        outcome, posteriors = fit_and_evaluate(train, test, config)
        result.outcomes[key] = outcome
        if sim.diagnostics and posteriors is not None:
            label = f"{outcome.regime}/{outcome.loss}"
            for row in _diagnostic_rows(label, test, posteriors):
                row["replicate"] = replicate
                result.diagnostics.append(row)
    return result


def simulated_objective_curve(sim, train_config, nus, losses):
    """Objective-vs-nu rows of each loss over the batch regular training would draw from a simulated field."""
    train, _, outliers, _ = simulate_split(sim)
    config = _study_config(train_config, sim)
    LOG.info(
        f"Objective curve over {len(nus)} nu value(s) on a {sim.n_per_dim}x{sim.n_per_dim} field "
        f"with {len(outliers)} outlier(s)."
    )
    return objective_curve(training_batch(train, config), train, config, nus, losses)


def aggregate(results):
    """Per-(true nu, regime, loss) means of the estimates and metrics over successful replications."""
    groups = {}
    for result in results:
        for key, outcome in result.outcomes.items():
            group = groups.setdefault((result.config["true_nu"],) + key, [])
            if outcome.ok:
                group.append(outcome)
    rows = []
    for (true_nu, regime, loss), outcomes in groups.items():
        row = {"true_nu": true_nu, "regime": regime, "loss": loss, "n_ok": len(outcomes)}
        records = [o.to_record() for o in outcomes]
        for column in ["nu_hat", "sigma2_hat"] + METRIC_FIELDS:
            values = [record[column] for record in records]
            row[column] = float(np.mean(values)) if values else None
        rows.append(row)
    return rows


def run_study(sim, train_configs, n_reps):
    """n_reps seeded replications (seed_i = sim.seed + i) and their aggregate table."""
    if n_reps < 1:
        raise InvalidInputError(f"n_reps must be at least 1, got {n_reps}.")
    results = []
    for replicate in range(n_reps):
        LOG.info(f"Replication {replicate + 1}/{n_reps}")
        results.append(run_replication(sim.replace(seed=sim.seed + replicate), train_configs, replicate))
    return results, aggregate(results)


def run_sweep(sim, train_configs, n_reps, true_nus):
    """Run the study once per true smoothness value."""
    results = []
    for nu in true_nus:
        study_sim = sim.replace(true_params=sim.true_params.replace(nu=nu))
        nu_results, _ = run_study(study_sim, train_configs, n_reps)
        results.extend(nu_results)
    return results, aggregate(results)
