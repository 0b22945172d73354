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
"""Run each mode and write its report files."""
import csv
import os

import jinja2
import numpy as np
from robgp.errors import DataError
from robgp.ingest import load_csv
from robgp.ingest import minmax_scale
from robgp.ingest import MinMaxScaler
from robgp.ingest import write_csv
from robgp.kernel import MaternParams
from robgp.loss import LOSS_SURFACE_COLUMNS
from robgp.loss import loss_surface_grid
from robgp.loss import LossSpec
from robgp.metrics import evaluate
from robgp.metrics import METRIC_FIELDS
from robgp.metrics import Z_95
from robgp.simulate import inject_outliers
from robgp.simulate import run_sweep
from robgp.simulate import simulated_objective_curve
from robgp.simulate import split_train_test
from robgp.train import fit
from robgp.train import FittedModel
from robgp.train import OBJECTIVE_CURVE_COLUMNS
from robgp.train import predict_model
from robgp.train import Regime
from robgp.train import TrainConfig
from robgp.util import atomic_writer
from robgp.util import dicta
from robgp.util import dump_yaml
from robgp.util import load_yaml
from robgp.util import LOG

STATIC_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "static")
SUMMARY_TEMPLATE = "study_summary.txt.j2"

REPORT_COLUMNS = ["regime", "loss", "nu_hat", "sigma2_hat"] + METRIC_FIELDS
STUDY_COLUMNS = ["replicate", "true_nu"] + REPORT_COLUMNS + ["error"]
AGGREGATE_COLUMNS = ["true_nu", "regime", "loss", "n_ok", "nu_hat", "sigma2_hat"] + METRIC_FIELDS
DIAGNOSTIC_COLUMNS = ["replicate", "model", "x", "y", "truth", "mean", "variance", "residual", "ci_size", "excess"]
TARGET_SUMMARY_COLUMNS = ["replicate", "true_nu", "stage", "min", "q1", "median", "q3", "max", "mean"]
PREDICTION_COLUMNS = ["mean", "variance", "ci_low", "ci_high"]

MODEL_FILE = "model.yml"
TRAIN_FILE = "train.csv"
TEST_FILE = "test.csv"
MODEL_KEYS = ("regime", "loss", "delta", "k", "k_star", "iterations", "seed", "params", "features", "target")


def _write_csv(output_file, data, header):
    """Output csv file data."""
    LOG.info(f"Writing to {os.path.basename(output_file)}")
    with atomic_writer(output_file, newline="") as file:
        writer = csv.DictWriter(file, fieldnames=header, extrasaction="ignore")
        writer.writeheader()
        for row in data:
            writer.writerow(row)
    return output_file


def _out_path(experiment, name):
    return os.path.join(experiment.paths.out, name)


def write_effective_config(experiment):
    """Dump the configuration the run actually used."""
    return dump_yaml(experiment.raw.unwrap(), _out_path(experiment, "effective_config.yml"))


def render_summary(sim_summary, rows, n_reps):
    """Render the aggregate table as fixed-width text."""
    template_loader = jinja2.FileSystemLoader(searchpath=STATIC_DIR)
    template_env = jinja2.Environment(loader=template_loader, keep_trailing_newline=True)
    template = template_env.get_template(SUMMARY_TEMPLATE)
    return template.render(sim=sim_summary, rows=rows, n_reps=n_reps, columns=AGGREGATE_COLUMNS[4:])


def _target_summary_rows(results):
    rows = []
    for result in results:
        for stage, summary in result.target_summaries.items():
            row = {"replicate": result.replicate, "true_nu": result.config["true_nu"], "stage": stage}
            row.update(summary)
            rows.append(row)
    return rows


def simulate_create_report(experiment):
    """Run the simulation study and write its report files.

    Returns:
        (tuple): (list of ReplicationResult, aggregate rows)

    """
    LOG.info(
        f"Simulating {experiment.n_reps} replication(s) for true nu in {experiment.true_nus} "
        f"with {len(experiment.models)} model(s)."
    )
    results, rows = run_sweep(experiment.sim, experiment.models, experiment.n_reps, experiment.true_nus)
    records = [record for result in results for record in result.records()]
    _write_csv(_out_path(experiment, "metrics.csv"), records, STUDY_COLUMNS)
    _write_csv(_out_path(experiment, "aggregate.csv"), rows, AGGREGATE_COLUMNS)
    _write_csv(_out_path(experiment, "target_summary.csv"), _target_summary_rows(results), TARGET_SUMMARY_COLUMNS)
    if experiment.sim.diagnostics:
        diagnostics = [row for result in results for row in result.diagnostics]
        _write_csv(_out_path(experiment, "diagnostics.csv"), diagnostics, DIAGNOSTIC_COLUMNS)

    summary = render_summary(experiment.sim.summary(), rows, experiment.n_reps)
    with atomic_writer(_out_path(experiment, "summary.txt")) as summary_file:
        summary_file.write(summary)
    write_effective_config(experiment)
    return results, rows


def model_to_dict(model, config, features, target, scaler=None):
    """Plain mapping describing a fitted model, for model.yml."""
    return {
        "regime": model.regime.value,
        "loss": model.loss.label,
        "delta": model.loss.delta,
        "k": model.k,
        "k_star": model.k_star,
        "iterations": model.n_iterations,
        "nu_bounds": list(config.nu_bounds),
        "seed": config.seed,
        "params": model.params.as_dict(),
        "nu_estimates": [float(nu) for nu in model.nu_estimates],
        "features": list(features),
        "target": target,
        "scaler": scaler.as_dict() if scaler is not None else None,
        "train_file": TRAIN_FILE,
        "test_file": TEST_FILE,
        "trace": [[float(x), float(value)] for x, value in model.trace],
    }


def load_model_file(path):
    """Read model.yml back into a FittedModel and its TrainConfig.

    Returns:
        (dicta): model, config, scaler, features, target, train_path, test_path

    """
    if not os.path.isfile(path):
        raise DataError(f"model file {path} does not exist.")
    data = load_yaml(path)
    if not isinstance(data, dict):
        raise DataError(f"{path} is not a model file.")
    missing = [key for key in MODEL_KEYS if key not in data]
    if missing:
        raise DataError(f"{path} lacks {missing}.")
    params = MaternParams(**data["params"])
    loss = LossSpec(data["loss"], data["delta"])
    config = TrainConfig(
        loss=loss,
        k=int(data["k"]),
        nu_bounds=tuple(data.get("nu_bounds") or (params.nu, params.nu)),
        ell_fixed=params.ell,
        tau2=params.tau2,
        regime=data["regime"],
        n_iterations=int(data["iterations"]),
        k_star=int(data["k_star"]),
        seed=int(data["seed"]),
    )
    model = FittedModel(
        params=params,
        regime=Regime.parse(data["regime"]),
        loss=loss,
        k=int(data["k"]),
        k_star=int(data["k_star"]),
        n_iterations=int(data["iterations"]),
        trace=[tuple(entry) for entry in data.get("trace") or []],
        nu_estimates=list(data.get("nu_estimates") or []),
    )
    directory = os.path.dirname(os.path.abspath(path))
    return dicta(
        model=model,
        config=config,
        scaler=MinMaxScaler.from_dict(data["scaler"]) if data.get("scaler") else None,
        features=list(data["features"]),
        target=data["target"],
        train_path=os.path.join(directory, data.get("train_file", TRAIN_FILE)),
        test_path=os.path.join(directory, data.get("test_file", TEST_FILE)),
    )


def _scaled(dataset, scaler):
    return scaler.apply(dataset) if scaler is not None else dataset


def _model_record(model, report):
    record = {
        "regime": model.regime.value,
        "loss": model.loss.label,
        "nu_hat": model.params.nu,
        "sigma2_hat": model.params.sigma2,
    }
    record.update(report.to_record())
    return record


def _prediction_rows(dataset, posteriors, with_target=False, z=Z_95):
    rows = []
    for i, posterior in enumerate(posteriors):
        row = {name: float(value) for name, value in zip(dataset.columns, dataset.coords[i])}
        if with_target:
            row[dataset.target_name] = float(dataset.targets[i])
        half_width = z * np.sqrt(posterior.variance)
        row.update(
            {
                "mean": posterior.mean,
                "variance": posterior.variance,
                "ci_low": float(posterior.mean - half_width),
                "ci_high": float(posterior.mean + half_width),
            }
        )
        rows.append(row)
    return rows


def model_file_name(config, n_models=1):
    """model.yml for a single model, model_<regime>_<loss>.yml when several share a fit."""
    if n_models == 1:
        return MODEL_FILE
    return f"model_{config.regime.value}_{config.loss.label}.yml"


def fit_create_report(experiment):
    """Fit every configured model on a CSV file and write the model files, the splits and the test metrics.

    The rows are split once, training targets are contaminated with outliers
    when data.outlier_frac is set, and the features are min-max scaled with
    the training minima and maxima. Every model is trained on that shared
    split and gets its own model file and metrics row. The splits are written
    unscaled; the scaler stored in each model file maps them (and later
    queries) identically.

    Returns:
        (list): (FittedModel, EvalReport) per configured model

    """
    data_config = experiment.data
    dataset = load_csv(data_config.path, data_config.features, data_config.target)
    rng = np.random.default_rng(experiment.seed)
    train, test = split_train_test(dataset, float(data_config.train_frac), rng)
    train, outliers = inject_outliers(train, float(data_config.outlier_frac), data_config.outlier_factor, rng)
    if len(outliers):
        LOG.info(f"Injected {len(outliers)} outlier(s) into the training targets.")

    scaler = None
    scaled_train, scaled_test = train, test
    if data_config.scale:
        scaled_train, scaler = minmax_scale(train)
        scaled_test = scaler.apply(test)

    write_csv(_out_path(experiment, TRAIN_FILE), train)
    write_csv(_out_path(experiment, TEST_FILE), test)
    fitted = []
    for config in experiment.models:
        model = fit(scaled_train, config)
        posteriors = predict_model(model, scaled_test.coords, scaled_train, config)
        report = evaluate(posteriors, scaled_test.targets)
        dump_yaml(
            model_to_dict(model, config, data_config.features, data_config.target, scaler),
            _out_path(experiment, model_file_name(config, len(experiment.models))),
        )
        fitted.append((model, report))
    records = [_model_record(model, report) for model, report in fitted]
    _write_csv(_out_path(experiment, "metrics.csv"), records, REPORT_COLUMNS)
    write_effective_config(experiment)
    return fitted


def _load_training(meta):
    train = load_csv(meta.train_path, meta.features, meta.target)
    return _scaled(train, meta.scaler)


def predict_create_report(experiment):
    """Predict the query CSV with a fitted model and write predictions.csv."""
    meta = load_model_file(experiment.paths.model)
    train = _load_training(meta)
    queries = load_csv(experiment.paths.query, meta.features)
    posteriors = predict_model(meta.model, _scaled(queries, meta.scaler).coords, train, meta.config)
    header = list(meta.features) + PREDICTION_COLUMNS
    _write_csv(_out_path(experiment, "predictions.csv"), _prediction_rows(queries, posteriors), header)
    write_effective_config(experiment)
    return posteriors


def eval_create_report(experiment):
    """Evaluate a fitted model on labelled data and write predictions and metrics.

    The labelled data is paths.query when set, otherwise the test split
    written next to the model file.
    """
    meta = load_model_file(experiment.paths.model)
    train = _load_training(meta)
    data_path = experiment.paths.query or meta.test_path
    truth = load_csv(data_path, meta.features, meta.target)
    posteriors = predict_model(meta.model, _scaled(truth, meta.scaler).coords, train, meta.config)
    report = evaluate(posteriors, truth.targets)
    LOG.info(f"Evaluated {truth.n} point(s): rmse={report.rmse:.4g} coverage={report.coverage:.3f}")

    header = list(meta.features) + [meta.target] + PREDICTION_COLUMNS
    rows = _prediction_rows(truth, posteriors, with_target=True)
    _write_csv(_out_path(experiment, "predictions.csv"), rows, header)
    _write_csv(_out_path(experiment, "metrics.csv"), [_model_record(meta.model, report)], REPORT_COLUMNS)
    write_effective_config(experiment)
    return report


def loss_surface_create_report(experiment):
    """Tabulate the configured loss over residual and variance grids.

    When loss_surface.objective_nus is set, objective_curve.csv also holds
    the batch objective of every objective loss at each of those nu values,
    evaluated on the training batch of one simulated field.
    """
    spec = experiment.train.loss
    surface = experiment.loss_surface
    specs = [LossSpec(spec.kind, delta) for delta in surface.deltas] if spec.uses_delta else [spec]
    rows = []
    for loss_spec in specs:
        rows.extend(loss_surface_grid(loss_spec, surface.residuals, surface.variances))
    _write_csv(_out_path(experiment, "loss_surface.csv"), rows, LOSS_SURFACE_COLUMNS)
    if surface.objective_nus and experiment.objective_losses:
        curve = simulated_objective_curve(
            experiment.sim, experiment.train, [float(nu) for nu in surface.objective_nus], experiment.objective_losses
        )
        _write_csv(_out_path(experiment, "objective_curve.csv"), curve, OBJECTIVE_CURVE_COLUMNS)
    write_effective_config(experiment)
    return rows


MODE_REPORTS = {
    "simulate": simulate_create_report,
    "fit": fit_create_report,
    "predict": predict_create_report,
    "eval": eval_create_report,
    "loss-surface": loss_surface_create_report,
}
