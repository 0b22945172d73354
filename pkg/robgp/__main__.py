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
"""Robust nearest-neighbor Gaussian process CLI."""
import argparse
import sys
from pprint import pformat

from robgp import __version__
from robgp.config import build_experiment
from robgp.config import init_config
from robgp.errors import RobGPError
from robgp.report import MODE_REPORTS
from robgp.util import LOG
from robgp.util import set_log_level


def valid_factor(value):
    """Parse an outlier factor: a number or a LOW,HIGH range."""
    try:
        parts = [float(part) for part in value.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{value} is not a number or a LOW,HIGH range.")
    if len(parts) == 1:
        return parts[0]
    if len(parts) == 2:
        return parts
    raise argparse.ArgumentTypeError(f"{value} is not a number or a LOW,HIGH range.")


def add_common_parser_args(parser):
    """Add the flags every mode shares."""
    parser.add_argument(
        "-c",
        "--config",
        metavar="PATH",
        dest="config_file_name",
        required=False,
        help='YAML config file; "default" or "smoke" selects a bundled one.',
    )
    parser.add_argument("--seed", dest="seed", type=int, required=False, help="Top-level random seed.")
    parser.add_argument("--out", metavar="DIR", dest="out", required=False, help="Output directory.")


def add_train_parser_args(parser):
    """Add training flags."""
    parser.add_argument(
        "--loss", dest="loss", choices=["mse", "lool", "ph", "looph"], required=False, help="Training loss."
    )
    parser.add_argument("--delta", dest="delta", type=float, required=False, help="Pseudo-Huber boundary scale.")
    parser.add_argument(
        "--regime",
        dest="regime",
        choices=["regular", "hybrid", "downsample"],
        required=False,
        help="Training regime.",
    )
    parser.add_argument("--ell", dest="ell", type=float, required=False, help="Fixed length scale.")
    parser.add_argument("--k", dest="k", type=int, required=False, help="Nearest neighbors per point.")
    parser.add_argument("--batch", dest="batch", type=int, required=False, help="Training batch size.")
    parser.add_argument("--kstar", dest="k_star", type=int, required=False, help="Down-sampled neighbor count.")
    parser.add_argument("--iters", dest="iterations", type=int, required=False, help="Down-sampling iterations.")


def add_outlier_parser_args(parser):
    """Add outlier contamination flags."""
    parser.add_argument(
        "--outlier-frac", dest="outlier_frac", type=float, required=False, help="Fraction of training targets."
    )
    parser.add_argument(
        "--outlier-factor",
        metavar="X[,Y]",
        dest="outlier_factor",
        type=valid_factor,
        required=False,
        help="Multiplicative factor, or a LOW,HIGH range drawn uniformly.",
    )


def create_parser():
    """Create the parser for incoming data."""
    parser = argparse.ArgumentParser(prog="robgp")
    parser.add_argument("-l", "--log-level", action="count", default=0, help="increase logging verbosity (up to -lll)")
    parser.add_argument("-v", "--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command")

    simulate_parser = subparsers.add_parser("simulate", help="Run the seeded simulation study.")
    add_common_parser_args(simulate_parser)
    add_train_parser_args(simulate_parser)
    add_outlier_parser_args(simulate_parser)
    simulate_parser.add_argument("--grid", dest="grid", type=int, required=False, help="Points per grid dimension.")
    simulate_parser.add_argument("--nu", dest="nu", type=float, required=False, help="True smoothness.")
    simulate_parser.add_argument("--reps", dest="reps", type=int, required=False, help="Number of replications.")

    fit_parser = subparsers.add_parser("fit", help="Fit a model to a CSV file.")
    add_common_parser_args(fit_parser)
    add_train_parser_args(fit_parser)
    add_outlier_parser_args(fit_parser)
    fit_parser.add_argument("--data", metavar="CSV", dest="data", required=False, help="Input CSV file.")

    predict_parser = subparsers.add_parser("predict", help="Predict query points with a fitted model.")
    add_common_parser_args(predict_parser)
    predict_parser.add_argument("--model", metavar="PATH", dest="model", required=False, help="Fitted model file.")
    predict_parser.add_argument("--query", metavar="CSV", dest="query", required=False, help="Query CSV file.")

    eval_parser = subparsers.add_parser("eval", help="Evaluate a fitted model on labelled data.")
    add_common_parser_args(eval_parser)
    eval_parser.add_argument("--model", metavar="PATH", dest="model", required=False, help="Fitted model file.")
    eval_parser.add_argument(
        "--query", metavar="CSV", dest="query", required=False, help="Labelled CSV; defaults to the test split."
    )

    surface_parser = subparsers.add_parser("loss-surface", help="Tabulate a loss over residuals and variances.")
    add_common_parser_args(surface_parser)
    surface_parser.add_argument(
        "--loss", dest="loss", choices=["mse", "lool", "ph", "looph"], required=False, help="Loss to tabulate."
    )
    surface_parser.add_argument("--delta", dest="delta", type=float, required=False, help="Boundary scale.")

    return parser


def run(command, config):
    """Run robgp."""
    experiment = build_experiment(command, config)
    LOG.info(f"Running {command}; writing to {experiment.paths.out}")
    return MODE_REPORTS[command](experiment)


def main():
    """Run the robgp program."""
    parser = create_parser()
    args = parser.parse_args()
    if args.log_level:
        set_log_level(args.log_level)
    if not args.command:
        parser.error("one of simulate, fit, predict, eval or loss-surface must be specified")
    try:
        config = init_config(args)
        LOG.debug("Options are: %s", pformat(config.unwrap()))
        run(args.command, config)
    except RobGPError as err:
        LOG.error(f"{err.category}: {err}")
        sys.exit(err.exit_code)


if __name__ == "__main__":
    main()
