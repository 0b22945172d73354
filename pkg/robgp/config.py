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
"""Experiment configuration: bundled defaults, YAML files and CLI overrides."""
import copy
import os
from collections import abc
from dataclasses import dataclass
from dataclasses import field

from robgp.errors import ConfigError
from robgp.errors import InvalidInputError
from robgp.kernel import MaternParams
from robgp.loss import LossSpec
from robgp.simulate import SimConfig
from robgp.train import TrainConfig
from robgp.util import deepupdate
from robgp.util import dicta
from robgp.util import load_yaml

FILE_DIR = os.path.dirname(os.path.abspath(__file__))
STATIC_DIR = os.path.join(FILE_DIR, "static")
DEFAULT_CONFIG = os.path.join(STATIC_DIR, "default_config.yml")
BUNDLED_CONFIGS = {"default": DEFAULT_CONFIG, "smoke": os.path.join(STATIC_DIR, "smoke_config.yml")}
MODES = ("simulate", "fit", "predict", "eval", "loss-surface")

# (section, key) pairs each CLI flag overrides
ARG_OVERRIDES = {
    "seed": [(None, "seed")],
    "out": [("paths", "out")],
    "grid": [("sim", "n_per_dim")],
    "nu": [("sim", "nu")],
    "ell": [("sim", "ell"), ("train", "ell")],
    "loss": [("train", "loss")],
    "delta": [("train", "delta")],
    "regime": [("train", "regime")],
    "k": [("train", "k")],
    "batch": [("train", "batch")],
    "k_star": [("train", "k_star")],
    "iterations": [("train", "iterations")],
    "outlier_frac": [("sim", "outlier_frac"), ("data", "outlier_frac")],
    "outlier_factor": [("sim", "outlier_factor"), ("data", "outlier_factor")],
    "reps": [("sim", "n_reps")],
    "data": [("data", "path")],
    "model": [("paths", "model")],
    "query": [("paths", "query")],
}
MODEL_KEYS = {"regime", "loss", "delta"}


@dataclass
class ExperimentConfig:
    """Typed view of the effective configuration of one run."""

    mode: str
    seed: int
    paths: dicta
    train: TrainConfig
    models: list
    data: dicta
    loss_surface: dicta
    sim: SimConfig = None
    true_nus: list = field(default_factory=list)
    n_reps: int = 1
    objective_losses: list = field(default_factory=list)
    raw: dicta = None


def default_config():
    """The bundled defaults as a dicta."""
    return dicta.wrap(load_yaml(DEFAULT_CONFIG))


def resolve_config_path(name):
    """Map bundled config names to files; check other paths exist."""
    if name in BUNDLED_CONFIGS:
        return BUNDLED_CONFIGS[name]
    if not os.path.exists(name):
        raise ConfigError(f'Cannot find file "{name}"')
    return name


def validate_config(config, reference=None, prefix=""):
    """Reject keys that do not exist in the bundled defaults."""
    reference = default_config() if reference is None else reference
    if not isinstance(config, abc.Mapping):
        raise ConfigError(f"configuration section {prefix or '<root>'} must be a mapping.")
    for key, value in config.items():
        name = f"{prefix}{key}"
        if key not in reference:
            raise ConfigError(f"unknown configuration key {name!r}.")
        if key == "models":
            for entry in value or []:
                if not isinstance(entry, abc.Mapping) or set(entry) - MODEL_KEYS:
                    raise ConfigError(f"models entries take only {sorted(MODEL_KEYS)}, got {entry!r}.")
        elif isinstance(reference[key], abc.Mapping):
            validate_config(value or {}, reference[key], prefix=f"{name}.")
    return True


def init_config(args):
    """
    Build the effective configuration dict.

    Params:
        args : Namespace - Command line arguments
    Returns:
        dicta - defaults, updated by the config file, updated by CLI flags
    """
    config = default_config()
    config_name = getattr(args, "config_file_name", None)
    if config_name:
        settings = load_yaml(resolve_config_path(config_name)) or {}
        validate_config(settings)
        config = dicta.wrap(deepupdate(config.unwrap(), copy.deepcopy(settings)))

    for dest, targets in ARG_OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        for section, key in targets:
            if section is None:
                config[key] = value
            else:
                config[section][key] = value
    if getattr(args, "delta", None) is not None:
        config.loss_surface.deltas = [args.delta]
    if getattr(args, "regime", None) is not None or getattr(args, "loss", None) is not None:
        config.models = []
    return config


def _loss_spec(loss, delta):
    try:
        return LossSpec(loss, delta)
    except InvalidInputError as err:
        raise ConfigError(str(err)) from err


def build_train_config(section, seed, ell_fallback=None):
    """TrainConfig from the train section."""
    try:
        return TrainConfig(
            loss=_loss_spec(section.loss, section.delta),
            k=int(section.k),
            b=int(section.batch),
            nu_bounds=(float(section.nu_low), float(section.nu_high)),
            ell_fixed=float(section.ell) if section.ell is not None else ell_fallback,
            tau2=float(section.tau2),
            regime=section.regime,
            n_iterations=int(section.iterations),
            k_star=int(section.k_star) if section.k_star is not None else None,
            seed=int(seed),
        )
    except InvalidInputError as err:
        raise ConfigError(str(err)) from err


def build_model_configs(config, train):
    """One TrainConfig per models entry, or the train config alone.

    Every (regime, loss) pair may appear once; reports are keyed by it.
    """
    if not config.models:
        return [train]
    models = []
    seen = set()
    for entry in config.models:
        loss = _loss_spec(entry.get("loss", train.loss.kind), entry.get("delta", config.train.delta))
        try:
            model = train.replace(regime=entry.get("regime", train.regime), loss=loss)
        except InvalidInputError as err:
            raise ConfigError(str(err)) from err
        key = (model.regime.value, model.loss.label)
        if key in seen:
            raise ConfigError(f"models lists {key[0]}/{key[1]} more than once.")
        seen.add(key)
        models.append(model)
    return models


def build_objective_losses(section, delta):
    """LossSpec per loss_surface.objective_losses entry, at train.delta."""
    return [_loss_spec(loss, delta) for loss in section.objective_losses or []]


def _true_nus(value):
    values = value if isinstance(value, list) else [value]
    if not values:
        raise ConfigError("sim.nu needs at least one value.")
    return [float(v) for v in values]


def build_sim_config(section, seed, nu):
    """SimConfig from the sim section at one true smoothness."""
    try:
        return SimConfig(
            n_per_dim=int(section.n_per_dim),
            true_params=MaternParams(sigma2=float(section.sigma2), nu=nu, ell=float(section.ell)),
            noise_var=float(section.noise_var),
            stability_nugget=float(section.stability_nugget),
            train_frac=float(section.train_frac),
            outlier_frac=float(section.outlier_frac),
            outlier_factor=section.outlier_factor,
            seed=int(seed),
            diagnostics=bool(section.diagnostics),
        )
    except InvalidInputError as err:
        raise ConfigError(str(err)) from err


def _require(mode, value, name):
    if value in (None, ""):
        raise ConfigError(f"{mode} requires {name}.")


def build_experiment(mode, config):
    """Validate mode requirements and build the typed ExperimentConfig."""
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; choose one of {list(MODES)}.")
    seed = int(config.seed)
    experiment = ExperimentConfig(
        mode=mode,
        seed=seed,
        paths=config.paths,
        train=None,
        models=[],
        data=config.data,
        loss_surface=config.loss_surface,
        raw=config,
    )
    if mode == "simulate":
        experiment.true_nus = _true_nus(config.sim.nu)
        experiment.n_reps = int(config.sim.n_reps)
        if experiment.n_reps < 1:
            raise ConfigError("sim.n_reps must be at least 1.")
        experiment.sim = build_sim_config(config.sim, seed, experiment.true_nus[0])
        experiment.train = build_train_config(config.train, seed, ell_fallback=float(config.sim.ell))
    elif mode == "fit":
        _require(mode, config.data.path, "data.path (--data)")
        _require(mode, config.train.ell, "train.ell (--ell)")
        experiment.train = build_train_config(config.train, seed)
    elif mode in ("predict", "eval"):
        _require(mode, config.paths.model, "paths.model (--model)")
        if mode == "predict":
            _require(mode, config.paths.query, "paths.query (--query)")
        experiment.train = build_train_config(config.train, seed, ell_fallback=1.0)
    else:
        experiment.sim = build_sim_config(config.sim, seed, _true_nus(config.sim.nu)[0])
        experiment.train = build_train_config(config.train, seed, ell_fallback=float(config.sim.ell))
        experiment.objective_losses = build_objective_losses(config.loss_surface, config.train.delta)
    experiment.models = build_model_configs(config, experiment.train)
    return experiment
