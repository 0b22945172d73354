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
import os
from unittest import skipUnless
from unittest import TestCase

from robgp.kernel import MaternParams
from robgp.loss import LossSpec
from robgp.simulate import run_replication
from robgp.simulate import run_study
from robgp.simulate import SimConfig
from robgp.train import TrainConfig

SEEDS = (0, 1, 2)
FULL_STUDY = os.environ.get("ROBGP_FULL_STUDY")


def sim_config(nu, outlier_frac, seed=0, n_per_dim=20):
    """Lattice study settings with unit variance and length scale."""
    return SimConfig(
        n_per_dim=n_per_dim,
        true_params=MaternParams(sigma2=1.0, nu=nu, ell=1.0),
        outlier_frac=outlier_frac,
        seed=seed,
    )


def models(*pairs, **settings):
    """One TrainConfig per (regime, loss) pair."""
    return [TrainConfig(regime=regime, loss=LossSpec(loss, 3.0), **settings) for regime, loss in pairs]


def majority(flags):
    """Whether most flags are set."""
    flags = list(flags)
    return sum(flags) > len(flags) / 2


class ReducedStudyTrendTestCase(TestCase):
    """Trends of a 20x20 study, each decided by a vote over three seeds."""

    MODELS = models(("regular", "lool"), ("regular", "looph"), k=30, b=150)

    @classmethod
    def setUpClass(cls):
        """Run clean and contaminated replications at nu = 0.5 and a clean one at nu = 1.0."""
        cls.clean = [run_replication(sim_config(0.5, 0.0, seed), cls.MODELS) for seed in SEEDS]
        cls.dirty = [run_replication(sim_config(0.5, 0.1, seed), cls.MODELS) for seed in SEEDS]
        cls.smooth = [run_replication(sim_config(1.0, 0.0, seed), cls.MODELS[:1]) for seed in SEEDS]

    def test_all_models_fit(self):
        """Test that every replication fits every model."""
        for result in self.clean + self.dirty + self.smooth:
            for outcome in result.outcomes.values():
                self.assertTrue(outcome.ok, outcome.error)

    def test_smooth_clean_field_is_accurate(self):
        """Test that a clean nu = 1.0 field is predicted with RMSE below 0.1."""
        rmses = [result.outcomes[("regular", "lool")].report.rmse for result in self.smooth]
        self.assertTrue(majority(rmse < 0.1 for rmse in rmses), rmses)

    def test_outliers_widen_intervals(self):
        """Test that contaminated training data widens the LOOL intervals."""
        pairs = [
            (
                clean.outcomes[("regular", "lool")].report.median_ci_size,
                dirty.outcomes[("regular", "lool")].report.median_ci_size,
            )
            for clean, dirty in zip(self.clean, self.dirty)
        ]
        self.assertTrue(majority(dirty > clean for clean, dirty in pairs), pairs)

    def test_looph_chooses_smoother_kernel(self):
        """Test that on contaminated data LOOPH fits a nu at least as large as LOOL."""
        pairs = [
            (result.outcomes[("regular", "lool")].nu_hat, result.outcomes[("regular", "looph")].nu_hat)
            for result in self.dirty
        ]
        self.assertTrue(majority(looph >= lool for lool, looph in pairs), pairs)


@skipUnless(FULL_STUDY, "set ROBGP_FULL_STUDY=1 to run the 40x40, ten-replication study")
class FullStudyTrendTestCase(TestCase):
    """Trends of the default 40x40 study averaged over ten replications."""

    MODELS = models(("regular", "lool"), ("regular", "looph"), ("hybrid", "looph"), ("downsample", "lool"))

    @classmethod
    def setUpClass(cls):
        """Run the clean and contaminated studies."""
        cls.rows = {}
        for label, nu, outlier_frac in (("smooth", 1.0, 0.0), ("clean", 0.5, 0.0), ("dirty", 0.5, 0.1)):
            _, rows = run_study(sim_config(nu, outlier_frac, n_per_dim=40), cls.MODELS, 10)
            cls.rows[label] = {(row["regime"], row["loss"]): row for row in rows}
        _, rows = run_study(sim_config(1.0, 0.1, n_per_dim=40), cls.MODELS, 10)
        cls.rows["smooth_dirty"] = {(row["regime"], row["loss"]): row for row in rows}

    def row(self, study, regime, loss):
        """Aggregate row of one model."""
        return self.rows[study][(regime, loss)]

    def test_smooth_clean_field_is_accurate(self):
        """Test the clean nu = 1.0 RMSE."""
        self.assertLess(self.row("smooth", "regular", "lool")["rmse"], 0.1)

    def test_outliers_widen_intervals(self):
        """Test that outliers widen the regular LOOL intervals."""
        self.assertGreater(
            self.row("dirty", "regular", "lool")["median_ci_size"],
            self.row("clean", "regular", "lool")["median_ci_size"],
        )

    def test_looph_narrows_intervals(self):
        """Test that regular LOOPH intervals are narrower than regular LOOL ones under outliers."""
        self.assertLess(
            self.row("dirty", "regular", "looph")["median_ci_size"],
            self.row("dirty", "regular", "lool")["median_ci_size"],
        )

    def test_looph_chooses_smoother_kernel(self):
        """Test the mean fitted nu of LOOPH against LOOL under outliers."""
        self.assertGreaterEqual(
            self.row("dirty", "regular", "looph")["nu_hat"], self.row("dirty", "regular", "lool")["nu_hat"]
        )

    def test_downsampling_shrinks_variances(self):
        """Test that down-sampled LOOL has a smaller median variance than regular LOOL at nu = 1.0."""
        self.assertLess(
            self.row("smooth_dirty", "downsample", "lool")["mdv"],
            self.row("smooth_dirty", "regular", "lool")["mdv"],
        )
