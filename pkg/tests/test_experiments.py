import json
import math

import numpy as np
import pydantic
import pytest

from SNS_ROUGH.exceptions import ValidationFailure
from SNS_ROUGH.experiments.convergence import run_convergence_in_n
from SNS_ROUGH.experiments.ensemble import CONVOLUTION_STATISTICS
from SNS_ROUGH.experiments.ensemble import SOLUTION_STATISTICS
from SNS_ROUGH.experiments.ensemble import run_ladder_ensemble
from SNS_ROUGH.experiments.ou_moments import ou_exactness_check
from SNS_ROUGH.experiments.ou_moments import ou_moment_study
from SNS_ROUGH.experiments.settings import ExperimentConfig
from SNS_ROUGH.experiments.settings import OUSettings
from SNS_ROUGH.experiments.settings import UniquenessSettings
from SNS_ROUGH.experiments.settings import load_experiment_config
from SNS_ROUGH.experiments.settings import with_overrides
from SNS_ROUGH.experiments.tightness import MIN_PATHS
from SNS_ROUGH.experiments.tightness import run_tightness_tables
from SNS_ROUGH.experiments.uniqueness import delta_scaling
from SNS_ROUGH.experiments.uniqueness import run_uniqueness_experiment
from SNS_ROUGH.noise import NoiseSpec
from SNS_ROUGH.solver import SolverConfig


@pytest.fixture
def tiny_base():
    """Four steps on an 8^2 grid, recorded every other step."""
    return SolverConfig(N=8, T=2.0 ** -4, dt=2.0 ** -6, record_stride=2, gn_constant=1.0)


@pytest.fixture
def tiny(tiny_base):
    return ExperimentConfig(
        base=tiny_base, n_ladder=(1, 4, 16), paths=3, uniqueness=UniquenessSettings(C_bar=1.0)
    )


class TestSettings:
    """Experiment configuration files and overrides."""

    def test_no_file_gives_defaults(self):
        cfg, raw = load_experiment_config(None)
        assert cfg == ExperimentConfig()
        assert raw == b""

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationFailure, match="config file not found"):
            load_experiment_config(str(tmp_path / "absent.json"))

    @pytest.mark.parametrize("content, message", [("{oops", "not valid JSON"), ("[1, 2]", "JSON object")])
    def test_malformed_files(self, tmp_path, content, message):
        path = tmp_path / "bad.json"
        path.write_text(content)
        with pytest.raises(ValidationFailure, match=message):
            load_experiment_config(str(path))

    def test_bare_solver_configuration(self, tmp_path):
        """A file without a base section configures the solver only."""
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"N": 16, "T": 0.5, "dt": 0.125}))
        cfg, raw = load_experiment_config(str(path))
        assert cfg.base.N == 16
        assert cfg.base.steps == 4
        assert cfg.paths == ExperimentConfig().paths
        assert raw == path.read_bytes()

    def test_overrides(self, tiny):
        """Command-line values replace the configured ones and None leaves them alone."""
        cfg = with_overrides(tiny, seed=9, paths=None, n_ladder=(2, 8, 32))
        assert cfg.base.seed == 9
        assert cfg.paths == 3
        assert cfg.n_ladder == (2, 8, 32)

    @pytest.mark.parametrize("kwargs", [{"n_ladder": (4, 4)}, {"n_ladder": (0, 1)}, {"paths": 0}])
    def test_invalid_settings(self, kwargs):
        with pytest.raises(pydantic.ValidationError):
            ExperimentConfig(**kwargs)

    def test_path_seeds_are_distinct_and_reproducible(self, tiny):
        seeds = [tiny.path_seed(i) for i in range(10)]
        assert len(set(seeds)) == 10
        assert seeds == [tiny.path_seed(i) for i in range(10)]

    def test_holder_exponent_defaults(self, tiny):
        """beta = delta = (1 - g) / 4 and gamma = min(beta, 1 - d / 4)."""
        assert tiny.holder_exponents() == (0.125, 0.125, 0.125)

    def test_resolved_configuration(self, tiny):
        resolved = tiny.resolved({"GN": 0.5})
        assert resolved["base"]["steps"] == 4
        assert resolved["beta"] == 0.125
        assert resolved["constants"] == {"GN": 0.5}


class TestLadderEnsemble:
    """Coupled Yosida ladders."""

    def test_levels_share_the_wiener_path(self, tiny):
        results = run_ladder_ensemble(tiny, workers=1)
        assert len(results) == 3
        for result in results:
            assert result.coupled
            assert len(result.distances) == 2
            assert set(result.statistics) == {1, 4, 16}
            assert set(result.statistics[4]) == set(SOLUTION_STATISTICS + CONVOLUTION_STATISTICS)
            assert all(math.isfinite(value) for value in result.statistics[16].values())

    def test_ensemble_is_reproducible(self, tiny):
        first = run_ladder_ensemble(tiny, workers=1)
        second = run_ladder_ensemble(tiny, workers=1)
        assert [r.distances for r in first] == [r.distances for r in second]


class TestConvergence:
    """Cauchy distances along the ladder."""

    def test_table_layout(self, tiny):
        table = run_convergence_in_n(tiny)
        assert table.coupled
        assert [(row["n"], row["n_next"]) for row in table.distances] == [(1, 4), (4, 16)]
        assert len(table.quantiles) == len(SOLUTION_STATISTICS) * 3
        assert 0 <= table.monotone_fraction <= 1
        assert set(table.summary()) == {"monotone_fraction", "max_quantile_spread", "coupled"}

    def test_needs_three_levels(self, tiny):
        with pytest.raises(ValidationFailure, match="three levels"):
            run_convergence_in_n(tiny.copy(update={"n_ladder": (1, 4)}))


class TestTightness:
    """Empirical tails against Chebyshev majorants."""

    def test_markov_bands_hold(self, tiny):
        """The empirical tail never exceeds the empirical mean over eta."""
        cfg = tiny.copy(update={"paths": MIN_PATHS, "n_ladder": (1, 16)})
        table = run_tightness_tables(cfg)
        assert table.rows
        assert table.holds
        assert all(ratio >= 1 for ratio in table.uniformity().values())

    def test_needs_enough_paths(self, tiny):
        with pytest.raises(ValidationFailure, match="at least 100 paths"):
            run_tightness_tables(tiny)


class TestUniqueness:
    """Coupled pairs from nearby initial data."""

    def test_identical_data_give_identical_paths(self, tiny):
        """With delta0 = 0 both solutions coincide bit for bit."""
        ensemble = run_uniqueness_experiment(tiny, delta0=0.0)
        assert ensemble.identical
        assert ensemble.coupled
        assert ensemble.supermartingale_holds()
        assert all(row["V_mean"] == 0 for row in ensemble.summary_rows())

    def test_initial_distance_is_the_perturbation(self, tiny):
        """||delta0 e||_{H^{-g}} = delta0 (1 + 1)^{-g/2} for the unit basis mode (1, 0)."""
        ensemble = run_uniqueness_experiment(tiny, delta0=1e-3)
        record = ensemble.records[0]
        assert record.V_norm[0] == pytest.approx(1e-3 * 2 ** -0.25, rel=1e-8)
        assert record.Q[0] == pytest.approx(record.V_norm[0] ** 2)
        assert not ensemble.identical
        assert ensemble.coupled
        assert len(ensemble.path_rows()) == 3

    def test_stopped_pairs_are_frozen(self, tiny):
        """Beyond the threshold the pair stops and its recorded values stay put."""
        cfg = tiny.copy(update={"uniqueness": UniquenessSettings(C_bar=1.0, N_stop=1e-6)})
        ensemble = run_uniqueness_experiment(cfg, delta0=1e-3)
        for record in ensemble.records:
            assert record.tau_index == 0
            assert record.stopped.all()
            assert np.all(record.V_norm == record.V_norm[0])
            assert record.coupled
        assert ensemble.summary_rows()[-1]["stopped_fraction"] == 1.0

    def test_distance_is_linear_in_small_perturbations(self, tiny):
        ensembles = [run_uniqueness_experiment(tiny, delta0=delta0) for delta0 in (1e-6, 2e-6)]
        scaling = delta_scaling(ensembles)
        assert [row["delta0"] for row in scaling.rows] == [1e-6, 2e-6]
        assert scaling.linear

    def test_scaling_needs_positive_perturbations(self, tiny):
        with pytest.raises(ValidationFailure, match="positive perturbation"):
            delta_scaling([run_uniqueness_experiment(tiny, delta0=0.0)])

    def test_two_dimensions_only(self, tiny):
        base = SolverConfig(d=3, N=8, T=2.0 ** -4, dt=2.0 ** -6, noise=NoiseSpec(alpha=1.5))
        with pytest.raises(ValidationFailure, match="d = 2"):
            run_uniqueness_experiment(tiny.copy(update={"base": base}))

    def test_negative_perturbation(self, tiny):
        with pytest.raises(ValidationFailure, match="non-negative"):
            run_uniqueness_experiment(tiny, delta0=-1.0)


class TestOUMoments:
    """Moments of z_n along the ladder."""

    def test_silent_noise_gives_zero_moments(self, tiny):
        base = tiny.base.copy(update={"noise": NoiseSpec(amplitude=0.0)})
        report = ou_moment_study(tiny.copy(update={"base": base}))
        assert all(row["estimate"] == 0 for row in report.rows)
        assert report.uniform

    def test_rows_and_hilbert_schmidt_growth(self, tiny):
        """||G_n||_{L_2(U; H)} grows with n towards the unsmoothed value."""
        report = ou_moment_study(tiny)
        assert len(report.rows) == 6 * 3
        assert report.hs_norm_grows
        assert len(report.estimates("holder_C_beta_H_delta", 20)) == 3
        assert all(estimate > 0 for estimate in report.estimates("Lm_H_eps4"))

    def test_exact_law_of_the_lowest_modes(self, tiny):
        cfg = tiny.copy(update={"ou": OUSettings(exactness_paths=4000, exactness_modes=2)})
        report = ou_exactness_check(cfg)
        assert [row["mode"] for row in report.rows] == [0, 1]
        for row in report.rows:
            assert abs(row["variance"] - row["exact_variance"]) <= 5 * row["std_error"]

    def test_exactness_needs_two_paths(self, tiny):
        cfg = tiny.copy(update={"ou": OUSettings(exactness_paths=1)})
        with pytest.raises(ValidationFailure, match="at least two paths"):
            ou_exactness_check(cfg)
