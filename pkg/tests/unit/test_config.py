"""Tests for config.py - configuration management."""

from pathlib import Path

import pytest


class TestConfigProperties:
    """Tests for Config class properties."""

    def test_config_properties(self):
        """Test Config exposes typed settings."""
        from mixgeo.config import Config

        config = Config()
        assert isinstance(config.output_dir, Path)
        assert isinstance(config.log_level, str)
        assert isinstance(config.json_logging, bool)
        assert isinstance(config.jobs, int)


class TestConfigDefaults:
    """Tests for Config default values."""

    def test_defaults(self):
        """Test default output dir, log level, JSON flag and job count."""
        from mixgeo.config import Config

        config = Config()
        assert config.output_dir == Path("mixgeo-runs")
        assert config.log_level == "INFO"
        assert config.json_logging is False
        assert config.jobs == 1


class TestConfigEnvOverrides:
    """Tests for environment variable overrides."""

    def test_env_overrides(self, monkeypatch, tmp_path):
        """Test every setting can be overridden by env var."""
        from mixgeo.config import Config

        monkeypatch.setenv("MIXGEO_OUTPUT_DIR", str(tmp_path / "runs"))
        monkeypatch.setenv("MIXGEO_LOG_LEVEL", "DEBUG")
        monkeypatch.setenv("MIXGEO_JSON_LOGGING", "yes")
        monkeypatch.setenv("MIXGEO_JOBS", "4")

        config = Config()
        assert config.output_dir == tmp_path / "runs"
        assert config.log_level == "DEBUG"
        assert config.json_logging is True
        assert config.jobs == 4

    @pytest.mark.parametrize("raw", ["many", "2.5", "0", "-3", ""])
    def test_malformed_jobs_falls_back_to_one(self, monkeypatch, raw):
        """Test a MIXGEO_JOBS value that is not a positive integer gives 1 and a warning."""
        from structlog.testing import capture_logs

        from mixgeo.config import Config

        monkeypatch.setenv("MIXGEO_JOBS", raw)
        config = Config()
        with capture_logs() as logs:
            assert config.jobs == 1
        assert [entry["event"] for entry in logs] == ["invalid_jobs_env"]
        assert logs[0]["log_level"] == "warning"

    def test_malformed_jobs_in_sweep_command(self, monkeypatch, tmp_path, write_image):
        """Test the sweep command still runs serially with a malformed MIXGEO_JOBS."""
        from click.testing import CliRunner

        from mixgeo.cli import cli
        from mixgeo.grid import ImageGrid

        monkeypatch.setenv("MIXGEO_JOBS", "lots")
        noisy = write_image(ImageGrid.constant(8, 8, 90.0), "flat.pgm")
        result = CliRunner().invoke(
            cli,
            [
                "--log-level", "ERROR",
                "sweep", "--in", str(noisy), "--solver", "aos", "--max-iters", "1",
                "--axis", "tau", "--values", "1", "--out-dir", str(tmp_path / "sweep"),
            ],
        )
        assert result.exit_code == 0
        assert (tmp_path / "sweep" / "summary.csv").exists()


class TestGetConfig:
    """Tests for the get_config singleton."""

    def test_returns_singleton(self):
        """Test get_config returns the same instance."""
        from mixgeo.config import get_config

        assert get_config() is get_config()

    def test_reset_picks_up_environment(self, monkeypatch):
        """Test resetting the singleton reads the environment again."""
        import mixgeo.config as config_module

        first = config_module.get_config()
        monkeypatch.setenv("MIXGEO_JOBS", "3")
        config_module._config_instance = None
        second = config_module.get_config()

        assert first is not second
        assert second.jobs == 3


class TestParseConfigText:
    """Tests for the key=value experiment file."""

    def test_parses_lines(self):
        """Test comments and blank lines are skipped and keys normalized."""
        from mixgeo.config import parse_config_text

        text = "# experiment\n\nsolver = sav2\ntau-min=0.5\n  gamma =  2 \n"
        assert parse_config_text(text) == {"solver": "sav2", "tau_min": "0.5", "gamma": "2"}

    def test_reports_every_bad_line(self):
        """Test all malformed lines are reported by number."""
        from mixgeo.config import ConfigValidationError, parse_config_text

        with pytest.raises(ConfigValidationError) as excinfo:
            parse_config_text("solver = aos\njust words\n= 3\n")
        assert len(excinfo.value.errors) == 2
        assert excinfo.value.errors[0].startswith("line 2")
        assert excinfo.value.errors[1].startswith("line 3")

    def test_load_file(self, tmp_path):
        """Test a file on disk is parsed."""
        from mixgeo.config import load_config_file

        path = tmp_path / "exp.cfg"
        path.write_text("model = elastica\nmax_iters = 5\n", encoding="utf-8")
        assert load_config_file(path) == {"model": "elastica", "max_iters": "5"}


class TestSolverConfig:
    """Tests for SolverConfig."""

    def test_from_strings(self):
        """Test string values are coerced to their field types."""
        from mixgeo.config import SolverConfig

        config = SolverConfig.from_mapping(
            {"solver": "sav1", "gamma": "0.5", "max_iters": "10", "refresh-alpha": "on"}
        )
        assert config.solver == "sav1"
        assert config.gamma == 0.5
        assert config.max_iters == 10
        assert config.refresh_alpha is True

    def test_collects_every_error(self):
        """Test unknown keys, bad values and range errors are all listed."""
        from mixgeo.config import ConfigValidationError, SolverConfig

        with pytest.raises(ConfigValidationError) as excinfo:
            SolverConfig.from_mapping(
                {"colour": "red", "gamma": "lots", "tau_min": "2", "tau_max": "1", "rho": "0"}
            )
        errors = excinfo.value.errors
        assert any(e.startswith("colour: unknown setting") for e in errors)
        assert any(e.startswith("gamma: expected a number") for e in errors)
        assert any(e.startswith("tau_max:") for e in errors)
        assert any(e.startswith("rho:") for e in errors)

    def test_unknown_solver_lists_names(self):
        """Test an unknown solver names the valid ones."""
        from mixgeo.config import ConfigValidationError, SolverConfig

        with pytest.raises(ConfigValidationError, match="explicit, aos, sav1, sav2"):
            SolverConfig.from_mapping({"solver": "newton"})

    def test_rejects_non_finite(self):
        """Test NaN and infinities are rejected."""
        from mixgeo.config import ConfigValidationError, SolverConfig

        with pytest.raises(ConfigValidationError, match="finite"):
            SolverConfig.from_mapping({"eta": "nan"})

    def test_none_values_keep_defaults(self):
        """Test None entries, as left by unset CLI flags, are ignored."""
        from mixgeo.config import SolverConfig

        assert SolverConfig.from_mapping({"tau": None, "b": None}) == SolverConfig()

    def test_weights_from_preset(self):
        """Test the model preset supplies weights unless overridden."""
        from mixgeo.config import SolverConfig

        weights = SolverConfig(model="elastica").weights()
        assert weights.b == 0.01
        assert weights.indicator.mode == "constant"
        assert weights.indicator.value == 0.5

        weights = SolverConfig(model="elastica", b=0.2, alpha=0.9).weights()
        assert weights.b == 0.2
        assert weights.indicator.value == 0.9

    def test_adaptive_indicator_settings(self):
        """Test sigma and p reach the adaptive indicator."""
        from mixgeo.config import SolverConfig

        indicator = SolverConfig(sigma=3.0, p=2.0).weights().indicator
        assert indicator.mode == "adaptive"
        assert (indicator.sigma, indicator.p) == (3.0, 2.0)

    def test_constant_indicator_override(self):
        """Test indicator=constant without alpha uses 1."""
        from mixgeo.config import SolverConfig

        indicator = SolverConfig(indicator="constant").weights().indicator
        assert indicator.mode == "constant"
        assert indicator.value == 1.0

    def test_default_stop_rules(self):
        """Test SAV solvers stop on relative change, the others run their budget."""
        from mixgeo.config import SolverConfig

        assert SolverConfig(solver="aos").stopping_rule().mode == "max-iters"
        assert SolverConfig(solver="explicit").stopping_rule().mode == "max-iters"
        rule = SolverConfig(solver="sav2").stopping_rule()
        assert (rule.mode, rule.tolerance) == ("relative", 1e-4)
        rule = SolverConfig(stop="absolute", stop_tol=0.5).stopping_rule()
        assert (rule.mode, rule.tolerance) == ("absolute", 0.5)

    @pytest.mark.parametrize(
        "solver,tau", [("aos", 2.0), ("explicit", 0.05)]
    )
    def test_default_step_sizes(self, solver, tau):
        """Test the per-solver default step size."""
        from mixgeo.config import SolverConfig

        built = SolverConfig(solver=solver).build_solver()
        assert built.name == solver
        assert built.config.tau == tau

    def test_sav_solver_settings(self):
        """Test SAV settings are passed through."""
        from mixgeo.config import SolverConfig

        built = SolverConfig(solver="sav2", C=1e9, tau_min=0.5, tau_max=0.5, tau0=0.5).build_solver()
        assert built.name == "sav2"
        assert built.config.order == "second"
        assert built.config.C == 1e9
        assert built.config.initial_tau == 0.5

    def test_as_mapping_skips_unset(self):
        """Test as_mapping leaves out None fields."""
        from mixgeo.config import SolverConfig

        mapping = SolverConfig(tau=1.5).as_mapping()
        assert mapping["tau"] == 1.5
        assert "b" not in mapping and "stop" not in mapping
