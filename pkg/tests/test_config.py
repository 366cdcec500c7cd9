"""Config parsing, validation, and round-trip formatting."""

import math

import pytest

from cdma_jic.estimators import StepSizes
from cdma_jic.harness.config import (
    DEFAULT_GRIDS,
    EXPERIMENTS,
    ConfigError,
    ExperimentConfig,
    StepSizeGrid,
    format_config,
    parse_config_file,
    parse_config_text,
)
from cdma_jic.receivers import RECEIVER_NAMES


class TestStepSizeGrid:
    def test_values_coerced_to_float_tuples(self):
        grid = StepSizeGrid((1,), (2,), mu_h=(3, 4))
        assert grid.mu_w == (1.0,)
        assert isinstance(grid.mu_h[0], float)

    def test_empty_axis_rejected(self):
        with pytest.raises(ConfigError, match="empty"):
            StepSizeGrid((), (0.01,), (0.01,))

    @pytest.mark.parametrize("bad", [0.0, -0.01])
    def test_nonpositive_rejected(self, bad):
        with pytest.raises(ConfigError, match="positive"):
            StepSizeGrid((0.01,), (bad,), (0.01,))

    def test_singleton_detection(self):
        assert StepSizeGrid((0.1,), (0.2,), (0.3,)).is_singleton
        assert not StepSizeGrid((0.1, 0.2), (0.2,), (0.3,)).is_singleton

    def test_single_returns_step_sizes(self):
        assert StepSizeGrid((0.1,), (0.2,), (0.3,)).single() == StepSizes(0.1, 0.2, 0.3)

    def test_single_on_multi_grid_raises(self):
        with pytest.raises(ConfigError):
            StepSizeGrid((0.1, 0.2), (0.2,), (0.3,)).single()


class TestDefaults:
    def test_default_config_is_valid(self):
        ExperimentConfig().validate()

    def test_default_grids_cover_every_receiver(self):
        assert set(DEFAULT_GRIDS) == set(RECEIVER_NAMES)
        for grid in DEFAULT_GRIDS.values():
            assert grid.is_singleton

    def test_empty_text_gives_defaults(self):
        assert parse_config_text("") == ExperimentConfig()


class TestParsing:
    def test_full_example(self):
        cfg = parse_config_text(
            """
            # uplink sweep
            experiment = sweep-ebn0
            ebn0_db = 6, 9, 12, 15   # grid points
            k_users = 8
            trials = 20
            receivers = linear, jo-sic
            fixed_codes = yes

            [jo-sic]
            mu_w = 0.004, 0.008
            mu_lambda = 0.01
            """
        )
        assert cfg.experiment == "sweep-ebn0"
        assert cfg.ebn0_db == [6.0, 9.0, 12.0, 15.0]
        assert cfg.k_users == 8
        assert cfg.trials == 20
        assert cfg.receivers == ["linear", "jo-sic"]
        assert cfg.fixed_codes is True
        grid = cfg.step_sizes["jo-sic"]
        assert grid.mu_w == (0.004, 0.008)
        assert grid.mu_lambda == (0.01,)
        # unspecified axis falls back to the default grid
        assert grid.mu_h == DEFAULT_GRIDS["jo-sic"].mu_h

    def test_comma_decides_scalar_versus_list(self):
        assert parse_config_text("ebn0_db = 9").ebn0_db == 9.0
        cfg = parse_config_text("experiment = sweep-ebn0\nebn0_db = 9, 12")
        assert cfg.ebn0_db == [9.0, 12.0]

    def test_section_does_not_disturb_other_receivers(self):
        cfg = parse_config_text("[sic]\nmu_w = 0.5")
        assert cfg.step_sizes["linear"] == DEFAULT_GRIDS["linear"]
        assert cfg.step_sizes["sic"].mu_w == (0.5,)

    @pytest.mark.parametrize("text", ["fixed_codes = true", "fixed_codes = ON", "fixed_codes = 1"])
    def test_bool_truthy_spellings(self, text):
        assert parse_config_text(text).fixed_codes is True

    @pytest.mark.parametrize("text", ["pin_first_tap = false", "pin_first_tap = No", "pin_first_tap = 0"])
    def test_bool_falsy_spellings(self, text):
        assert parse_config_text(text).pin_first_tap is False

    def test_infinite_ebn0_parses(self):
        assert parse_config_text("ebn0_db = inf").ebn0_db == math.inf

    def test_parse_config_file(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("trials = 7\n", encoding="utf-8")
        assert parse_config_file(path).trials == 7


class TestParseErrors:
    def test_unknown_key_reports_line_number(self):
        with pytest.raises(ConfigError, match=r"line 2: unknown key 'chips'"):
            parse_config_text("trials = 3\nchips = 16")

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match=r"line 1: unknown receiver section \[mmse\]"):
            parse_config_text("[mmse]\nmu_w = 0.1")

    def test_non_grid_key_inside_section(self):
        with pytest.raises(ConfigError, match=r"line 2: unknown key 'trials' in \[sic\]"):
            parse_config_text("[sic]\ntrials = 5")

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match=r"line 1: expected"):
            parse_config_text("just some words")

    def test_unparseable_int(self):
        with pytest.raises(ConfigError, match=r"line 1: cannot parse trials = 'ten'"):
            parse_config_text("trials = ten")

    def test_unparseable_bool(self):
        with pytest.raises(ConfigError, match="cannot parse fixed_codes"):
            parse_config_text("fixed_codes = maybe")

    def test_empty_list_value(self):
        with pytest.raises(ConfigError, match="empty value for ebn0_db"):
            parse_config_text("ebn0_db = ,")

    def test_empty_grid_list(self):
        with pytest.raises(ConfigError, match="empty list for mu_w"):
            parse_config_text("[sic]\nmu_w = ,")


class TestValidation:
    def test_unknown_experiment(self):
        with pytest.raises(ConfigError, match="unknown experiment"):
            parse_config_text("experiment = sweeep")
        assert "sweeep" not in EXPERIMENTS

    def test_lp_bounds(self):
        with pytest.raises(ConfigError, match="lp"):
            parse_config_text("n = 4\nlp = 5\nnonzero_paths = 1")

    def test_nonzero_paths_must_fit_window(self):
        # worst-case spacing of 3 puts the last of three taps at delay 6
        parse_config_text("n = 16\nlp = 7")
        with pytest.raises(ConfigError, match="nonzero_paths"):
            parse_config_text("n = 16\nlp = 6")

    def test_training_len_bounds(self):
        with pytest.raises(ConfigError, match="training_len"):
            parse_config_text("packet_len = 100\ntraining_len = 100")

    def test_rho_bounds(self):
        with pytest.raises(ConfigError, match="rho"):
            parse_config_text("rho = 0")
        parse_config_text("rho = 1")

    def test_unknown_receiver(self):
        with pytest.raises(ConfigError, match="unknown receiver 'zf'"):
            parse_config_text("receivers = linear, zf")

    def test_duplicate_receiver(self):
        with pytest.raises(ConfigError, match="listed twice"):
            parse_config_text("receivers = sic, sic")

    def test_empty_receivers(self):
        with pytest.raises(ConfigError, match="receivers"):
            parse_config_text("receivers = ,")

    def test_missing_step_sizes_for_receiver(self):
        cfg = ExperimentConfig(step_sizes={})
        with pytest.raises(ConfigError, match="missing step sizes"):
            cfg.validate()

    def test_sweep_ebn0_needs_list(self):
        with pytest.raises(ConfigError, match="sweep-ebn0 needs a list"):
            parse_config_text("experiment = sweep-ebn0\nebn0_db = 12")

    def test_sweep_ebn0_rejects_k_list(self):
        with pytest.raises(ConfigError, match="scalar k_users"):
            parse_config_text("experiment = sweep-ebn0\nebn0_db = 6, 9\nk_users = 2, 4")

    def test_sweep_users_needs_k_list(self):
        with pytest.raises(ConfigError, match="sweep-users needs a list"):
            parse_config_text("experiment = sweep-users")
        parse_config_text("experiment = sweep-users\nk_users = 2, 6, 10")

    def test_convergence_rejects_lists(self):
        with pytest.raises(ConfigError, match="scalar"):
            parse_config_text("ebn0_db = 6, 9")

    def test_negative_infinity_rejected(self):
        with pytest.raises(ConfigError, match="finite"):
            parse_config_text("ebn0_db = -inf")

    def test_nan_rejected(self):
        with pytest.raises(ConfigError, match="finite"):
            parse_config_text("ebn0_db = nan")

    def test_k_users_positive(self):
        with pytest.raises(ConfigError, match="k_users"):
            parse_config_text("k_users = 0")


class TestFormatRoundTrip:
    def test_default_round_trip(self):
        cfg = ExperimentConfig()
        assert parse_config_text(format_config(cfg)) == cfg

    def test_sweep_round_trip_preserves_lists_and_grids(self):
        cfg = parse_config_text(
            "experiment = sweep-ebn0\n"
            "ebn0_db = 6, 9, 12, 15\n"
            "receivers = linear, jo-sic\n"
            "trials = 3\n"
            "[jo-sic]\n"
            "mu_w = 0.004, 0.008\n"
        )
        again = parse_config_text(format_config(cfg))
        assert again == cfg
        assert again.step_sizes["jo-sic"].mu_w == (0.004, 0.008)

    def test_formatted_floats_carry_nine_significant_digits(self):
        cfg = ExperimentConfig(ebn0_db=10.123456789)
        assert "10.1234568" in format_config(cfg)
