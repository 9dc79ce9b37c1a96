"""Config parsing, validation diagnostics, presets."""

import numpy as np
import pytest

from dampedns import ConfigError, parse_config
from dampedns.config import (
    build_forcing,
    build_grid,
    build_initial,
    build_physics,
    build_state,
    load_preset,
    preset_names,
    preset_text,
)

MINIMAL = """
[physics]
mu = 0.1
alpha = 0.2
beta = 1.0

[grid]
n = 8
l = 6.283185307179586
"""


class TestParsing:
    def test_minimal_config_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.scheme.method == "if-rk2"
        assert cfg.scheme.adaptive is True
        assert cfg.diag_stride == 10
        assert cfg.forcing.kind == "zero"
        assert cfg.initial.kind == "zero"
        assert cfg.t_end == 1.0

    def test_comments_and_blanks_ignored(self):
        cfg = parse_config(MINIMAL + "\n# a comment\n\n[run]\nt_end = 2.0  # inline\n")
        assert cfg.t_end == 2.0

    def test_unknown_key_reports_line(self):
        text = MINIMAL + "\n[run]\nt_start = 0.0\n"
        with pytest.raises(ConfigError, match=r"line \d+: unknown key 't_start'"):
            parse_config(text)

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="unknown section"):
            parse_config("[solver]\nx = 1\n")

    def test_key_outside_section(self):
        with pytest.raises(ConfigError, match="outside"):
            parse_config("mu = 0.1\n")

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config(MINIMAL + "\n[run]\nt_end = 1\nt_end = 2\n")

    def test_missing_required(self):
        with pytest.raises(ConfigError, match="missing required"):
            parse_config("[physics]\nmu = 0.1\nalpha = 0.2\nbeta = 1\n")

    def test_bad_value_reports_line(self):
        with pytest.raises(ConfigError, match=r"line \d+: bad value"):
            parse_config(MINIMAL.replace("mu = 0.1", "mu = viscous"))

    def test_malformed_line(self):
        with pytest.raises(ConfigError, match="key = value"):
            parse_config("[physics]\nmu 0.1\n")

    def test_vector_values(self):
        cfg = parse_config(MINIMAL + "\n[forcing]\nkind = cylinder\nforce = 0, 1.5, 0\n")
        assert cfg.forcing.force == (0.0, 1.5, 0.0)
        with pytest.raises(ConfigError):
            parse_config(MINIMAL + "\n[forcing]\nforce = 1, 2\n")

    def test_boolean_values(self):
        cfg = parse_config(MINIMAL + "\n[scheme]\nadaptive = no\n")
        assert cfg.scheme.adaptive is False
        with pytest.raises(ConfigError):
            parse_config(MINIMAL + "\n[scheme]\nadaptive = maybe\n")


class TestRangeChecks:
    def test_beta_below_one_rejected(self):
        with pytest.raises(ConfigError, match="beta must be >= 1"):
            parse_config(MINIMAL.replace("beta = 1.0", "beta = 0.5"))

    def test_alpha_nonpositive_rejected(self):
        with pytest.raises(ConfigError, match="alpha must be > 0"):
            parse_config(MINIMAL.replace("alpha = 0.2", "alpha = 0.0"))
        with pytest.raises(ConfigError, match="alpha must be > 0"):
            parse_config(MINIMAL.replace("alpha = 0.2", "alpha = -1"))

    def test_mu_nonpositive_rejected(self):
        with pytest.raises(ConfigError, match="mu must be > 0"):
            parse_config(MINIMAL.replace("mu = 0.1", "mu = 0"))

    def test_grid_checks(self):
        with pytest.raises(ConfigError, match="even integer"):
            parse_config(MINIMAL.replace("n = 8", "n = 9"))
        with pytest.raises(ConfigError, match="l must be > 0"):
            parse_config(MINIMAL.replace("l = 6.283185307179586", "l = -2"))

    def test_scheme_checks_surface_as_config_errors(self):
        with pytest.raises(ConfigError):
            parse_config(MINIMAL + "\n[scheme]\nmethod = euler\n")
        with pytest.raises(ConfigError):
            parse_config(MINIMAL + "\n[scheme]\ndt = 1.0\ndt_max = 0.1\n")

    def test_run_checks(self):
        with pytest.raises(ConfigError, match="diag_stride"):
            parse_config(MINIMAL + "\n[run]\ndiag_stride = 0\n")
        with pytest.raises(ConfigError, match="ic must be"):
            parse_config(MINIMAL + "\n[run]\nic = vortex\n")
        with pytest.raises(ConfigError, match="t_end"):
            parse_config(MINIMAL + "\n[run]\nt_end = -1\n")


class TestBuilders:
    def test_build_pipeline(self):
        cfg = parse_config(MINIMAL + "\n[forcing]\nkind = cylinder\n"
                           "\n[run]\nic = random\nic_seed = 3\nic_energy = 2.0\n")
        grid = build_grid(cfg)
        assert grid.n == 8 and grid.length == pytest.approx(2 * np.pi)
        physics = build_physics(cfg, grid)
        assert physics.forcing.norm_sq > 0.0
        u0 = build_initial(cfg, grid)
        assert u0.norm_h_sq == pytest.approx(2.0, abs=1e-12)
        state = build_state(cfg, grid)
        assert state.t == 0.0 and state.step_count == 0

    def test_zero_forcing_builder(self):
        cfg = parse_config(MINIMAL)
        assert build_forcing(cfg, build_grid(cfg)).norm_sq == 0.0


class TestPresets:
    def test_names(self):
        names = preset_names()
        assert "decay-shear-b1" in names
        assert sum(1 for n in names if n.startswith("cylinder-")) == 6

    def test_decay_shear_preset_values(self):
        cfg = load_preset("decay-shear-b1")
        assert (cfg.mu, cfg.alpha, cfg.beta) == (0.1, 0.2, 1.0)
        assert cfg.n == 16 and cfg.length == pytest.approx(2 * np.pi)
        assert cfg.initial.kind == "shear" and cfg.initial.amplitude == 1.0
        assert cfg.forcing.kind == "zero"
        assert cfg.scheme.dt == 1e-3 and not cfg.scheme.adaptive
        assert cfg.t_end == 5.0

    def test_cylinder_presets_cover_damping_grid(self):
        seen = set()
        for name in preset_names():
            if name.startswith("cylinder-"):
                cfg = load_preset(name)
                seen.add((cfg.alpha, cfg.beta))
                assert cfg.forcing.kind == "cylinder"
                assert cfg.initial.kind == "zero"
                assert cfg.n == 32 and cfg.length == 12.0
        assert seen == {(a, b) for a in (0.2, 0.5) for b in (1.0, 2.0, 4.0)}

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="unknown preset"):
            preset_text("fancy")

    def test_with_damping_override(self):
        cfg = load_preset("cylinder-a02-b1").with_damping(0.5, 4.0)
        assert (cfg.alpha, cfg.beta) == (0.5, 4.0)
