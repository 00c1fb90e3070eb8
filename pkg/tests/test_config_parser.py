"""
Config parsing, validation, canonical serialization and hashing.
"""
import os

import pytest

from model.drift import SignDrift
from model.errors import ConfigError, ParseError, ValidationError
from model.kernel import FbmVolterra, Mixture
from service.config_parser_service import ConfigParserService, canonical_value

SMALL_BALL = """
[run]
command = small-ball

[kernel]
kind = fbm
hurst = 0.7

[drift]
kind = sign

[mc]
master_seed = 42
"""


@pytest.fixture
def parser():
    return ConfigParserService()


def _fields(error: ConfigError) -> list:
    return [getattr(e, 'field', None) for e in error.errors]


class TestParse:
    def test_minimal_config_gets_defaults(self, parser):
        config = parser.parse_config(SMALL_BALL)
        assert config.command == "small-ball"
        assert config.n_paths == 10_000
        assert config.n_points == 512
        assert config.horizon == 1.0
        assert config.master_seed == 42
        assert isinstance(config.kernel, FbmVolterra) and config.kernel.hurst == 0.7
        assert isinstance(config.drift, SignDrift)
        assert config.params['t'] == 1.0
        assert config.params['alphas'][0] == 0.125
        assert config.verdict['standard_errors'] == 3.0
        assert len(config.config_hash) == 12

    def test_fractions_and_comments(self, parser):
        text = SMALL_BALL.replace("hurst = 0.7", "hurst = 2/3  # smooth regime")
        assert parser.parse_config(text).kernel.hurst == pytest.approx(2.0 / 3.0)

    def test_mixture_components(self, parser):
        text = """
[run]
command = verify-kernel
[kernel]
kind = mixture
components = 0.5:fbm:0.3, 1:fbm:0.75
[mc]
master_seed = 1
"""
        kernel = parser.parse_config(text).kernel
        assert isinstance(kernel, Mixture)
        assert [w for w, _ in kernel.components()] == [0.5, 1.0]

    def test_mixed_commands_build_their_kernel(self, parser):
        text = """
[run]
command = mixed-convergence
[drift]
kind = smooth
name = tanh
[params]
ns = 2, 4, 8
n = 8
[mc]
master_seed = 3
"""
        config = parser.parse_config(text)
        assert [w for w, _ in config.kernel.components()] == [0.125, 1.0]
        assert config.params['h1'] == 0.3


class TestValidation:
    def test_hurst_out_of_range(self, parser):
        with pytest.raises(ConfigError) as raised:
            parser.parse_config(SMALL_BALL.replace("hurst = 0.7", "hurst = 1.2"))
        errors = raised.value.errors
        assert any(isinstance(e, ValidationError) and "Hurst parameter must lie in (0,1)" in str(e) for e in errors)
        assert "kernel.hurst" in _fields(raised.value)

    def test_missing_seed(self, parser):
        with pytest.raises(ConfigError) as raised:
            parser.parse_config(SMALL_BALL.replace("master_seed = 42", ""))
        assert "mc.master_seed" in _fields(raised.value)

    def test_every_error_is_reported(self, parser):
        text = SMALL_BALL.replace("hurst = 0.7", "hurst = 1.2").replace("master_seed = 42", "n_paths = 1")
        with pytest.raises(ConfigError) as raised:
            parser.parse_config(text)
        fields = _fields(raised.value)
        assert {"kernel.hurst", "mc.master_seed", "mc.n_paths"} <= set(fields)

    def test_unknown_command(self, parser):
        with pytest.raises(ConfigError) as raised:
            parser.parse_config(SMALL_BALL.replace("small-ball", "plot"))
        assert "run.command" in _fields(raised.value)

    def test_unknown_section_and_parameter(self, parser):
        with pytest.raises(ConfigError):
            parser.parse_config(SMALL_BALL + "\n[plots]\ncolor = red\n")
        with pytest.raises(ConfigError) as raised:
            parser.parse_config(SMALL_BALL + "\n[params]\nwidth = 3\n")
        assert "params.width" in _fields(raised.value)

    def test_small_ball_needs_fbm(self, parser):
        with pytest.raises(ConfigError) as raised:
            parser.parse_config(SMALL_BALL.replace("kind = fbm", "kind = rl"))
        assert "kernel.kind" in _fields(raised.value)

    def test_dirichlet_needs_a_countable_set_drift(self, parser):
        text = SMALL_BALL.replace("small-ball", "dirichlet")
        with pytest.raises(ConfigError) as raised:
            parser.parse_config(text)
        assert "drift.kind" in _fields(raised.value)

    def test_alphas_must_decrease(self, parser):
        with pytest.raises(ConfigError) as raised:
            parser.parse_config(SMALL_BALL + "\n[params]\nalphas = 0.1, 0.2, 0.05\n")
        assert "params.alphas" in _fields(raised.value)

    def test_unknown_verdict(self, parser):
        with pytest.raises(ConfigError) as raised:
            parser.parse_config(SMALL_BALL + "\n[verdict]\nstrictness = 1\n")
        assert "verdict.strictness" in _fields(raised.value)


class TestParseErrors:
    def test_line_number_of_bad_line(self, parser):
        with pytest.raises(ConfigError) as raised:
            parser.parse_config("[run]\ncommand = paths\nthis line is bad\n")
        error = raised.value.errors[0]
        assert isinstance(error, ParseError)
        assert error.line_number == 3
        assert "line 3" in str(error)

    def test_key_before_section(self, parser):
        with pytest.raises(ConfigError) as raised:
            parser.parse_config("command = paths\n[run]\n")
        assert raised.value.errors[0].line_number == 1

    def test_duplicate_key(self, parser):
        with pytest.raises(ConfigError) as raised:
            parser.parse_config("[run]\ncommand = paths\ncommand = solve\n")
        assert raised.value.errors[0].line_number == 3


class TestCanonicalForm:
    def test_round_trip(self, parser):
        config = parser.parse_config(SMALL_BALL)
        text = parser.serialize_config(config)
        again = parser.parse_config(text)
        assert again.config_hash == config.config_hash
        assert parser.serialize_config(again) == text
        assert again.params == config.params

    def test_hash_ignores_output_dir_and_threads(self, parser):
        base = parser.parse_config(SMALL_BALL)
        placed = parser.parse_config(SMALL_BALL.replace("command = small-ball",
                                                        "command = small-ball\noutput_dir = /tmp/runs\nthreads = 8"))
        assert placed.config_hash == base.config_hash
        assert placed.threads == 8
        assert placed.output_dir == "/tmp/runs"

    def test_explicit_defaults_hash_like_omitted_ones(self, parser):
        explicit = SMALL_BALL + "\n[grid]\nn_points = 512.0\nhorizon = 1\n"
        assert parser.parse_config(explicit).config_hash == parser.parse_config(SMALL_BALL).config_hash

    def test_seed_changes_the_hash(self, parser):
        other = parser.parse_config(SMALL_BALL.replace("master_seed = 42", "master_seed = 43"))
        assert other.config_hash != parser.parse_config(SMALL_BALL).config_hash

    def test_values_are_normalized(self):
        assert canonical_value("1/2, 3.0 ,inf") == "0.5, 3, inf"
        assert canonical_value(" tanh ") == "tanh"

    def test_load_file(self, parser, tmp_path):
        path = tmp_path / "small_ball.ini"
        path.write_text(SMALL_BALL, encoding="utf-8")
        assert parser.load_file(str(path)).config_hash == parser.parse_config(SMALL_BALL).config_hash


CONFIG_DIR = os.path.join(os.path.dirname(__file__), '..', 'configs')


@pytest.mark.parametrize("name", sorted(os.listdir(CONFIG_DIR)))
def test_shipped_configs_are_valid(parser, name):
    config = parser.load_file(os.path.join(CONFIG_DIR, name))
    assert config.command.replace('-', '_') in name
    assert config.kernel is not None
