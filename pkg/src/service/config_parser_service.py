"""
Experiment configs: sectioned key = value text parsed with configparser, validated
into an ExperimentConfig and serialized canonically for hashing.
"""
import configparser
import hashlib
import logging
import math
from fractions import Fraction
from model.drift import (
    AffineFunction,
    ConstantFunction,
    DirichletDrift,
    DirichletTerm,
    FiniteSetApprox,
    IndicatorComplementDrift,
    PiecewiseDrift,
    SignDrift,
)
from model.errors import ConfigError, DomainError, ParseError, ValidationError
from model.experiment import ExperimentConfig
from model.kernel import FbmVolterra, Mixture, RiemannLiouville, stabilized_mixture
from service import drift_service
import config.app_settings as APP_SETTINGS

SECTIONS = ('run', 'kernel', 'grid', 'mc', 'drift', 'params', 'verdict')

# Keys of [run] that change where or how fast a run happens, never what it computes
UNHASHED_RUN_KEYS = ('output_dir', 'threads')

PARAM_TYPES = {
    'method': 'str',
    'x0': 'float',
    'x': 'float',
    't': 'float',
    'epsilon': 'float',
    'hurst': 'float',
    'h1': 'float',
    'h2': 'float',
    'beta': 'float',
    'stable_beta': 'float',
    'rough_beta': 'float',
    'n': 'int',
    'ladder_paths': 'int',
    'oracle_points': 'int',
    'levels': 'int_list',
    'ns': 'int_list',
    'refinements': 'int_list',
    'eps_grid': 'float_list',
    't_grid': 'float_list',
    'alphas': 'float_list',
    'shapes': 'str_list',
}

SMOOTH_PARAM_KEYS = ('value', 'slope', 'intercept', 'level', 'scale', 'amplitude')


def _number(token: str) -> float:
    """Parse a real; fractions such as 1/3 and inf are accepted."""
    token = token.strip()
    if token.lower() in ('inf', '+inf', 'infinity'):
        return math.inf
    if token.lower() in ('-inf', '-infinity'):
        return -math.inf
    return float(Fraction(token))


def _canonical_token(token: str) -> str:
    token = token.strip()
    try:
        value = _number(token)
    except (ValueError, ZeroDivisionError):
        return token
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def canonical_value(raw) -> str:
    """Normalize a value string (or list) token by token."""
    if isinstance(raw, (list, tuple)):
        tokens = [str(item) for item in raw]
    else:
        tokens = str(raw).split(',')
    return ", ".join(_canonical_token(token) for token in tokens if token.strip() != "")


def canonical_text(sections: dict, for_hash: bool = False) -> str:
    """
    Sorted sections and keys with normalized values.

    Args:
        sections (dict): section -> {key: value string}
        for_hash (bool): leave out the run keys that do not affect results

    Returns:
        str: the canonical serialization
    """
    lines = []
    for section in sorted(sections):
        entries = {
            key: value for key, value in sections[section].items()
            if not (for_hash and section == 'run' and key in UNHASHED_RUN_KEYS)
        }
        if not entries:
            continue
        lines.append(f"[{section}]")
        lines.extend(f"{key} = {entries[key]}" for key in sorted(entries))
        lines.append("")
    return "\n".join(lines)


def config_hash(sections: dict) -> str:
    """First 12 hex digits of the SHA-256 of the hashed canonical text."""
    return hashlib.sha256(canonical_text(sections, for_hash=True).encode('utf-8')).hexdigest()[:12]


class _Reader:
    """Typed access to normalized sections that records every problem instead of raising."""
    def __init__(self, sections: dict):
        self.sections = sections
        self.errors = []

    def fail(self, message: str, field: str):
        self.errors.append(ValidationError(message, field))

    def raw(self, section: str, key: str):
        return self.sections.get(section, {}).get(key)

    def real(self, section: str, key: str, default=None, required: bool = False):
        value = self.raw(section, key)
        if value is None:
            if required:
                self.fail(f"missing required value '{key}'", f"{section}.{key}")
            return default
        try:
            return _number(value)
        except (ValueError, ZeroDivisionError):
            self.fail(f"'{value}' is not a number", f"{section}.{key}")
            return default

    def integer(self, section: str, key: str, default=None, required: bool = False):
        if self.raw(section, key) is None:
            return self.real(section, key, default, required)
        value = self.real(section, key)
        if value is None:
            return default
        if not float(value).is_integer():
            self.fail(f"'{self.raw(section, key)}' is not an integer", f"{section}.{key}")
            return default
        return int(value)

    def reals(self, section: str, key: str, default=None):
        value = self.raw(section, key)
        if value is None:
            return default
        try:
            return [_number(token) for token in value.split(',')]
        except (ValueError, ZeroDivisionError):
            self.fail(f"'{value}' is not a list of numbers", f"{section}.{key}")
            return default

    def text(self, section: str, key: str, default=None, required: bool = False):
        value = self.raw(section, key)
        if value is None and required:
            self.fail(f"missing required value '{key}'", f"{section}.{key}")
        return default if value is None else value


class ConfigParserService:
    """
    Parses, validates and serializes experiment configs.

    Attributes:
        logger (logging.Logger): logger for this class
    """
    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def load_file(self, path: str) -> ExperimentConfig:
        with open(path, 'r', encoding='utf-8') as f:
            return self.parse_config(f.read())

    def parse_config(self, text: str) -> ExperimentConfig:
        """
        Parse and validate a config, collecting every error before failing.

        Args:
            text (str): sectioned key = value text

        Returns:
            ExperimentConfig: validated config with defaults filled in and its hash
        """
        sections = self._read_sections(text)
        reader = _Reader(sections)

        command = reader.text('run', 'command', required=True)
        if command is not None and command not in APP_SETTINGS.COMMANDS:
            reader.fail(f"unknown command '{command}', expected one of {', '.join(APP_SETTINGS.COMMANDS)}",
                        'run.command')
            command = None

        horizon = reader.real('grid', 'horizon', APP_SETTINGS.DEFAULT_HORIZON)
        if horizon is not None and not (horizon > 0.0 and math.isfinite(horizon)):
            reader.fail("horizon must be a positive finite time", 'grid.horizon')
        n_points = reader.integer('grid', 'n_points', APP_SETTINGS.DEFAULT_N_POINTS)
        if n_points is not None and n_points < 2:
            reader.fail("a grid needs at least 2 points", 'grid.n_points')
        n_paths = reader.integer('mc', 'n_paths', APP_SETTINGS.DEFAULT_N_PATHS)
        if n_paths is not None and n_paths < 2:
            reader.fail("Monte Carlo runs need at least 2 paths", 'mc.n_paths')
        master_seed = reader.integer('mc', 'master_seed', required=True)
        if master_seed is not None and master_seed < 0:
            reader.fail("master_seed must be a non-negative integer", 'mc.master_seed')
        threads = reader.integer('run', 'threads')
        if threads is not None and threads < 1:
            reader.fail("threads must be a positive integer", 'run.threads')

        params = self._read_params(reader, command, horizon, n_points)
        verdict = self._read_verdict(reader)

        kernel = None
        drift = None
        if command is not None and horizon is not None:
            if command in APP_SETTINGS.MIXED_COMMANDS:
                kernel = self._mixed_kernel(reader, params, horizon)
            elif command in APP_SETTINGS.KERNEL_COMMANDS:
                kernel = self._build_kernel(reader, horizon)
            if command in APP_SETTINGS.DRIFT_COMMANDS or 'drift' in sections:
                drift = self._build_drift(reader)
            self._check_command(reader, command, params, kernel, drift, horizon, n_points)

        if reader.errors:
            for error in reader.errors:
                self.logger.error(f"Config error: {error}")
            raise ConfigError(reader.errors)

        # defaults become part of the canonical form so minimal and explicit configs hash alike
        sections.setdefault('grid', {}).update({
            'horizon': canonical_value(str(horizon)),
            'n_points': canonical_value(str(n_points))
        })
        sections.setdefault('mc', {})['n_paths'] = canonical_value(str(n_paths))
        sections['params'] = {key: canonical_value(_as_text(value)) for key, value in params.items()}
        sections['verdict'] = {key: canonical_value(repr(float(value))) for key, value in verdict.items()}

        digest = config_hash(sections)
        self.logger.info(f"Parsed '{command}' config {digest}")
        return ExperimentConfig(
            command=command,
            sections=sections,
            kernel=kernel,
            drift=drift,
            horizon=horizon,
            n_points=n_points,
            n_paths=n_paths,
            master_seed=master_seed,
            output_dir=sections.get('run', {}).get('output_dir'),
            threads=threads,
            params=params,
            verdict=verdict,
            config_hash=digest
        )

    def serialize_config(self, config: ExperimentConfig) -> str:
        """Canonical text of a parsed config; parsing it again yields the same config."""
        return canonical_text(config.sections)

    #-------------------------------------
    # Reading
    #-------------------------------------
    def _read_sections(self, text: str) -> dict:
        parser = configparser.ConfigParser(
            interpolation=None,
            comment_prefixes=('#',),
            inline_comment_prefixes=('#',),
            strict=True
        )
        parser.optionxform = str
        errors = []
        try:
            parser.read_string(text)
        except configparser.MissingSectionHeaderError as e:
            errors.append(ParseError("key = value line before any [section] header", e.lineno))
        except configparser.ParsingError as e:
            errors.extend(ParseError(f"cannot parse '{line.strip()}'", lineno) for lineno, line in e.errors)
        except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as e:
            errors.append(ParseError(e.message, e.lineno))
        if errors:
            raise ConfigError(errors)

        sections = {}
        for name in parser.sections():
            if name not in SECTIONS:
                errors.append(ValidationError(f"unknown section [{name}]", name))
                continue
            sections[name] = {key.strip().lower(): canonical_value(value) for key, value in parser.items(name)}
        if errors:
            raise ConfigError(errors)
        return sections

    def _read_params(self, reader: _Reader, command: str, horizon: float, n_points: int) -> dict:
        params = {}
        defaults = dict(APP_SETTINGS.COMMAND_PARAM_DEFAULTS.get(command, {}))
        if command in ('small-ball', 'cgp-check'):
            defaults.setdefault('t', horizon)
        if command == 'besov' and n_points is not None:
            defaults.setdefault('refinements', [max(2, n_points // 4), max(2, n_points // 2), n_points])

        for key in reader.sections.get('params', {}):
            if key not in PARAM_TYPES:
                reader.fail(f"unknown parameter '{key}'", f"params.{key}")
        keys = set(defaults) | set(reader.sections.get('params', {}))
        for key in sorted(keys):
            kind = PARAM_TYPES.get(key)
            default = defaults.get(key)
            if kind == 'float':
                value = reader.real('params', key, default)
            elif kind == 'int':
                value = reader.integer('params', key, default)
            elif kind == 'float_list':
                value = reader.reals('params', key, default)
            elif kind == 'int_list':
                value = reader.reals('params', key, default)
                if value is not None and any(not float(v).is_integer() for v in value):
                    reader.fail("expected a list of integers", f"params.{key}")
                    value = None
                value = None if value is None else [int(v) for v in value]
            elif kind == 'str_list':
                raw = reader.raw('params', key)
                value = default if raw is None else [token.strip() for token in raw.split(',')]
            elif kind == 'str':
                value = reader.text('params', key, default)
            else:
                continue
            if value is not None:
                params[key] = value
        return params

    def _read_verdict(self, reader: _Reader) -> dict:
        verdict = dict(APP_SETTINGS.VERDICT_DEFAULTS)
        for key in reader.sections.get('verdict', {}):
            if key not in verdict:
                reader.fail(f"unknown verdict threshold '{key}'", f"verdict.{key}")
                continue
            verdict[key] = reader.real('verdict', key, verdict[key])
        return verdict

    #-------------------------------------
    # Kernels and drifts
    #-------------------------------------
    def _build_kernel(self, reader: _Reader, horizon: float):
        kind = reader.text('kernel', 'kind', required=True)
        kernel_horizon = reader.real('kernel', 'horizon', horizon)
        try:
            if kind in ('fbm', 'rl'):
                hurst = reader.real('kernel', 'hurst', required=True)
                if hurst is None:
                    return None
                leaf = FbmVolterra if kind == 'fbm' else RiemannLiouville
                return leaf(hurst, kernel_horizon)
            if kind == 'mixture':
                return self._mixture_kernel(reader, kernel_horizon)
            if kind is not None:
                reader.fail(f"unknown kernel kind '{kind}', expected fbm, rl or mixture", 'kernel.kind')
        except DomainError as e:
            reader.fail(str(e), 'kernel.hurst')
        return None

    def _mixture_kernel(self, reader: _Reader, horizon: float):
        raw = reader.text('kernel', 'components', required=True)
        if raw is None:
            return None
        weighted = []
        for token in raw.split(','):
            parts = [part.strip() for part in token.split(':')]
            if len(parts) != 3 or parts[1] not in ('fbm', 'rl'):
                reader.fail(f"component '{token.strip()}' is not weight:kind:hurst", 'kernel.components')
                return None
            try:
                weight, hurst = _number(parts[0]), _number(parts[2])
            except (ValueError, ZeroDivisionError):
                reader.fail(f"component '{token.strip()}' has a non-numeric weight or Hurst index", 'kernel.components')
                return None
            leaf = FbmVolterra if parts[1] == 'fbm' else RiemannLiouville
            weighted.append((weight, leaf(hurst, horizon)))
        return Mixture(weighted, horizon)

    def _mixed_kernel(self, reader: _Reader, params: dict, horizon: float):
        try:
            return stabilized_mixture(params.get('h1'), params.get('h2'), params.get('n', 1), horizon)
        except (DomainError, TypeError) as e:
            reader.fail(str(e), 'params.h1')
            return None

    def _build_drift(self, reader: _Reader):
        kind = reader.text('drift', 'kind', required=True)
        try:
            if kind == 'sign':
                return SignDrift(reader.real('drift', 'scale', 1.0), reader.real('drift', 'shift', 0.0))
            if kind == 'smooth':
                name = reader.text('drift', 'name', required=True)
                if name is None:
                    return None
                extras = {key: reader.real('drift', key) for key in SMOOTH_PARAM_KEYS if reader.raw('drift', key)}
                return drift_service.smooth_drift(name, **extras)
            if kind == 'piecewise':
                return self._piecewise_drift(reader)
            if kind == 'dirichlet':
                members = self._finite_set(reader)
                value = reader.real('drift', 'value', 1.0)
                exponent = reader.real('drift', 'exponent', math.inf)
                return DirichletDrift([DirichletTerm(ConstantFunction(value), exponent, members)])
            if kind == 'indicator_complement':
                excluded = reader.reals('drift', 'excluded', [0.0, 1.0 / 3.0])
                return IndicatorComplementDrift(FiniteSetApprox(excluded, reader.real('drift', 'fattening', 0.0)))
            if kind is not None:
                reader.fail(f"unknown drift kind '{kind}'", 'drift.kind')
        except DomainError as e:
            reader.fail(str(e), f"drift.{kind}")
        return None

    def _finite_set(self, reader: _Reader) -> FiniteSetApprox:
        fattening = reader.real('drift', 'fattening', 0.0)
        elements = reader.reals('drift', 'elements')
        if elements is not None:
            return FiniteSetApprox(elements, fattening)
        return FiniteSetApprox.rationals(
            reader.integer('drift', 'max_numerator', 8),
            reader.integer('drift', 'max_denominator', 8),
            fattening
        )

    def _piecewise_drift(self, reader: _Reader):
        breakpoints = reader.reals('drift', 'breakpoints', [])
        raw = reader.text('drift', 'pieces', required=True)
        growth = reader.real('drift', 'growth_constant', required=True)
        if raw is None or growth is None:
            return None
        pieces = []
        for token in raw.split(','):
            parts = token.strip().split(':')
            try:
                if len(parts) == 1:
                    pieces.append(ConstantFunction(_number(parts[0])))
                elif len(parts) == 2:
                    pieces.append(AffineFunction(_number(parts[0]), _number(parts[1])))
                else:
                    raise ValueError(token)
            except (ValueError, ZeroDivisionError):
                reader.fail(f"piece '{token.strip()}' is not 'value' or 'intercept:slope'", 'drift.pieces')
                return None
        return PiecewiseDrift(breakpoints, pieces, growth, reader.real('drift', 'bound'))

    #-------------------------------------
    # Command-level checks
    #-------------------------------------
    def _check_command(self, reader: _Reader, command: str, params: dict, kernel, drift, horizon: float,
                       n_points: int):
        if command in APP_SETTINGS.KERNEL_COMMANDS and 'kernel' not in reader.sections:
            reader.fail(f"command '{command}' needs a [kernel] section", 'kernel')
        if command in APP_SETTINGS.DRIFT_COMMANDS and 'drift' not in reader.sections:
            reader.fail(f"command '{command}' needs a [drift] section", 'drift')

        if command == 'paths' and params.get('method') not in ('volterra', 'exact', 'both'):
            reader.fail("method must be volterra, exact or both", 'params.method')
        if command == 'dirichlet' and drift is not None and drift.kind not in ('dirichlet', 'indicator_complement'):
            reader.fail("the dirichlet command needs a dirichlet or indicator_complement drift", 'drift.kind')
        if command in ('small-ball', 'cgp-check') and kernel is not None and not isinstance(kernel, FbmVolterra):
            reader.fail(f"command '{command}' needs an fbm kernel", 'kernel.kind')
        for key in ('t', 'epsilon'):
            value = params.get(key)
            if value is not None and not 0.0 < value <= horizon:
                reader.fail(f"{key} must lie in (0, T]", f"params.{key}")
        if command == 'cgp-check' and params.get('epsilon', 0.0) >= params.get('t', horizon):
            reader.fail("epsilon must be smaller than t", 'params.epsilon')
        if command == 'verify-kernel':
            for t in params.get('t_grid', []):
                if not 0.0 < t <= horizon:
                    reader.fail(f"t={t} outside (0, T]", 'params.t_grid')
                elif any(not 0.0 < e <= t for e in params.get('eps_grid', [])):
                    reader.fail(f"eps_grid must lie in (0, t] for t={t}", 'params.eps_grid')
        for key in ('beta', 'stable_beta', 'rough_beta'):
            value = params.get(key)
            if value is not None and not 0.0 < value < 1.0:
                reader.fail(f"{key} must lie in (0,1)", f"params.{key}")
        if command == 'mixed-convergence' and params.get('beta', 0.0) >= params.get('h1', 1.0):
            reader.fail("beta must lie in (0, h1)", 'params.beta')
        for key in ('ns', 'levels', 'refinements'):
            values = params.get(key)
            if values is not None and (not values or min(values) < 1
                                       or any(b <= a for a, b in zip(values, values[1:]))):
                reader.fail(f"{key} must be increasing positive integers", f"params.{key}")
        for shape in params.get('shapes', []):
            if shape not in APP_SETTINGS.MOLLIFIER_SHAPES:
                reader.fail(f"unknown mollifier shape '{shape}'", 'params.shapes')
        alphas = params.get('alphas')
        if alphas is not None and (min(alphas) <= 0.0 or any(b >= a for a, b in zip(alphas, alphas[1:]))):
            reader.fail("alphas must be positive and strictly decreasing", 'params.alphas')


def _as_text(value) -> str:
    if isinstance(value, (list, tuple)):
        return ", ".join(_as_text(item) for item in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)
