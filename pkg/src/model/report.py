import math
import config.app_settings as APP_SETTINGS


class McReport:
    """
    Monte Carlo estimate with its standard error and seed provenance.

    Attributes:
        estimate (float): sample estimate
        std_error (float): standard error >= 0
        n_samples (int): number of samples >= 2
        seed (int): master seed of the ensemble
        extras (dict): estimator-specific additions (e.g. an L^q norm)
    """
    def __init__(self, estimate: float, std_error: float, n_samples: int, seed: int, extras: dict = None):
        self.estimate = float(estimate)
        self.std_error = max(float(std_error), 0.0)
        self.n_samples = int(n_samples)
        self.seed = seed
        self.extras = extras or {}

    @property
    def ci95(self) -> tuple:
        half = APP_SETTINGS.CI95_Z * self.std_error
        return (self.estimate - half, self.estimate + half)

    def within(self, target: float, n_se: float = 3.0) -> bool:
        """True when target lies within n_se standard errors of the estimate."""
        return abs(self.estimate - target) <= n_se * self.std_error

    def to_dict(self) -> dict:
        lo, hi = self.ci95
        row = {
            'estimate': self.estimate,
            'std_error': self.std_error,
            'n_samples': self.n_samples,
            'ci95_lo': lo,
            'ci95_hi': hi,
            'seed': self.seed
        }
        row.update(self.extras)
        return row


class SlopeFit:
    """
    Least-squares line through log-log points.

    Attributes:
        slope (float): fitted slope
        intercept (float): fitted intercept
        r_squared (float): coefficient of determination in [0, 1]
        points (list): (log x, log y) pairs used in the fit
    """
    def __init__(self, slope: float, intercept: float, r_squared: float, points: list):
        self.slope = float(slope)
        self.intercept = float(intercept)
        self.r_squared = min(max(float(r_squared), 0.0), 1.0)
        self.points = [(float(x), float(y)) for x, y in points]

    def to_dict(self) -> dict:
        return {
            'slope': self.slope,
            'intercept': self.intercept,
            'r_squared': self.r_squared,
            'points': self.points
        }


class BesovEstimate:
    """
    Estimate of sup_t (E[Y_t^2] + E[(int_0^t |Y_t - Y_s| / (t-s)^{1+beta} ds)^2]).

    Attributes:
        beta (float): Besov parameter in (0, 1)
        norm_value (float): maximum of the per-t profile
        per_t_profile (list): (t, profile value) pairs
        grid_bias_note (bool): True when the s -> t cell was left out (estimate is a lower bound)
    """
    def __init__(self, beta: float, per_t_profile: list, grid_bias_note: bool):
        self.beta = beta
        self.per_t_profile = per_t_profile
        self.norm_value = max(value for _, value in per_t_profile)
        self.grid_bias_note = grid_bias_note

    def to_dict(self) -> dict:
        return {'beta': self.beta, 'norm_value': self.norm_value, 'grid_bias_note': self.grid_bias_note}


class MomentEstimate:
    """A moment statistic with its jackknife standard error; value None when undefined."""
    def __init__(self, value, std_error):
        self.value = value
        self.std_error = std_error

    @property
    def defined(self) -> bool:
        return self.value is not None and math.isfinite(self.value)

    def within(self, target: float, n_se: float) -> bool:
        return self.defined and abs(self.value - target) <= n_se * self.std_error


class NormalityReport:
    """
    First four moment statistics of a sample.

    Attributes:
        mean (MomentEstimate): sample mean
        variance (MomentEstimate): sample variance
        skewness (MomentEstimate): sample skewness (undefined for zero variance)
        excess_kurtosis (MomentEstimate): sample excess kurtosis (undefined for zero variance)
        n_samples (int): sample size
    """
    def __init__(self, mean, variance, skewness, excess_kurtosis, n_samples: int):
        self.mean = mean
        self.variance = variance
        self.skewness = skewness
        self.excess_kurtosis = excess_kurtosis
        self.n_samples = n_samples

    @property
    def undefined_shape(self) -> bool:
        return not (self.skewness.defined and self.excess_kurtosis.defined)

    def to_dict(self) -> dict:
        row = {'n_samples': self.n_samples}
        for name in ('mean', 'variance', 'skewness', 'excess_kurtosis'):
            moment = getattr(self, name)
            row[name] = moment.value
            row[f"{name}_se"] = moment.std_error
        return row
