"""Parameter studies: lognormal (alpha, beta) sampling, coverage filtering,
distribution refitting, regression against coverage, and the sensing-rule
comparison harness.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import InputError
from .walker import SCENARIO_HOME, run_batch


@dataclass(frozen=True)
class ParamDist:
    """Moments of the lognormal variates themselves (not of the log)."""
    mean_alpha: float = 0.5
    var_alpha: float = 0.7
    mean_beta: float = 0.5
    var_beta: float = 0.05

    def __post_init__(self):
        if self.var_alpha <= 0 or self.var_beta <= 0:
            raise InputError("variances must be positive")
        if self.mean_alpha <= 0 or self.mean_beta <= 0:
            raise InputError("lognormal means must be positive")


def lognormal_log_params(mean, var):
    """Moment-matched log-space (mu, sigma) for a target variate mean/variance."""
    sigma2 = math.log(1.0 + var / mean ** 2)
    mu = math.log(mean) - sigma2 / 2.0
    return mu, math.sqrt(sigma2)


def sample_params(dist, n, seed):
    """Draw n (alpha, beta) pairs; returns (alphas, betas) float arrays."""
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    mu_a, sg_a = lognormal_log_params(dist.mean_alpha, dist.var_alpha)
    mu_b, sg_b = lognormal_log_params(dist.mean_beta, dist.var_beta)
    alphas = rng.lognormal(mu_a, sg_a, size=n)
    betas = rng.lognormal(mu_b, sg_b, size=n)
    return alphas, betas


def filter_by_coverage(results, threshold):
    """Keep feasible (home) routes whose coverage surpasses the threshold."""
    return [r for r in results if r.scenario == SCENARIO_HOME and r.coverage > threshold]


@dataclass
class FitResult:
    mu: float
    sigma: float
    r_squared: float
    sample_n: int

    @property
    def mean(self):
        return math.exp(self.mu + self.sigma ** 2 / 2.0)

    @property
    def variance(self):
        s2 = self.sigma ** 2
        return (math.exp(s2) - 1.0) * math.exp(2.0 * self.mu + s2)

    def to_dict(self):
        return {"mu": self.mu, "sigma": self.sigma, "r_squared": self.r_squared,
                "sample_n": self.sample_n, "mean": self.mean, "variance": self.variance}


def fit_lognormal(samples):
    """Log-space MLE plus a Q-Q goodness number.

    r_squared is the squared Pearson correlation between the sorted samples
    and the fitted quantiles at plotting positions (i - 0.5) / n.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 10:
        raise InputError(f"need at least 10 samples, got {x.size}")
    if np.any(x <= 0):
        raise InputError("lognormal fit needs strictly positive samples")
    logs = np.log(x)
    mu = float(logs.mean())
    sigma = float(logs.std(ddof=0))
    if sigma <= 0:
        raise InputError("degenerate fit: samples are constant")
    probs = (np.arange(1, x.size + 1) - 0.5) / x.size
    fitted = stats.lognorm.ppf(probs, s=sigma, scale=math.exp(mu))
    r = np.corrcoef(np.sort(x), fitted)[0, 1]
    return FitResult(mu=mu, sigma=sigma, r_squared=float(r ** 2), sample_n=int(x.size))


@dataclass
class RegressResult:
    slope: float
    intercept: float
    r_squared: float

    def to_dict(self):
        return {"slope": self.slope, "intercept": self.intercept, "r_squared": self.r_squared}


def regress(params, coverages):
    """Ordinary least squares of coverage on a parameter."""
    x = np.asarray(params, dtype=np.float64)
    y = np.asarray(coverages, dtype=np.float64)
    if x.size != y.size or x.size < 3:
        raise InputError("regression needs equal-length inputs with >= 3 points")
    if np.ptp(x) == 0:
        raise InputError("undefined slope: parameter values are constant")
    fit = stats.linregress(x, y)
    return RegressResult(slope=float(fit.slope), intercept=float(fit.intercept),
                         r_squared=float(fit.rvalue ** 2))


@dataclass
class RuleSummary:
    knn_rule: int
    n: int
    mean_distance_m: float
    mean_coverage: float
    home_rate: float

    def to_dict(self):
        return {"knn_rule": self.knn_rule, "n": self.n, "mean_distance_m": self.mean_distance_m,
                "mean_coverage": self.mean_coverage, "home_rate": self.home_rate}


def knn_rule_comparison(fld, origin, params_base, n_per_rule, seed, jobs=1):
    """Run a common-seed batch per sensing rule and summarize each."""
    if n_per_rule < 1:
        raise InputError(f"n_per_rule must be >= 1, got {n_per_rule}")
    from dataclasses import replace

    summaries = []
    for rule in (4, 8, 12):
        params = replace(params_base, knn_rule=rule)
        routes = run_batch(fld, origin, params, n_per_rule, seed, jobs=jobs, keep_cells=False)
        n_home = sum(1 for r in routes if r.scenario == SCENARIO_HOME)
        summaries.append(RuleSummary(
            knn_rule=rule,
            n=n_per_rule,
            mean_distance_m=float(np.mean([r.distance_m for r in routes])),
            mean_coverage=float(np.mean([r.coverage for r in routes])),
            home_rate=n_home / n_per_rule,
        ))
    return summaries
