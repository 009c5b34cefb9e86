import logging
import math
from dataclasses import dataclass, field

import numpy as np

from core.exceptions import InvalidRate, NegativeQ
from domain.grid import GridSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ConfidenceRegions:
    lower: GridSet
    upper: GridSet
    q: float
    tau_n: float
    alpha: float = None
    statistic_id: str = ''
    diagnostics: dict = field(default_factory=dict)
    samples: object = field(default=None, repr=False)

    @property
    def grid(self):
        return self.upper.grid

    def is_included(self, lower_truth, upper_truth):
        """Whether ``lower ⊆ L`` and ``upper ⊆ U`` both hold."""
        return self.lower.issubset(lower_truth) and self.upper.issubset(upper_truth)


def threshold_crs(mu_hat, tau_n, q, alpha=None, statistic_id='', scale=None, diagnostics=None, samples=None):
    """``lower = {mu_hat / tau_n < -q}``, ``upper = {mu_hat / tau_n > q}``, strict.

    ``scale`` is an optional pointwise standard deviation; the thresholds
    become ``-q * tau_n * scale`` and ``q * tau_n * scale``. ``samples`` are the
    bootstrap values behind ``q``, kept for export.
    """
    q = float(q)
    if math.isnan(q) or q < 0:
        raise NegativeQ(f"Quantile must be nonnegative, got {q}.")
    if not tau_n > 0:
        raise InvalidRate(f"Rate tau_n must be positive, got {tau_n}.")
    sigma = 1.0 if scale is None else np.asarray(getattr(scale, 'values', scale), dtype=float)
    standardized = mu_hat.values / (tau_n * sigma)
    lower = GridSet(mu_hat.grid, standardized < -q)
    upper = GridSet(mu_hat.grid, standardized > q)
    return ConfidenceRegions(lower, upper, q, float(tau_n), alpha, statistic_id, dict(diagnostics or {}), samples)


def eta_rule(n, c=1.0, tau_n=None):
    """Tube half-width ``c * tau_n * max(1, ln n)``.

    Goes to 0 while ``eta_n / tau_n`` grows without bound for ``tau_n = n^{-1/2}``.
    """
    if n < 1:
        raise InvalidRate(f"Replicate count must be at least 1, got {n}.")
    tau_n = 1.0 / math.sqrt(n) if tau_n is None else tau_n
    if not tau_n > 0:
        raise InvalidRate(f"Rate tau_n must be positive, got {tau_n}.")
    if not c > 0:
        raise InvalidRate(f"Tube constant must be positive, got {c}.")
    return c * tau_n * max(1.0, math.log(n))
