import logging
import math
from dataclasses import dataclass

import numpy as np

from domain.grid import ScalarField

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EstimatorResult:
    mean_hat: ScalarField
    tau_n: float
    sd_hat: ScalarField
    residuals: np.ndarray
    n: int

    @property
    def grid(self):
        return self.mean_hat.grid


def rate(n):
    """Default scaling rate ``tau_n = 1 / sqrt(n)``."""
    return 1.0 / math.sqrt(n)


def estimate(sample):
    """Sample mean, rate, pointwise standard deviation and centred replicates.

    With a single replicate the standard deviation is undefined and comes
    back as an all-NaN sentinel field.
    """
    data = sample.data
    n = data.shape[0]
    mean = data.mean(axis=0)
    residuals = data - mean
    residuals.flags.writeable = False
    if n >= 2:
        sd_hat = ScalarField(sample.grid, data.std(axis=0, ddof=1))
    else:
        logger.debug('Single replicate: standard deviation left undefined')
        sd_hat = ScalarField(sample.grid, np.full(sample.grid.size, np.nan), sentinel=True)
    return EstimatorResult(ScalarField(sample.grid, mean), rate(n), sd_hat, residuals, n)
