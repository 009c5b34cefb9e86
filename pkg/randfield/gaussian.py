"""
Gaussian random field simulation on grids.

Small grids (up to DENSE_LIMIT points) use an exact Cholesky factor of the
covariance matrix. Larger grids convolve padded white noise with a Gaussian
kernel and rescale to the target variance. A squared-exponential covariance
with length scale l is the same field as smoothed white noise with kernel
width l / sqrt(2), so both kinds go through whichever path the grid size
picks.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import linalg, ndimage
from scipy.spatial.distance import cdist

from core.exceptions import CovarianceNotPSD, GridMismatch, InvalidModel
from core.rng import SAMPLE, stream
from domain.grid import ScalarField

logger = logging.getLogger(__name__)

COVARIANCE_KINDS = ('se', 'smoothed_white')
DENSE_LIMIT = 4096
JITTER_LADDER = (0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)
KERNEL_TRUNCATE = 4.0


@dataclass(frozen=True, eq=False)
class GaussianFieldModel:
    mean: ScalarField
    kind: str = 'se'
    ell: float = 0.2
    var: float = 1.0
    kernel_width: float = 0.05
    rho: float = 0.0

    def __post_init__(self):
        if self.kind not in COVARIANCE_KINDS:
            raise InvalidModel(f"Covariance kind must be one of {COVARIANCE_KINDS}, got {self.kind!r}.")
        if not self.var > 0:
            raise InvalidModel(f"Variance must be positive, got {self.var}.")
        if self.kind == 'se' and not self.ell > 0:
            raise InvalidModel(f"Length scale must be positive, got {self.ell}.")
        if self.kind == 'smoothed_white' and not self.kernel_width > 0:
            raise InvalidModel(f"Kernel width must be positive, got {self.kernel_width}.")
        if not -1 <= self.rho <= 1:
            raise InvalidModel(f"Correlation must lie in [-1, 1], got {self.rho}.")

    @property
    def grid(self):
        return self.mean.grid

    @property
    def smoothing_width(self):
        """Kernel width of the equivalent smoothed white noise."""
        return self.ell / math.sqrt(2) if self.kind == 'se' else self.kernel_width

    def covariance(self, points_a, points_b=None):
        points_b = points_a if points_b is None else points_b
        sq = cdist(points_a, points_b, 'sqeuclidean')
        return self.var * np.exp(-sq / (4 * self.smoothing_width ** 2))

    def with_mean(self, mean):
        return GaussianFieldModel(mean, self.kind, self.ell, self.var, self.kernel_width, self.rho)


@dataclass(frozen=True, eq=False)
class FieldSample:
    grid: object
    data: np.ndarray
    seed: int

    def __post_init__(self):
        data = np.array(self.data, dtype=float, copy=True)
        if data.ndim != 2 or data.shape[1] != self.grid.size or data.shape[0] < 1:
            raise GridMismatch(f"Sample data must have shape (n >= 1, {self.grid.size}), got {data.shape}.")
        data.flags.writeable = False
        object.__setattr__(self, 'data', data)

    @property
    def n(self):
        return self.data.shape[0]

    def replicate(self, k):
        return ScalarField(self.grid, self.data[k])


@lru_cache(maxsize=16)
def _cholesky_factor(grid, width, var):
    points = grid.coordinates
    cov = var * np.exp(-cdist(points, points, 'sqeuclidean') / (4 * width ** 2))
    eye = np.eye(len(points))
    for jitter in JITTER_LADDER:
        try:
            factor = linalg.cholesky(cov + jitter * var * eye, lower=True)
        except linalg.LinAlgError:
            continue
        if jitter > 0:
            logger.warning('Covariance on %d points needed jitter %.0e to factor', len(points), jitter)
        else:
            logger.debug('Factored covariance on %d points without jitter', len(points))
        factor.flags.writeable = False
        return factor
    raise CovarianceNotPSD(
        f"Covariance (width {width}, variance {var}) on {len(points)} points is not positive "
        f"definite even with jitter {JITTER_LADDER[-1]}."
    )


def _padding(grid, width):
    return tuple(int(math.ceil(KERNEL_TRUNCATE * width / h)) + 1 for h in grid.spacing)


def _white_shape(grid, widths):
    """Shape of one white-noise input for a grid and the widest kernel in use."""
    if grid.size <= DENSE_LIMIT:
        return (grid.size,)
    pad = _padding(grid, max(widths))
    return tuple(p + 2 * q for p, q in zip(grid.points_per_axis, pad))


def _color(white, model, grid):
    """Turn white noise of shape (n, *white_shape) into field noise of shape (n, P)."""
    width = model.smoothing_width
    if grid.size <= DENSE_LIMIT:
        return white @ _cholesky_factor(grid, width, float(model.var)).T
    padded = white.shape[1:]
    sigma = (0,) + tuple(width / h for h in grid.spacing)
    smooth = ndimage.gaussian_filter(white, sigma=sigma, mode='constant', truncate=KERNEL_TRUNCATE)
    impulse = np.zeros(padded)
    impulse[tuple(s // 2 for s in padded)] = 1.0
    kernel = ndimage.gaussian_filter(impulse, sigma=sigma[1:], mode='constant', truncate=KERNEL_TRUNCATE)
    scale = math.sqrt(model.var) / math.sqrt(float((kernel ** 2).sum()))
    crop = tuple(slice((s - p) // 2, (s - p) // 2 + p) for s, p in zip(padded, grid.points_per_axis))
    return scale * smooth[(slice(None),) + crop].reshape(white.shape[0], grid.size)


def _check_grid(model, grid):
    if model.grid != grid:
        raise GridMismatch('Model mean and sampling grid differ.')


def sample_fields(model, grid, n, seed, component=0):
    """``n`` independent draws of the field; bit-identical for equal arguments."""
    _check_grid(model, grid)
    n = int(n)
    if n < 1:
        raise InvalidModel(f"Replicate count must be at least 1, got {n}.")
    rng = stream(seed, SAMPLE, component)
    white = rng.standard_normal((n,) + _white_shape(grid, [model.smoothing_width]))
    data = model.mean.values + _color(white, model, grid)
    logger.debug('Sampled %d fields on %d points (seed %d)', n, grid.size, seed)
    return FieldSample(grid, data, seed)


def mixing_matrix(m, rho):
    """Square root of the equicorrelation matrix with off-diagonal ``rho``."""
    corr = np.full((m, m), float(rho))
    np.fill_diagonal(corr, 1.0)
    eigenvalues, vectors = np.linalg.eigh(corr)
    if eigenvalues.min() < -1e-12:
        raise InvalidModel(f"Correlation {rho} is not valid for {m} components.")
    return vectors * np.sqrt(np.clip(eigenvalues, 0, None))


def sample_correlated(models, grid, n, seed, rho=None):
    """One sample per model; the white inputs of the components share correlation ``rho``."""
    models = list(models)
    if not models:
        raise InvalidModel('At least one model is needed.')
    for model in models:
        _check_grid(model, grid)
    rho = models[0].rho if rho is None else rho
    if not -1 <= rho <= 1:
        raise InvalidModel(f"Correlation must lie in [-1, 1], got {rho}.")
    shape = (int(n),) + _white_shape(grid, [m.smoothing_width for m in models])
    whites = np.stack([stream(seed, SAMPLE, k).standard_normal(shape) for k in range(len(models))])
    mixed = np.tensordot(mixing_matrix(len(models), rho), whites, axes=1)
    samples = []
    for model, white in zip(models, mixed):
        samples.append(FieldSample(grid, model.mean.values + _color(white, model, grid), seed))
    logger.debug('Sampled %d correlated components (rho=%.3g), n=%d', len(models), rho, n)
    return samples
