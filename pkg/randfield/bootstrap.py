"""
Gaussian multiplier bootstrap for suprema statistics.

Replicate ``b`` of component ``c`` is ``G*_b = n^{-1/2} sum_k g_{b,k} r_k``
where ``r_k`` are the centred residual fields of ``c`` and ``g`` are standard
normal multipliers. Multipliers are attached to observation ids and are
shared by every component, so paired observations keep their cross
correlation. Replicates are produced in fixed blocks, each block from its
own counter-based stream, so results do not depend on the worker count.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from core.exceptions import BadLevel, EmptyAllMasks, GridMismatch, RandomFieldError, UnequalN
from core.parallel import ordered_map
from core.rng import BOOTSTRAP, blocks, stream
from .statistics import mask_array

logger = logging.getLogger(__name__)

MIN_REPLICATES = 100
TIE_TOLERANCE = 1e-9
SD_FLOOR = 1e-3
SINGLE_COMPONENT = 'G'


@dataclass(frozen=True, eq=False)
class SupSamples:
    values: np.ndarray
    B: int
    statistic_id: str
    seed: int
    empty: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True).ravel()
        if values.size != self.B:
            raise RandomFieldError(f"Expected {self.B} bootstrap values, got {values.size}.")
        values.flags.writeable = False
        object.__setattr__(self, 'values', values)

    def to_csv(self, path):
        np.savetxt(path, self.values, fmt='%.17g', header='value', comments='')


@dataclass(frozen=True)
class QuantileEstimate:
    value: float
    level: float
    fallback: bool = False
    ties: int = 0
    samples: SupSamples = field(default=None, compare=False, repr=False)

    def __float__(self):
        return float(self.value)


def _residual_stack(residuals):
    if isinstance(residuals, dict):
        stacks = {name: np.asarray(r, dtype=float) for name, r in residuals.items()}
    else:
        stacks = {SINGLE_COMPONENT: np.asarray(residuals, dtype=float)}
    shapes = {r.shape for r in stacks.values()}
    if any(len(shape) != 2 for shape in shapes):
        raise GridMismatch('Residuals must be (n, points) arrays.')
    if len({shape[0] for shape in shapes}) != 1:
        raise UnequalN(f"Components have different replicate counts: {sorted(s[0] for s in shapes)}.")
    if len({shape[1] for shape in shapes}) != 1:
        raise GridMismatch('Residual components live on grids of different sizes.')
    return stacks


def floored_sd(sd, name='field'):
    """Pointwise standard deviation raised to at least SD_FLOOR times its maximum."""
    sd = np.asarray(sd, dtype=float)
    top = float(np.nanmax(sd)) if sd.size and not np.isnan(sd).all() else 0.0
    floor = SD_FLOOR * top if top > 0 else 1.0
    low = ~(sd >= floor)
    if low.any():
        logger.warning('Studentization floor %.3g engaged at %d points of %s', floor, int(low.sum()), name)
    return np.where(low, floor, sd)


def _studentized(stacks):
    scaled = {}
    for name, r in stacks.items():
        sd = r.std(axis=0, ddof=1) if r.shape[0] > 1 else np.ones(r.shape[1])
        scaled[name] = r / floored_sd(sd, name)
    return scaled


def bootstrap_sup(residuals, masks, recipe, B, seed, studentize=True, ids=None, workers=None,
                  allow_empty=False):
    """Bootstrap distribution of ``recipe`` over multiplier fields.

    ``residuals`` is one ``(n, P)`` array (component name ``G``) or a dict of
    them. Every mask the recipe reads must be present in ``masks``.
    """
    B = int(B)
    if B < MIN_REPLICATES:
        raise RandomFieldError(f"At least {MIN_REPLICATES} bootstrap replicates are needed, got {B}.")
    stacks = _residual_stack(residuals)
    n, points = next(iter(stacks.values())).shape
    ids = np.arange(n) if ids is None else np.asarray(ids, dtype=np.int64)
    if ids.shape != (n,) or (ids.size and ids.min() < 0):
        raise UnequalN(f"Need {n} nonnegative observation ids, got shape {ids.shape}.")

    mask_arrays = {name: mask_array(masks[name]) for name in recipe.mask_names()}
    if any(m.size != points for m in mask_arrays.values()):
        raise GridMismatch('Masks and residuals live on grids of different sizes.')
    statistic_id = str(recipe)
    if mask_arrays and not any(m.any() for m in mask_arrays.values()):
        if not allow_empty:
            raise EmptyAllMasks(f"Every mask of {statistic_id} is empty.")
        logger.warning('All masks of %s are empty; returning -inf samples', statistic_id)
        return SupSamples(np.full(B, -np.inf), B, statistic_id, seed, empty=True)

    if studentize:
        stacks = _studentized(stacks)
    width = int(ids.max()) + 1 if ids.size else 0
    scale = 1.0 / math.sqrt(n)

    def run_block(block):
        index, start, stop = block
        rng = stream(seed, BOOTSTRAP, index)
        weights = rng.standard_normal((stop - start, width))[:, ids]
        fields = {name: scale * (weights @ r) for name, r in stacks.items()}
        return recipe.evaluate(fields, mask_arrays)

    parts = ordered_map(run_block, blocks(B), workers=workers)
    values = np.concatenate([np.atleast_1d(p) for p in parts])
    logger.debug('Bootstrap of %s: B=%d, n=%d, %d blocks', statistic_id, B, n, len(parts))
    return SupSamples(values, B, statistic_id, seed, empty=bool(np.all(np.isneginf(values))))


def quantile(samples, level):
    """Order statistic of rank ``ceil(B * level)``; 0 with a fallback flag when it is not finite."""
    level = float(level)
    if not 0 < level < 1:
        raise BadLevel(f"Quantile level must lie in (0, 1), got {level}.")
    values = np.sort(samples.values)
    rank = max(1, math.ceil(round(samples.B * level, 9)))
    value = float(values[rank - 1])
    if not math.isfinite(value):
        logger.warning('Quantile of %s at %.3g is %s; using q = 0', samples.statistic_id, level, value)
        return QuantileEstimate(0.0, level, fallback=True, samples=samples)
    # values sharing the order statistic; more than one means an atom at q
    ties = int(np.count_nonzero(np.abs(values - value) <= TIE_TOLERANCE))
    return QuantileEstimate(value, level, ties=ties, samples=samples)
