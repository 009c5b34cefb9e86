"""
Confidence-region constructors for a single piecewise field, the absolute
value and conjunctions/disjunctions of several fields.

Each constructor estimates the target, its boundary sets and a bootstrap
quantile, then thresholds the estimate. All of them are pure given the
samples and the BootstrapConfig.
"""

import itertools
import logging
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from core.exceptions import GridMismatch, RegionError, UnequalN
from domain.grid import pointwise_max, pointwise_min, tube_set
from piecewise.fields import PartitionLabeling
from randfield.bootstrap import QuantileEstimate, bootstrap_sup, floored_sd, quantile
from randfield.estimators import estimate
from randfield.statistics import Abs, Field, Max, MaxOf, Min, Neg, Sup
from .boundaries import estimate_u_sets
from .thresholds import eta_rule, threshold_crs

logger = logging.getLogger(__name__)

MODES = ('min', 'max')


@dataclass(frozen=True)
class BootstrapConfig:
    B: int = None
    seed: int = 0
    studentize: bool = False
    workers: int = None
    eta_c: float = None
    q_override: float = None

    def __post_init__(self):
        if self.B is None:
            object.__setattr__(self, 'B', int(settings.EXCURSION_BOOTSTRAP_B))
        if self.eta_c is None:
            object.__setattr__(self, 'eta_c', float(settings.EXCURSION_ETA_C))


def check_alpha(alpha):
    if not 0 < alpha < 1:
        raise RegionError(f"alpha must lie in (0, 1), got {alpha}.")
    return float(alpha)


def bootstrap_quantile(residuals, masks, terms, alpha, boot, studentize=None):
    """``1 - alpha`` quantile of the maximum of ``terms`` over multiplier fields.

    Terms over empty masks must already be dropped; with none left the
    quantile falls back to 0. Returns the estimate and the statistic id.
    """
    level = 1.0 - alpha
    if boot.q_override is not None:
        return QuantileEstimate(float(boot.q_override), level), 'override'
    if not terms:
        logger.warning('No boundary points were estimated; using q = 0')
        return QuantileEstimate(0.0, level, fallback=True), 'empty'
    recipe = terms[0] if len(terms) == 1 else MaxOf(terms)
    studentize = boot.studentize if studentize is None else studentize
    samples = bootstrap_sup(residuals, masks, recipe, boot.B, boot.seed, studentize=studentize,
                            workers=boot.workers, allow_empty=True)
    return quantile(samples, level), samples.statistic_id


def sided_terms(expr, tag, boundary, key, masks):
    """``sup_{u+} -expr`` and ``sup_{u-} expr`` for piece ``key``; registers their masks."""
    terms = []
    for sign, sets, wrap in (('+', boundary.u_plus, Neg), ('-', boundary.u_minus, lambda e: e)):
        mask = sets[key]
        if mask.is_empty():
            continue
        name = f"u{sign}{tag}"
        masks[name] = mask
        terms.append(Sup(wrap(expr), name))
    return terms


def _diagnostics(boundary, partition, q, statistic_id, boot, tol_n):
    return {
        'eta_n': boundary.eta_n,
        'tol_n': tol_n,
        'tube_size': boundary.tube.count(),
        'piece_sizes': {str(key): piece.count() for key, piece in partition.pieces().items()},
        'fallback': q.fallback,
        'ties_at_q': q.ties,
        'B': boot.B,
        'seed': boot.seed,
        'statistic_id': statistic_id,
    }


def cr_piecewise(sample, alpha, boot, partition=None):
    """Regions for ``{mu > 0}`` and ``{mu < 0}`` of one piecewise continuous mean.

    The statistic is the maximum over pieces of ``sup_{u+} -G`` and ``sup_{u-} G``.
    """
    alpha = check_alpha(alpha)
    result = estimate(sample)
    partition = PartitionLabeling.single(sample.grid) if partition is None else partition
    if partition.grid != sample.grid:
        raise GridMismatch('Partition and sample live on different grids.')
    eta_n = eta_rule(result.n, boot.eta_c, result.tau_n)
    boundary = estimate_u_sets(result.mean_hat, partition, result.tau_n, eta_n)
    masks, terms = {}, []
    for key in partition.keys:
        terms += sided_terms(Field('G'), f":{key}", boundary, key, masks)
    q, statistic_id = bootstrap_quantile(result.residuals, masks, terms, alpha, boot)
    scale = floored_sd(result.sd_hat.values, 'G') if boot.studentize else None
    diagnostics = _diagnostics(boundary, partition, q, statistic_id, boot, eta_n)
    regions = threshold_crs(result.mean_hat, result.tau_n, float(q), alpha, statistic_id, scale, diagnostics,
                            samples=q.samples)
    logger.debug('Piecewise regions: q=%.4g, |U|=%d, |L|=%d', float(q), regions.upper.count(), regions.lower.count())
    return regions, diagnostics


def cr_absolute(sample, alpha, boot):
    """Regions for ``{|gamma| > 0}``; the statistic is ``sup |G|`` over the estimated zero set."""
    alpha = check_alpha(alpha)
    result = estimate(sample)
    eta_n = eta_rule(result.n, boot.eta_c, result.tau_n)
    zero_set = tube_set(result.mean_hat, -eta_n, eta_n)
    masks = {'zero': zero_set}
    terms = [] if zero_set.is_empty() else [Sup(Abs(Field('G')), 'zero')]
    q, statistic_id = bootstrap_quantile(result.residuals, masks, terms, alpha, boot)
    scale = floored_sd(result.sd_hat.values, 'G') if boot.studentize else None
    diagnostics = {
        'eta_n': eta_n,
        'tol_n': eta_n,
        'tube_size': zero_set.count(),
        'fallback': q.fallback,
        'ties_at_q': q.ties,
        'B': boot.B,
        'seed': boot.seed,
        'statistic_id': statistic_id,
    }
    regions = threshold_crs(abs(result.mean_hat), result.tau_n, float(q), alpha, statistic_id, scale, diagnostics,
                            samples=q.samples)
    # |gamma_hat| >= 0 and q >= 0, so the lower region is always empty.
    return regions, diagnostics


def _check_samples(samples):
    if not samples:
        raise RegionError('At least one sample is needed.')
    grid, n = samples[0].grid, samples[0].n
    for sample in samples[1:]:
        if sample.grid != grid:
            raise GridMismatch('All samples must share one grid.')
        if sample.n != n:
            raise UnequalN(f"All samples need the same replicate count, got {[s.n for s in samples]}.")


def subset_keys(m):
    """Nonempty index subsets of ``1..m``, as sorted tuples."""
    indices = range(1, m + 1)
    return tuple(c for size in range(1, m + 1) for c in itertools.combinations(indices, size))


def active_partition(estimates, tol, mode='min'):
    """Label each point by the set of components within ``tol`` of the min (or max)."""
    values = np.stack([e.values for e in estimates])
    if mode == 'min':
        active = values <= values.min(axis=0) + tol
    else:
        active = values >= values.max(axis=0) - tol
    keys = subset_keys(len(estimates))
    lookup = {key: code for code, key in enumerate(keys)}
    codes = [lookup[tuple(int(i) + 1 for i in np.flatnonzero(column))] for column in active.T]
    return PartitionLabeling(estimates[0].grid, codes, keys)


def combined_field(key, mode):
    names = tuple(Field(f"J{i}") for i in key)
    if len(names) == 1:
        return names[0]
    return Min(names) if mode == 'min' else Max(names)


def conjunction_terms(boundary, partition, mode, masks):
    terms = []
    for key in partition.keys:
        tag = ':' + ','.join(str(i) for i in key)
        terms += sided_terms(combined_field(key, mode), tag, boundary, key, masks)
    return terms


def cr_conjunction(samples, alpha, boot, mode='min'):
    """Regions for the conjunction (``mode='min'``) or disjunction (``'max'``) of several signals."""
    if mode not in MODES:
        raise RegionError(f"mode must be one of {MODES}, got {mode!r}.")
    samples = list(samples)
    _check_samples(samples)
    if len(samples) == 1:
        return cr_piecewise(samples[0], alpha, boot)
    alpha = check_alpha(alpha)
    results = [estimate(s) for s in samples]
    tau_n, n = results[0].tau_n, results[0].n
    means = [r.mean_hat for r in results]
    mu_hat = pointwise_min(*means) if mode == 'min' else pointwise_max(*means)
    eta_n = eta_rule(n, boot.eta_c, tau_n)
    partition = active_partition(means, eta_n, mode)
    boundary = estimate_u_sets(mu_hat, partition, tau_n, eta_n)
    masks = {}
    terms = conjunction_terms(boundary, partition, mode, masks)
    residuals = {f"J{i}": r.residuals for i, r in enumerate(results, start=1)}
    # one scale does not exist for a min of several fields
    q, statistic_id = bootstrap_quantile(residuals, masks, terms, alpha, boot, studentize=False)
    diagnostics = _diagnostics(boundary, partition, q, statistic_id, boot, eta_n)
    diagnostics['mode'] = mode
    regions = threshold_crs(mu_hat, tau_n, float(q), alpha, statistic_id, diagnostics=diagnostics,
                            samples=q.samples)
    logger.debug('Conjunction regions (%s, m=%d): q=%.4g', mode, len(samples), float(q))
    return regions, diagnostics
