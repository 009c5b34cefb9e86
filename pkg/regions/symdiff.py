"""
Confidence regions for the symmetric difference of two excursion sets.

With ``d = (g1 - g2) / 2`` and ``m = (g1 + g2) / 2`` the target is
``g1 Δ g2 = |d| - |m|``. Pieces are labelled ``(sgn d, sgn m)``. On the
doubly-zero piece next to a full-sign piece (the set ``N``) the scaled
error need not converge with restraint, so there it is bracketed by
``±max(|J1|, |J2|)``.
"""

import logging
from dataclasses import dataclass

import numpy as np

from core.exceptions import ConfinementViolation, GridMismatch, UnequalN
from domain.grid import GridSet, ScalarField, grid_closure, symmetric_difference, tube_set
from piecewise.fields import PartitionLabeling
from randfield.estimators import estimate
from randfield.statistics import Abs, Field, MaxOf, Neg, Sup, SymDiff, evaluate
from .applications import bootstrap_quantile, check_alpha
from .boundaries import estimate_u_sets, sign_partition
from .thresholds import eta_rule, threshold_crs

logger = logging.getLogger(__name__)

FULL_SIGNS = ((-1, -1), (-1, 1), (1, -1), (1, 1))
DOUBLE_ZERO = (0, 0)
J1, J2 = Field('J1'), Field('J2')


@dataclass(frozen=True, eq=False)
class SymdiffGeometry:
    partition: PartitionLabeling
    n_set: GridSet
    t_sets: dict
    r_sets: dict
    d: ScalarField
    m: ScalarField
    tube: GridSet = None

    @property
    def grid(self):
        return self.partition.grid

    @property
    def double_zero(self):
        return self.partition.piece(DOUBLE_ZERO)


def t_set_keys(i, k):
    """Pieces and sides whose boundary sets make up ``T_i^k``."""
    return (
        ('-', ((3 - 2 * i) * k, -k)),
        ('+', ((2 * i - 3) * k, k)),
        ('-', (0, -k)),
        ('+', (-k, 0)),
    )


def symdiff_geometry(g1, g2, tau_n, eta_n, tol):
    """Pieces, the set ``N``, the ``T`` and ``R`` sets for a pair of fields.

    Works on estimates and on truth fields alike (truth: ``tol = 0``).
    """
    if g1.grid != g2.grid:
        raise GridMismatch('Both fields must share a grid.')
    d = ScalarField(g1.grid, 0.5 * (g1.values - g2.values))
    m = ScalarField(g1.grid, 0.5 * (g1.values + g2.values))
    partition = sign_partition((g1, g2), tol)
    pieces = partition.pieces()
    full = GridSet.empty(g1.grid)
    for key in FULL_SIGNS:
        full = full | pieces[key]
    n_set = pieces[DOUBLE_ZERO] & grid_closure(full)

    mu = symmetric_difference(g1, g2)
    tube = tube_set(mu, -eta_n, eta_n)
    boundary = estimate_u_sets(mu, partition, tau_n, eta_n)
    t_sets = {}
    for i in (1, 2):
        for k in (-1, 1):
            t_set = n_set
            for side, key in t_set_keys(i, k):
                t_set = t_set | (boundary.u_minus[key] if side == '-' else boundary.u_plus[key])
            t_sets[(i, k)] = t_set
    r_sets = {
        1: tube & (pieces[(-1, 1)] | pieces[(1, -1)]),
        2: tube & (pieces[(1, 1)] | pieces[(-1, -1)]),
    }
    logger.debug('Symmetric-difference geometry: |V00|=%d, |N|=%d', pieces[DOUBLE_ZERO].count(), n_set.count())
    return SymdiffGeometry(partition, n_set, t_sets, r_sets, d, m, tube)


def symdiff_masks(geometry):
    masks = {f"T{i}{'+' if k > 0 else '-'}": mask for (i, k), mask in geometry.t_sets.items()}
    masks.update({f"R{i}": mask for i, mask in geometry.r_sets.items()})
    masks['V00'] = geometry.double_zero
    masks['V00-N'] = geometry.double_zero - geometry.n_set
    return masks


def symdiff_terms(geometry, masks):
    """Terms of the inner statistic and of the outer statistic, empty masks dropped."""
    lower, upper = [], []
    for (i, k) in geometry.t_sets:
        name = f"T{i}{'+' if k > 0 else '-'}"
        component = J1 if i == 1 else J2
        lower.append(Sup(component if k > 0 else Neg(component), name))
    lower.append(Sup(Abs(SymDiff(J1, J2)), 'V00-N'))
    upper.append(Sup(Abs(J1), 'R1'))
    upper.append(Sup(Abs(J2), 'R2'))
    upper.append(Sup(Abs(SymDiff(J1, J2)), 'V00'))

    def keep(terms):
        return [t for t in terms if masks[t.mask].mask.any()]

    return keep(lower), keep(upper)


def symdiff_statistics(geometry, j1, j2):
    """Inner and outer statistics on deterministic limit fields (-inf when no term is left)."""
    masks = symdiff_masks(geometry)
    values = []
    for terms in symdiff_terms(geometry, masks):
        if not terms:
            values.append(-np.inf)
            continue
        values.append(float(evaluate(MaxOf(terms), {'J1': j1, 'J2': j2}, masks)))
    return tuple(values)


def cr_symmetric_difference(sample1, sample2, alpha, boot):
    """Regions for ``{g1 Δ g2 > 0}`` and ``{g1 Δ g2 < 0}``.

    Thresholds use the inner quantile ``q_lower``; the outer one is returned
    alongside for the coverage upper bound.
    """
    alpha = check_alpha(alpha)
    if sample1.grid != sample2.grid:
        raise GridMismatch('Both samples must share a grid.')
    if sample1.n != sample2.n:
        raise UnequalN(f"Samples have {sample1.n} and {sample2.n} replicates.")
    first, second = estimate(sample1), estimate(sample2)
    tau_n = first.tau_n
    eta_n = eta_rule(first.n, boot.eta_c, tau_n)
    geometry = symdiff_geometry(first.mean_hat, second.mean_hat, tau_n, eta_n, eta_n)
    masks = symdiff_masks(geometry)
    lower_terms, upper_terms = symdiff_terms(geometry, masks)
    residuals = {'J1': first.residuals, 'J2': second.residuals}
    q_lower, lower_id = bootstrap_quantile(residuals, masks, lower_terms, alpha, boot, studentize=False)
    q_upper, _ = bootstrap_quantile(residuals, masks, upper_terms, alpha, boot, studentize=False)
    mu_hat = symmetric_difference(first.mean_hat, second.mean_hat)
    diagnostics = {
        'eta_n': eta_n,
        'tol_n': eta_n,
        'tube_size': geometry.tube.count(),
        'piece_sizes': {str(key): piece.count() for key, piece in geometry.partition.pieces().items()},
        'n_set_size': geometry.n_set.count(),
        'fallback': q_lower.fallback,
        'ties_at_q': q_lower.ties,
        'B': boot.B,
        'seed': boot.seed,
        'statistic_id': lower_id,
        'q_lower': float(q_lower),
        'q_upper': float(q_upper),
    }
    regions = threshold_crs(mu_hat, tau_n, float(q_lower), alpha, lower_id, diagnostics=diagnostics,
                            samples=q_lower.samples)
    logger.debug('Symmetric-difference regions: q_lower=%.4g, q_upper=%.4g', float(q_lower), float(q_upper))
    return regions, float(q_lower), float(q_upper), geometry


def confine(h, j1, j2, n_set):
    """``(L, U)``: ``h`` off ``n_set``, ``∓max(|j1|, |j2|)`` on it."""
    if not (h.grid == j1.grid == j2.grid == n_set.grid):
        raise GridMismatch('Confinement inputs must share a grid.')
    bound = np.maximum(np.abs(j1.values), np.abs(j2.values))
    inside = n_set.mask
    lower = ScalarField(h.grid, np.where(inside, -bound, h.values))
    upper = ScalarField(h.grid, np.where(inside, bound, h.values))
    return lower, upper


def scaled_errors(sample1, sample2, truth):
    """``H_n``, ``J1_n`` and ``J2_n`` for the replicate means against the truth pair."""
    g1, g2 = truth
    first, second = estimate(sample1), estimate(sample2)
    tau_n = first.tau_n
    j1 = (first.mean_hat - g1) / tau_n
    j2 = (second.mean_hat - g2) / tau_n
    h = (symmetric_difference(first.mean_hat, second.mean_hat) - symmetric_difference(g1, g2)) / tau_n
    return h, j1, j2


def confinement_fields(sample1, sample2, geometry, truth, check=False):
    """Confinement pair of the scaled symmetric-difference error.

    The symmetric difference is 1-Lipschitz in the max norm, so
    ``|H_n| <= max(|J1_n|, |J2_n|)`` everywhere. With ``check`` the ordering
    ``L <= H_n <= U`` is verified at every grid point and a breach raises
    ConfinementViolation.
    """
    h, j1, j2 = scaled_errors(sample1, sample2, truth)
    lower, upper = confine(h, j1, j2, geometry.n_set)
    if check:
        check_ordering(lower, h, upper)
    return lower, upper


def check_ordering(lower, h, upper):
    bad = (lower.values > h.values) | (h.values > upper.values)
    if bad.any():
        where = h.grid.coordinates[np.flatnonzero(bad)[0]].tolist()
        raise ConfinementViolation(f"Confinement ordering fails at {int(bad.sum())} points, first at {where}.")
