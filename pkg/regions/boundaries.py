"""
Estimated boundary sets and sign partitions.

For a piece ``V_i`` the upper boundary set is
``cl(cl(mu_hat^{-1}[0, eta_n]) ∩ V_i)`` and the lower one uses
``[-eta_n, 0]``; a single tube width stands in for the intersection over all
widths.
"""

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from core.exceptions import GridMismatch
from domain.grid import GridSet, grid_closure, tube_set
from piecewise.fields import PartitionLabeling
from .thresholds import eta_rule

logger = logging.getLogger(__name__)

SIGNS = (-1, 0, 1)
SIGN_PAIRS = tuple(itertools.product(SIGNS, SIGNS))


@dataclass(frozen=True, eq=False)
class BoundaryEstimate:
    eta_n: float
    u_plus: dict
    u_minus: dict
    tube: GridSet

    def both(self, key):
        return self.u_plus[key] | self.u_minus[key]


def _resolve_eta(eta, tau_n):
    if eta is None:
        return eta_rule(round(tau_n ** -2), tau_n=tau_n)
    if callable(eta):
        return float(eta(tau_n))
    return float(eta)


def estimate_u_sets(mu_hat, partition_hat, tau_n, eta=None):
    """Boundary sets of every piece of ``partition_hat``, empty pieces included.

    ``eta`` is the tube half-width, a callable of ``tau_n`` returning it, or
    None for the default rule with ``n = tau_n^{-2}``.
    """
    if mu_hat.grid != partition_hat.grid:
        raise GridMismatch('Estimate and partition live on different grids.')
    eta_n = _resolve_eta(eta, tau_n)
    upper_tube = grid_closure(tube_set(mu_hat, 0.0, eta_n))
    lower_tube = grid_closure(tube_set(mu_hat, -eta_n, 0.0))
    u_plus, u_minus = {}, {}
    for key, piece in partition_hat.pieces().items():
        u_plus[key] = grid_closure(upper_tube & piece)
        u_minus[key] = grid_closure(lower_tube & piece)
    tube = tube_set(mu_hat, -eta_n, eta_n)
    logger.debug('Boundary sets at eta=%.4g: tube has %d of %d points', eta_n, tube.count(), tube.grid.size)
    return BoundaryEstimate(eta_n, u_plus, u_minus, tube)


def _signs(values, tol):
    signs = np.sign(values).astype(np.int64)
    signs[np.abs(values) <= tol] = 0
    return signs


def sign_partition(fields, tol=0.0):
    """Partition by sign, with ``|value| <= tol`` counted as zero.

    One field gives keys -1, 0, 1. Two fields ``(g1, g2)`` give the nine
    keys ``(sgn d, sgn m)`` for ``d = (g1 - g2) / 2`` and ``m = (g1 + g2) / 2``.
    """
    fields = (fields,) if hasattr(fields, 'values') else tuple(fields)
    if tol < 0 or math.isnan(tol):
        raise ValueError(f"Sign tolerance must be nonnegative, got {tol}.")
    grid = fields[0].grid
    if len(fields) == 1:
        codes = _signs(fields[0].values, tol) + 1
        return PartitionLabeling(grid, codes, SIGNS)
    if len(fields) != 2:
        raise ValueError(f"Sign partitions take one or two fields, got {len(fields)}.")
    first, second = fields
    if second.grid != grid:
        raise GridMismatch('Both fields of a sign partition must share a grid.')
    d = 0.5 * (first.values - second.values)
    m = 0.5 * (first.values + second.values)
    codes = 3 * (_signs(d, tol) + 1) + (_signs(m, tol) + 1)
    return PartitionLabeling(grid, codes, SIGN_PAIRS)
