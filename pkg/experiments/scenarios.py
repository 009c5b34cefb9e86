"""
Built-in synthetic scenarios for coverage runs and condition diagnostics.

A scenario fixes the truth signals in closed form, the grid, the noise model
and the replicate count; only seeds vary between runs.
"""

import logging
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from core.exceptions import UnknownScenario
from domain.grid import GridSet, build_grid, evaluate, pointwise_max, pointwise_min, symmetric_difference
from randfield.gaussian import GaussianFieldModel, sample_correlated, sample_fields
from regions.applications import cr_absolute, cr_conjunction
from regions.symdiff import cr_symmetric_difference

logger = logging.getLogger(__name__)

APPLICATIONS = ('absolute', 'conjunction', 'disjunction', 'symdiff')
ZERO_ATOL = 1e-12


@dataclass(frozen=True)
class Scenario:
    id: str
    application: str
    truths: tuple
    extents: tuple
    points: tuple
    n: int = 200
    description: str = ''
    kind: str = 'se'
    ell: float = 0.2
    var: float = 1.0
    kernel_width: float = 0.05
    rho: float = 0.0

    def __post_init__(self):
        if self.application not in APPLICATIONS:
            raise ValueError(f"Application must be one of {APPLICATIONS}, got {self.application!r}.")
        if self.application == 'absolute' and len(self.truths) != 1:
            raise ValueError('The absolute value takes exactly one truth signal.')
        if self.application == 'symdiff' and len(self.truths) != 2:
            raise ValueError('The symmetric difference takes exactly two truth signals.')

    @cached_property
    def grid(self):
        return build_grid(self.extents, self.points)

    @property
    def mode(self):
        return 'max' if self.application == 'disjunction' else 'min'

    def with_noise(self, var):
        return replace(self, var=float(var))

    def truth_fields(self):
        return tuple(evaluate(self.grid, rule, zero_atol=ZERO_ATOL) for rule in self.truths)

    def truth_target(self):
        """The closed-form ``mu`` whose excursion sets the regions cover."""
        fields = self.truth_fields()
        if self.application == 'absolute':
            return abs(fields[0])
        if self.application == 'symdiff':
            return symmetric_difference(*fields)
        return pointwise_min(*fields) if self.mode == 'min' else pointwise_max(*fields)

    def truth_sets(self):
        """``(L, U)``: points where the truth is strictly negative and strictly positive."""
        mu = self.truth_target()
        return GridSet(self.grid, mu.values < 0), GridSet(self.grid, mu.values > 0)

    def models(self):
        return [
            GaussianFieldModel(mean, self.kind, self.ell, self.var, self.kernel_width, self.rho)
            for mean in self.truth_fields()
        ]

    def draw(self, seed, n=None):
        """One sample of ``n`` replicates per truth signal."""
        n = self.n if n is None else int(n)
        models = self.models()
        if len(models) == 1:
            return [sample_fields(models[0], self.grid, n, seed)]
        return sample_correlated(models, self.grid, n, seed, self.rho)

    def construct(self, samples, alpha, boot):
        """Regions for ``samples``; also the geometry for the symmetric difference (else None)."""
        if self.application == 'absolute':
            regions, _ = cr_absolute(samples[0], alpha, boot)
            return regions, None
        if self.application == 'symdiff':
            regions, _, _, geometry = cr_symmetric_difference(samples[0], samples[1], alpha, boot)
            return regions, geometry
        regions, _ = cr_conjunction(samples, alpha, boot, self.mode)
        return regions, None


def _disc(cx, cy, radius):
    return lambda x, y: radius - np.hypot(x - cx, y - cy)


def _two_rings(x, y):
    r = np.hypot(x, y)
    return 4 * (r - 0.3) * (0.8 - r)


def _shifted_sine(s):
    return np.sin(2 * np.pi * (s - 0.1))


def _tangent_partner(s):
    return (s - 0.5) + np.maximum(0.0, 0.5 - s) ** 2


UNIT_LINE = ((0.0, 1.0),)
SQUARE = ((-1.0, 1.0), (-1.0, 1.0))

SCENARIOS = {s.id: s for s in (
    Scenario(
        'abs_sine_1d', 'absolute', (lambda s: np.sin(2 * np.pi * s),), UNIT_LINE, (401,),
        description='|sin 2 pi s| on [0, 1]',
    ),
    Scenario(
        'abs_circles_2d', 'absolute', (_two_rings,), SQUARE, (61, 61),
        description='|4 (r - 0.3)(0.8 - r)|: zero on two circles',
    ),
    Scenario(
        'conj_shift_1d', 'conjunction', (lambda s: np.sin(2 * np.pi * s), _shifted_sine), UNIT_LINE, (401,),
        description='min of sin 2 pi s and its shift by 0.1',
    ),
    Scenario(
        'conj_shift_2d', 'conjunction', (_disc(-0.15, 0.0, 0.5), _disc(0.15, 0.0, 0.5)), SQUARE, (61, 61),
        description='min of two overlapping discs',
    ),
    Scenario(
        'disj_shift_1d', 'disjunction', (lambda s: np.sin(2 * np.pi * s), _shifted_sine), UNIT_LINE, (401,),
        description='max of sin 2 pi s and its shift by 0.1',
    ),
    Scenario(
        'symdiff_venn_2d', 'symdiff', (_disc(-0.25, 0.0, 0.5), _disc(0.25, 0.0, 0.5)), SQUARE, (61, 61),
        description='symmetric difference of two offset discs',
    ),
    Scenario(
        'symdiff_spike_1d', 'symdiff', (lambda s: 2 * np.abs(s), lambda s: s), ((-2.0, 2.0),), (401,), n=100,
        description='symmetric difference of 2|s| and s on [-2, 2]',
    ),
    Scenario(
        'conj_tangent_1d', 'conjunction', (lambda s: s - 0.5, _tangent_partner), UNIT_LINE, (401,),
        description='two signals that agree on [1/2, 1] where their minimum crosses zero',
    ),
    Scenario(
        'zero_plateau_1d', 'conjunction', (lambda s: 0.0 * s, lambda s: 0.0 * s), UNIT_LINE, (401,),
        description='both signals identically zero',
    ),
)}


def get_scenario(scenario_id):
    if isinstance(scenario_id, Scenario):
        return scenario_id
    try:
        return SCENARIOS[scenario_id]
    except KeyError:
        raise UnknownScenario(
            f"Unknown scenario {scenario_id!r}; choose one of {', '.join(SCENARIOS)}."
        ) from None
