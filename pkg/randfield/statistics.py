"""
Statistic recipes: small expression trees over named component fields and
named masks.

Field nodes (Field, Neg, Abs, Min, Max, SymDiff) map arrays of shape
``(..., P)`` to the same shape; Sup and Inf reduce the point axis over a
mask; MaxOf takes the largest of several reduced statistics. The same
recipe evaluates a whole block of bootstrap replicates or one deterministic
field. ``str(recipe)`` is the canonical statistic id.
"""

from dataclasses import dataclass

import numpy as np

from domain.grid import symdiff_values


def mask_array(mask):
    return np.asarray(getattr(mask, 'mask', mask), dtype=bool)


class Recipe:
    def evaluate(self, fields, masks):
        raise NotImplementedError

    def children(self):
        return ()

    def field_names(self):
        names = set()
        for child in self.children():
            names |= child.field_names()
        return names

    def mask_names(self):
        names = set()
        for child in self.children():
            names |= child.mask_names()
        return names


@dataclass(frozen=True)
class Field(Recipe):
    name: str

    def evaluate(self, fields, masks):
        return np.asarray(fields[self.name], dtype=float)

    def field_names(self):
        return {self.name}

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Neg(Recipe):
    expr: Recipe

    def evaluate(self, fields, masks):
        return -self.expr.evaluate(fields, masks)

    def children(self):
        return (self.expr,)

    def __str__(self):
        return f"-({self.expr})"


@dataclass(frozen=True)
class Abs(Recipe):
    expr: Recipe

    def evaluate(self, fields, masks):
        return np.abs(self.expr.evaluate(fields, masks))

    def children(self):
        return (self.expr,)

    def __str__(self):
        return f"|{self.expr}|"


@dataclass(frozen=True)
class _Nary(Recipe):
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, 'terms', tuple(self.terms))
        if not self.terms:
            raise ValueError(f"{type(self).__name__} needs at least one term.")

    def children(self):
        return self.terms

    def __str__(self):
        return f"{self.symbol}({', '.join(str(t) for t in self.terms)})"


class Min(_Nary):
    symbol = 'min'

    def evaluate(self, fields, masks):
        return np.minimum.reduce([t.evaluate(fields, masks) for t in self.terms])


class Max(_Nary):
    symbol = 'max'

    def evaluate(self, fields, masks):
        return np.maximum.reduce([t.evaluate(fields, masks) for t in self.terms])


class MaxOf(_Nary):
    """Largest of several reduced statistics."""
    symbol = 'maxof'

    def evaluate(self, fields, masks):
        return np.maximum.reduce([np.asarray(t.evaluate(fields, masks), dtype=float) for t in self.terms])


@dataclass(frozen=True)
class SymDiff(Recipe):
    first: Recipe
    second: Recipe

    def evaluate(self, fields, masks):
        return symdiff_values(self.first.evaluate(fields, masks), self.second.evaluate(fields, masks))

    def children(self):
        return (self.first, self.second)

    def __str__(self):
        return f"symdiff({self.first}, {self.second})"


@dataclass(frozen=True)
class Sup(Recipe):
    """Supremum over a named mask; -inf over an empty mask. NaN points are skipped."""
    expr: Recipe
    mask: str

    def evaluate(self, fields, masks):
        values = self.expr.evaluate(fields, masks)
        keep = mask_array(masks[self.mask]) & ~np.isnan(values)
        return np.where(keep, values, -np.inf).max(axis=-1)

    def children(self):
        return (self.expr,)

    def mask_names(self):
        return {self.mask} | self.expr.mask_names()

    def __str__(self):
        return f"sup[{self.mask}]({self.expr})"


@dataclass(frozen=True)
class Inf(Recipe):
    """Infimum over a named mask; +inf over an empty mask."""
    expr: Recipe
    mask: str

    def evaluate(self, fields, masks):
        values = self.expr.evaluate(fields, masks)
        keep = mask_array(masks[self.mask]) & ~np.isnan(values)
        return np.where(keep, values, np.inf).min(axis=-1)

    def children(self):
        return (self.expr,)

    def mask_names(self):
        return {self.mask} | self.expr.mask_names()

    def __str__(self):
        return f"inf[{self.mask}]({self.expr})"


def evaluate(recipe, fields, masks):
    """Evaluate on deterministic fields: ScalarFields or arrays keyed by name."""
    arrays = {name: getattr(value, 'values', value) for name, value in fields.items()}
    return recipe.evaluate(arrays, masks)


def sup_abs(name, mask):
    return Sup(Abs(Field(name)), mask)
