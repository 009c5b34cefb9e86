import csv
import io

import numpy as np
from rest_framework import serializers

from .grid import DomainGrid, GridSet, build_grid


class DomainGridSerializer(serializers.Serializer):
    """Grid document: ``{"extents": [[lo, hi], ...], "points": [n, ...]}``."""
    extents = serializers.ListField(
        child=serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2),
        min_length=1, max_length=2,
    )
    points = serializers.ListField(child=serializers.IntegerField(min_value=2), min_length=1, max_length=2)

    def validate(self, attrs):
        if len(attrs['extents']) != len(attrs['points']):
            raise serializers.ValidationError({'points': 'Give one point count per axis.'})
        for lo, hi in attrs['extents']:
            if hi <= lo:
                raise serializers.ValidationError({'extents': f'Axis [{lo}, {hi}] must satisfy lo < hi.'})
        return attrs

    def create(self, validated_data):
        return build_grid(validated_data['extents'], validated_data['points'])

    def to_representation(self, instance):
        if isinstance(instance, DomainGrid):
            return instance.as_dict()
        return super().to_representation(instance)


class GridSetRLESerializer(serializers.Serializer):
    """Run-length form of a mask; runs alternate starting with a run of 0s."""
    grid = DomainGridSerializer()
    rle = serializers.ListField(child=serializers.IntegerField(min_value=0), allow_empty=False)

    def validate(self, attrs):
        total = sum(attrs['rle'])
        expected = int(np.prod(attrs['grid']['points']))
        if total != expected:
            raise serializers.ValidationError({'rle': f'Runs cover {total} points, the grid has {expected}.'})
        return attrs

    def create(self, validated_data):
        grid = DomainGridSerializer().create(validated_data['grid'])
        mask = np.zeros(grid.size, dtype=bool)
        position, value = 0, False
        for run in validated_data['rle']:
            mask[position:position + run] = value
            position += run
            value = not value
        return GridSet(grid, mask)

    def to_representation(self, instance):
        return {'grid': instance.grid.as_dict(), 'rle': encode_runs(instance.mask)}


def encode_runs(mask):
    mask = np.asarray(mask, dtype=bool)
    edges = np.flatnonzero(np.diff(mask.astype(np.int8))) + 1
    bounds = np.concatenate([[0], edges, [mask.size]])
    runs = np.diff(bounds).tolist()
    if mask.size and mask[0]:
        runs.insert(0, 0)
    return [int(r) for r in runs]


def gridset_to_csv(gridset):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(['inside'])
    writer.writerows([int(v)] for v in gridset.mask)
    return buffer.getvalue()


def gridset_from_csv(text, grid):
    rows = list(csv.reader(io.StringIO(text)))
    values = [int(row[0]) for row in rows[1:] if row]
    return GridSet(grid, np.asarray(values, dtype=bool))


def field_to_csv(field):
    axes = ['x', 'y'][:field.grid.dimension]
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(axes + ['value'])
    for point, value in zip(field.grid.coordinates, field.values):
        writer.writerow([repr(float(c)) for c in point] + [repr(float(value))])
    return buffer.getvalue()
