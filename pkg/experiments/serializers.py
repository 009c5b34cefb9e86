import csv
import math
from pathlib import Path

from rest_framework import serializers

CSV_COLUMNS = ('scenario', 'alpha', 'n', 'B', 'R', 'coverage', 'ci_lo', 'ci_hi', 'q_mean', 'seed')


def finite_or_none(value):
    return value if value is not None and math.isfinite(value) else None


class CoverageReportSerializer(serializers.Serializer):
    """Coverage report; runtime is left out so equal runs serialize identically."""
    scenario = serializers.CharField()
    application = serializers.CharField()
    alpha = serializers.FloatField()
    n = serializers.IntegerField()
    B = serializers.IntegerField()
    R = serializers.IntegerField()
    hits = serializers.IntegerField()
    coverage = serializers.FloatField()
    wilson_ci = serializers.ListField(child=serializers.FloatField())
    q_mean = serializers.SerializerMethodField()
    seed = serializers.IntegerField()

    def get_q_mean(self, obj):
        return finite_or_none(obj.q_mean)


def coverage_csv_row(report):
    data = CoverageReportSerializer(report).data
    data['ci_lo'], data['ci_hi'] = data['wilson_ci']
    return {column: data[column] for column in CSV_COLUMNS}


def append_coverage_csv(report, path):
    """Append one row to ``path``, writing the header when the file is new."""
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    with path.open('a', newline='') as handle:
        writer = csv.DictWriter(handle, fieldnames=CSV_COLUMNS)
        if new:
            writer.writeheader()
        writer.writerow(coverage_csv_row(report))
    return path


class ExampleRowSerializer(serializers.Serializer):
    fixture = serializers.CharField()
    check = serializers.CharField()
    expected = serializers.CharField()
    observed = serializers.CharField()
    passed = serializers.BooleanField()
    values = serializers.DictField()


class ConditionReportSerializer(serializers.Serializer):
    scenario = serializers.CharField()
    closure_passed = serializers.BooleanField()
    pieces = serializers.DictField(child=serializers.BooleanField())
    witnesses = serializers.ListField(child=serializers.ListField(child=serializers.FloatField()))
    zero_set_size = serializers.IntegerField()
    q = serializers.FloatField()
    ties_at_q = serializers.IntegerField()
    atom_free = serializers.BooleanField()
    n_set_size = serializers.IntegerField(allow_null=True)
    confinement_gap = serializers.SerializerMethodField()
    details = serializers.DictField()

    def get_confinement_gap(self, obj):
        return finite_or_none(obj.confinement_gap)
