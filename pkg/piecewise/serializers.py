from rest_framework import serializers


def label_to_json(label):
    if isinstance(label, tuple):
        return [label_to_json(part) for part in label]
    return label


class LabelField(serializers.Field):
    """Piece labels are ints or tuples of ints; tuples travel as lists."""

    def to_representation(self, value):
        return label_to_json(value)

    def to_internal_value(self, data):
        if isinstance(data, list):
            return tuple(self.to_internal_value(part) for part in data)
        if isinstance(data, int):
            return data
        raise serializers.ValidationError('A label is an integer or a list of integers.')


class WitnessSerializer(serializers.Serializer):
    label = LabelField()
    point = serializers.ListField(child=serializers.FloatField())
    n = serializers.IntegerField()
    delta = serializers.FloatField()
    side = serializers.CharField()


class ScheduleSerializer(serializers.Serializer):
    n = serializers.ListField(child=serializers.IntegerField(min_value=1), allow_empty=False)
    delta = serializers.ListField(child=serializers.FloatField(min_value=0), allow_empty=False)


class RestraintReportSerializer(serializers.Serializer):
    passed = serializers.BooleanField()
    worst_violation = serializers.FloatField()
    witness = WitnessSerializer(allow_null=True)
    schedule = ScheduleSerializer()
    tolerance = serializers.FloatField()
    side = serializers.CharField()


class SandwichResultSerializer(serializers.Serializer):
    lower_ok = serializers.BooleanField()
    upper_ok = serializers.BooleanField()
    values = serializers.SerializerMethodField()
    n = serializers.IntegerField()

    def get_values(self, obj):
        return {'lower': obj.lower, 'middle': obj.middle, 'upper': obj.upper}


class SumConditionSerializer(serializers.Serializer):
    holds = serializers.BooleanField()
    violations = serializers.SerializerMethodField()

    def get_violations(self, obj):
        return [
            {'point': list(point), 'i': label_to_json(i), 'j': label_to_json(j)}
            for point, i, j in obj.violations
        ]
