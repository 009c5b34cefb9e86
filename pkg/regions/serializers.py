from rest_framework import serializers

from domain.serializers import GridSetRLESerializer


class RegionReportSerializer(serializers.Serializer):
    """Scalar report of one region construction.

    ``q_lower`` and ``q_upper`` are only set for the symmetric difference.
    """
    q = serializers.FloatField()
    q_lower = serializers.SerializerMethodField()
    q_upper = serializers.SerializerMethodField()
    eta_n = serializers.SerializerMethodField()
    alpha = serializers.FloatField()
    B = serializers.SerializerMethodField()
    seed = serializers.SerializerMethodField()
    statistic_id = serializers.CharField()

    def _diagnostic(self, obj, key):
        return obj.diagnostics.get(key)

    def get_q_lower(self, obj):
        return self._diagnostic(obj, 'q_lower')

    def get_q_upper(self, obj):
        return self._diagnostic(obj, 'q_upper')

    def get_eta_n(self, obj):
        return self._diagnostic(obj, 'eta_n')

    def get_B(self, obj):
        return self._diagnostic(obj, 'B')

    def get_seed(self, obj):
        return self._diagnostic(obj, 'seed')


class ConfidenceRegionsSerializer(RegionReportSerializer):
    lower = GridSetRLESerializer()
    upper = GridSetRLESerializer()
    tau_n = serializers.FloatField()
    diagnostics = serializers.DictField()
