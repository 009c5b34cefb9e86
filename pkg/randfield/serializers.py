from rest_framework import serializers

from .gaussian import COVARIANCE_KINDS, GaussianFieldModel


class CovarianceSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(choices=COVARIANCE_KINDS, default='se')
    ell = serializers.FloatField(min_value=0, default=0.2)
    var = serializers.FloatField(min_value=0, default=1.0)
    kernel_width = serializers.FloatField(min_value=0, default=0.05)

    def validate(self, attrs):
        if attrs['var'] <= 0:
            raise serializers.ValidationError({'var': 'Variance must be positive.'})
        if attrs['kind'] == 'se' and attrs['ell'] <= 0:
            raise serializers.ValidationError({'ell': 'Length scale must be positive.'})
        if attrs['kind'] == 'smoothed_white' and attrs['kernel_width'] <= 0:
            raise serializers.ValidationError({'kernel_width': 'Kernel width must be positive.'})
        return attrs


class GaussianModelSerializer(serializers.Serializer):
    """Noise model block: ``{"covariance": {"kind": "se", "ell": 0.2, "var": 1.0}, "rho": 0.0}``."""
    covariance = CovarianceSerializer(required=False)
    rho = serializers.FloatField(min_value=-1, max_value=1, default=0.0)

    def validate(self, attrs):
        if 'covariance' not in attrs:
            attrs['covariance'] = CovarianceSerializer().run_validation({})
        return attrs

    def build(self, mean):
        """Model with the validated noise block around ``mean``."""
        cov = self.validated_data['covariance']
        return GaussianFieldModel(mean, cov['kind'], cov['ell'], cov['var'], cov['kernel_width'],
                                  self.validated_data['rho'])

    def to_representation(self, instance):
        if isinstance(instance, GaussianFieldModel):
            return {
                'covariance': {
                    'kind': instance.kind, 'ell': instance.ell, 'var': instance.var,
                    'kernel_width': instance.kernel_width,
                },
                'rho': instance.rho,
            }
        return super().to_representation(instance)


class SupSamplesSerializer(serializers.Serializer):
    B = serializers.IntegerField()
    statistic_id = serializers.CharField()
    seed = serializers.IntegerField()
    empty = serializers.BooleanField()


class QuantileSerializer(serializers.Serializer):
    value = serializers.FloatField()
    level = serializers.FloatField()
    fallback = serializers.BooleanField()
    ties = serializers.IntegerField()
