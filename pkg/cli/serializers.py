from django.conf import settings
from rest_framework import serializers

from domain.serializers import DomainGridSerializer
from experiments.scenarios import SCENARIOS
from piecewise.fixtures import FIXTURES
from randfield.serializers import GaussianModelSerializer

COMMANDS = ('coverage', 'regions', 'examples', 'conditions', 'quantile')
FORMATS = ('csv', 'rle')
NEEDS_SCENARIO = ('coverage', 'regions', 'conditions', 'quantile')


class RunConfigSerializer(serializers.Serializer):
    """One run document. Missing knobs fall back to the EXCURSION_* settings."""
    command = serializers.ChoiceField(choices=COMMANDS)
    scenario = serializers.CharField(required=False)
    fixtures = serializers.ListField(child=serializers.CharField(), required=False, allow_empty=False)
    inputs = serializers.ListField(child=serializers.CharField(), required=False, allow_empty=False)
    alpha = serializers.FloatField(default=0.1)
    n = serializers.IntegerField(min_value=1, required=False)
    B = serializers.IntegerField(min_value=100, required=False)
    R = serializers.IntegerField(min_value=1, default=100)
    grid = DomainGridSerializer(required=False)
    eta_c = serializers.FloatField(required=False)
    seed = serializers.IntegerField(min_value=0, default=0)
    output_dir = serializers.CharField(required=False)
    workers = serializers.IntegerField(min_value=1, required=False)
    format = serializers.ChoiceField(choices=FORMATS, default='csv')
    studentize = serializers.BooleanField(default=False)
    q_override = serializers.FloatField(min_value=0, required=False, allow_null=True)
    model = GaussianModelSerializer(required=False)

    def validate_alpha(self, value):
        if not 0 < value < 1:
            raise serializers.ValidationError('alpha must lie strictly between 0 and 1.')
        return value

    def validate_eta_c(self, value):
        if not value > 0:
            raise serializers.ValidationError('The tube constant must be positive.')
        return value

    def validate_scenario(self, value):
        if value not in SCENARIOS:
            raise serializers.ValidationError(f"Unknown scenario; choose one of {', '.join(SCENARIOS)}.")
        return value

    def validate_fixtures(self, value):
        unknown = [name for name in value if name not in FIXTURES]
        if unknown:
            raise serializers.ValidationError(f"Unknown fixtures {unknown}; choose from {', '.join(FIXTURES)}.")
        return value

    def validate(self, attrs):
        command = attrs['command']
        if command in NEEDS_SCENARIO and 'scenario' not in attrs:
            raise serializers.ValidationError({'scenario': f"The {command} command needs a scenario."})
        if 'fixtures' in attrs and command != 'examples':
            raise serializers.ValidationError({'fixtures': 'Only the examples command takes fixtures.'})
        if 'inputs' in attrs:
            if command != 'regions':
                raise serializers.ValidationError({'inputs': 'Only the regions command reads input stacks.'})
            expected = len(SCENARIOS[attrs['scenario']].truths)
            if len(attrs['inputs']) != expected:
                raise serializers.ValidationError(
                    {'inputs': f"Scenario {attrs['scenario']} needs {expected} input files."}
                )
        if 'grid' in attrs and 'scenario' in attrs:
            dimension = SCENARIOS[attrs['scenario']].grid.dimension
            if len(attrs['grid']['points']) != dimension:
                raise serializers.ValidationError({'grid': f"The scenario lives on a {dimension}D grid."})

        attrs.setdefault('B', int(settings.EXCURSION_BOOTSTRAP_B))
        attrs.setdefault('eta_c', float(settings.EXCURSION_ETA_C))
        attrs.setdefault('workers', int(settings.EXCURSION_WORKERS))
        attrs.setdefault('output_dir', str(settings.EXCURSION_OUTPUT_DIR))
        if attrs['B'] < 100:
            raise serializers.ValidationError({'B': 'At least 100 bootstrap replicates are needed.'})
        return attrs
