import json
from pathlib import Path

from django.core.management.base import BaseCommand
from rest_framework import serializers

from core.exceptions import ExcursionError
from .runner import run
from .serializers import RunConfigSerializer

EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

# flag dest -> config key
OVERRIDES = ('scenario', 'alpha', 'n', 'B', 'R', 'seed', 'eta_c', 'output_dir', 'workers', 'format', 'studentize')


class RunCommand(BaseCommand):
    """Shared plumbing: ``--config FILE`` plus flag overrides, validation, exit codes."""
    command = None

    def add_arguments(self, parser):
        parser.add_argument('--config', help='JSON run document')
        parser.add_argument('--scenario')
        parser.add_argument('--alpha', type=float)
        parser.add_argument('--n', type=int)
        parser.add_argument('--B', type=int)
        parser.add_argument('--R', type=int)
        parser.add_argument('--seed', type=int)
        parser.add_argument('--eta-c', dest='eta_c', type=float)
        parser.add_argument('--output-dir', dest='output_dir')
        parser.add_argument('--workers', type=int)
        parser.add_argument('--format', choices=('csv', 'rle'))
        parser.add_argument('--studentize', action='store_true', default=None)

    def load_document(self, path):
        if not path:
            return {}
        try:
            document = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise serializers.ValidationError({'config': f"Not valid JSON: {exc}"})
        if not isinstance(document, dict):
            raise serializers.ValidationError({'config': 'The run document must be a JSON object.'})
        return document

    def resolve(self, options):
        document = self.load_document(options.get('config'))
        for key in OVERRIDES:
            if options.get(key) is not None:
                document[key] = options[key]
        if self.command is not None:
            document['command'] = self.command
        serializer = RunConfigSerializer(data=document)
        serializer.is_valid(raise_exception=True)
        return serializer.validated_data

    def fail(self, code, kind, detail):
        self.stderr.write(json.dumps({'status': 'error', 'kind': kind, 'detail': detail}, sort_keys=True))
        raise SystemExit(code)

    def handle(self, *args, **options):
        try:
            config = self.resolve(options)
            result = run(config)
        except serializers.ValidationError as exc:
            self.fail(EXIT_VALIDATION, 'validation', exc.detail)
        except (ExcursionError, OSError, ValueError) as exc:
            self.fail(EXIT_RUNTIME, 'runtime', str(exc))
        self.stdout.write(self.style.SUCCESS(result.summary))
