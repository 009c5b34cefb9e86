from rest_framework import serializers

from cli.base import RunCommand


class Command(RunCommand):
    help = 'Run the command named by the "command" key of a JSON run document'

    def resolve(self, options):
        if not options.get('config'):
            raise serializers.ValidationError({'config': 'The run command needs --config FILE.'})
        return super().resolve(options)
