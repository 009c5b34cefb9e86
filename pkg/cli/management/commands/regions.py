from cli.base import RunCommand


class Command(RunCommand):
    help = 'Confidence regions for one simulated (or loaded) sample of a scenario'
    command = 'regions'
