from cli.base import RunCommand


class Command(RunCommand):
    help = 'Monte Carlo coverage of the confidence regions for a scenario'
    command = 'coverage'
