from cli.base import RunCommand


class Command(RunCommand):
    help = 'Reproduce the worked convergence examples on the built-in fixtures'
    command = 'examples'
