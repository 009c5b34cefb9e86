from cli.base import RunCommand


class Command(RunCommand):
    help = 'Grid diagnostics of the closure and atom-free conditions for a scenario'
    command = 'conditions'
