from cli.base import RunCommand


class Command(RunCommand):
    help = 'Bootstrap quantile of the region statistic for one sample of a scenario'
    command = 'quantile'
