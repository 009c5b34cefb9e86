"""
Executes one validated run document and writes its artifacts.

Every command writes under ``<output_dir>/<command>/`` and finishes with a
``<command>_manifest.json`` echoing the resolved config, minus the worker
count and output directory, and listing the files written. No artifact
carries wall-clock data, so identical documents give identical files.
"""

import csv
import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from domain.serializers import GridSetRLESerializer, field_to_csv, gridset_to_csv
from experiments.conditions import check_conditions
from experiments.coverage import run_coverage
from experiments.models import CoverageRun
from experiments.reproduce import reproduce_examples
from experiments.scenarios import get_scenario
from experiments.serializers import (
    ConditionReportSerializer, CoverageReportSerializer, ExampleRowSerializer, append_coverage_csv,
)
from randfield.estimators import estimate
from randfield.gaussian import FieldSample
from randfield.serializers import QuantileSerializer, SupSamplesSerializer
from regions.applications import BootstrapConfig
from regions.serializers import RegionReportSerializer
from .export import write_boundary_csv

logger = logging.getLogger(__name__)

# keys that cannot change any artifact
UNRECORDED = ('workers', 'output_dir')


@dataclass
class RunResult:
    summary: str
    outputs: list
    directory: Path


def dumps(data):
    return json.dumps(data, indent=2, sort_keys=True) + '\n'


class Run:
    def __init__(self, config):
        self.config = dict(config)
        self.command = self.config['command']
        self.directory = Path(self.config['output_dir']) / self.command
        self.outputs = []

    def path(self, name):
        self.outputs.append(name)
        return self.directory / name

    def write_text(self, name, text):
        self.path(name).write_text(text)

    def write_json(self, name, data):
        self.write_text(name, dumps(data))

    def scenario(self):
        scenario = get_scenario(self.config['scenario'])
        if self.config.get('n'):
            scenario = replace(scenario, n=self.config['n'])
        grid = self.config.get('grid')
        if grid:
            scenario = replace(scenario, extents=tuple(tuple(e) for e in grid['extents']),
                               points=tuple(grid['points']))
        model = self.config.get('model')
        if model:
            cov = model['covariance']
            scenario = replace(scenario, kind=cov['kind'], ell=cov['ell'], var=cov['var'],
                               kernel_width=cov['kernel_width'], rho=model['rho'])
        return scenario

    def boot(self, seed=None):
        return BootstrapConfig(
            B=self.config['B'],
            seed=self.config['seed'] if seed is None else seed,
            studentize=self.config['studentize'],
            workers=self.config['workers'],
            eta_c=self.config['eta_c'],
            q_override=self.config.get('q_override'),
        )

    def execute(self):
        self.directory.mkdir(parents=True, exist_ok=True)
        summary = getattr(self, f"run_{self.command}")()
        config = {key: value for key, value in self.config.items() if key not in UNRECORDED}
        manifest = {'command': self.command, 'config': config, 'outputs': sorted(self.outputs)}
        self.write_json(f"{self.command}_manifest.json", manifest)
        logger.info('Wrote %d files to %s', len(self.outputs), self.directory)
        return RunResult(summary, list(self.outputs), self.directory)

    def run_coverage(self):
        scenario = self.scenario()
        report = run_coverage(scenario, self.config['alpha'], self.config['R'], self.boot(),
                              self.config['seed'], self.config['workers'])
        self.write_json('coverage.json', CoverageReportSerializer(report).data)
        append_coverage_csv(report, self.path('coverage.csv'))
        CoverageRun.record(report, scenario.application, self.config)
        lo, hi = report.wilson_ci
        return (f"{scenario.id}: coverage {report.coverage:.4f} [{lo:.4f}, {hi:.4f}] over R={report.R} "
                f"in {report.runtime:.1f}s")

    def samples(self, scenario):
        if 'inputs' not in self.config:
            return scenario.draw(self.config['seed'])
        stacks = []
        for name in self.config['inputs']:
            data = np.loadtxt(name, delimiter=',', ndmin=2, comments='#')
            stacks.append(FieldSample(scenario.grid, data, self.config['seed']))
        return stacks

    def write_mask(self, name, gridset):
        if self.config['format'] == 'rle':
            self.write_json(f"{name}.json", GridSetRLESerializer(gridset).data)
        else:
            self.write_text(f"{name}.csv", gridset_to_csv(gridset))

    def run_regions(self):
        scenario = self.scenario()
        samples = self.samples(scenario)
        regions, geometry = scenario.construct(samples, self.config['alpha'], self.boot())
        for name, mask in (('lower', regions.lower), ('upper', regions.upper)):
            self.write_mask(name, mask)
            write_boundary_csv(self.path(f"{name}_boundary.csv"), name, mask)
        for k, sample in enumerate(samples, start=1):
            self.write_text(f"mean_hat_{k}.csv", field_to_csv(estimate(sample).mean_hat))
        if geometry is not None:
            self.write_mask('n_set', geometry.n_set)
            self.write_mask('tube', geometry.tube)
        report = dict(RegionReportSerializer(regions).data)
        report['diagnostics'] = regions.diagnostics
        self.write_json('report.json', report)
        return (f"{scenario.id}: q={regions.q:.4g}, upper {regions.upper.count()} points, "
                f"lower {regions.lower.count()} points")

    def run_examples(self):
        rows = reproduce_examples(self.config.get('fixtures'), workers=self.config['workers'])
        self.write_json('examples.json', ExampleRowSerializer(rows, many=True).data)
        with self.path('examples.csv').open('w', newline='') as handle:
            writer = csv.writer(handle, lineterminator='\n')
            writer.writerow(['fixture', 'check', 'expected', 'observed', 'passed'])
            for row in rows:
                writer.writerow([row.fixture, row.check, row.expected, row.observed, int(row.passed)])
        agree = sum(row.passed for row in rows)
        return f"{agree} of {len(rows)} example checks agree with the worked examples"

    def run_conditions(self):
        scenario = self.scenario()
        report = check_conditions(scenario, self.config['alpha'], self.boot(), self.config['seed'])
        self.write_json('conditions.json', ConditionReportSerializer(report).data)
        verdict = 'holds' if report.closure_passed else f"fails at {len(report.witnesses)} points"
        return f"{scenario.id}: closure condition {verdict}, atom-free={report.atom_free}"

    def run_quantile(self):
        scenario = self.scenario()
        regions, _ = scenario.construct(self.samples(scenario), self.config['alpha'], self.boot())
        result = QuantileSerializer({
            'value': regions.q,
            'level': 1 - self.config['alpha'],
            'fallback': bool(regions.diagnostics.get('fallback', False)),
            'ties': regions.diagnostics.get('ties_at_q') or 0,
        }).data
        result['samples'] = None
        if regions.samples is not None:
            regions.samples.to_csv(self.path('bootstrap_samples.csv'))
            result['samples'] = SupSamplesSerializer(regions.samples).data
        self.write_json('quantile.json', result)
        return f"{scenario.id}: q={regions.q:.6g} at level {1 - self.config['alpha']:.3g} ({regions.statistic_id})"


def run(config):
    return Run(config).execute()
