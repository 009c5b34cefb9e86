import math

from django.db import models


class CoverageRun(models.Model):
    """One Monte Carlo coverage run started from the command line"""
    APPLICATIONS = [
        ('absolute', 'Absolute value'),
        ('conjunction', 'Conjunction'),
        ('disjunction', 'Disjunction'),
        ('symdiff', 'Symmetric difference'),
    ]

    scenario = models.CharField(max_length=64)
    application = models.CharField(max_length=20, choices=APPLICATIONS)
    alpha = models.FloatField()
    n = models.PositiveIntegerField()
    B = models.PositiveIntegerField()
    R = models.PositiveIntegerField()
    hits = models.PositiveIntegerField()
    coverage = models.FloatField()
    ci_lo = models.FloatField()
    ci_hi = models.FloatField()
    q_mean = models.FloatField(null=True, blank=True)
    seed = models.BigIntegerField()
    runtime_seconds = models.FloatField(default=0)
    config = models.JSONField(default=dict, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.scenario} at alpha={self.alpha}: {self.hits}/{self.R}"

    @classmethod
    def record(cls, report, application, config=None):
        q_mean = report.q_mean if math.isfinite(report.q_mean) else None
        return cls.objects.create(
            scenario=report.scenario,
            application=application,
            alpha=report.alpha,
            n=report.n,
            B=report.B,
            R=report.R,
            hits=report.hits,
            coverage=report.coverage,
            ci_lo=report.ci_lo,
            ci_hi=report.ci_hi,
            q_mean=q_mean,
            seed=report.seed,
            runtime_seconds=report.runtime,
            config=config or {},
        )
