# Generated by Django 5.2.6 on 2026-10-17 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='CoverageRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('scenario', models.CharField(max_length=64)),
                ('application', models.CharField(choices=[('absolute', 'Absolute value'), ('conjunction', 'Conjunction'), ('disjunction', 'Disjunction'), ('symdiff', 'Symmetric difference')], max_length=20)),
                ('alpha', models.FloatField()),
                ('n', models.PositiveIntegerField()),
                ('B', models.PositiveIntegerField()),
                ('R', models.PositiveIntegerField()),
                ('hits', models.PositiveIntegerField()),
                ('coverage', models.FloatField()),
                ('ci_lo', models.FloatField()),
                ('ci_hi', models.FloatField()),
                ('q_mean', models.FloatField(blank=True, null=True)),
                ('seed', models.BigIntegerField()),
                ('runtime_seconds', models.FloatField(default=0)),
                ('config', models.JSONField(blank=True, default=dict)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at'],
            },
        ),
    ]
