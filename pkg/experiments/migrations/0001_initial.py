# Generated by Django 5.2.7 on 2026-10-18 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('kind', models.CharField(choices=[('gamma', 'gamma estimate'), ('sweep', 'crossover sweep'), ('construct', 'construction'), ('probe', 'estimate probe'), ('gammaconv', 'gamma-limit trend'), ('scaling', 'scaling check')], max_length=20)),
                ('label', models.CharField(max_length=200)),
                ('config_hash', models.CharField(db_index=True, max_length=64)),
                ('seed', models.BigIntegerField(default=0)),
                ('content_id', models.CharField(max_length=40)),
                ('code_version', models.CharField(blank=True, max_length=120)),
                ('payload', models.JSONField(default=dict)),
                ('flagged', models.BooleanField(default=False)),
                ('aborted', models.BooleanField(default=False)),
                ('wall_clock_seconds', models.FloatField(default=0.0)),
                ('output_dir', models.CharField(blank=True, max_length=500)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at'],
                'indexes': [models.Index(fields=['kind', 'config_hash'], name='experiments_kind_7c1e0a_idx')],
            },
        ),
    ]
