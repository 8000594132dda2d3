# Generated by Django 6.0.1 on 2026-10-18 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='RunRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('scenario_name', models.CharField(max_length=200)),
                ('scenario_sha256', models.CharField(db_index=True, max_length=64)),
                ('engine', models.CharField(max_length=10)),
                ('policy', models.CharField(blank=True, max_length=10)),
                ('parameters', models.JSONField(blank=True, default=dict)),
                ('event_count', models.IntegerField(default=0)),
                ('evacuation_time', models.FloatField(blank=True, null=True)),
                ('checks_passed', models.BooleanField(default=False)),
                ('checks', models.JSONField(blank=True, default=list)),
                ('validation', models.JSONField(blank=True, default=dict)),
                ('output_dir', models.CharField(max_length=500)),
                ('created', models.DateTimeField(auto_now_add=True)),
                ('updated', models.DateTimeField(auto_now=True)),
            ],
            options={
                'db_table': 'lwr_run_record',
                'ordering': ['-created'],
                'indexes': [models.Index(fields=['output_dir'], name='lwr_run_output_dir_idx')],
            },
        ),
    ]
