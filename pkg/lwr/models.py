from django.db import models


class RunRecord(models.Model):
    """One engine run launched from a management command."""
    scenario_name = models.CharField(max_length=200)
    scenario_sha256 = models.CharField(max_length=64, db_index=True)
    engine = models.CharField(max_length=10)  # 'split' or 'exact'
    policy = models.CharField(max_length=10, blank=True)
    parameters = models.JSONField(default=dict, blank=True)
    event_count = models.IntegerField(default=0)
    evacuation_time = models.FloatField(null=True, blank=True)
    checks_passed = models.BooleanField(default=False)
    checks = models.JSONField(default=list, blank=True)  # [{check, pass, worst_violation}]
    validation = models.JSONField(default=dict, blank=True)  # last `validate` result
    output_dir = models.CharField(max_length=500)
    created = models.DateTimeField(auto_now_add=True)
    updated = models.DateTimeField(auto_now=True)

    class Meta:
        db_table = 'lwr_run_record'
        ordering = ['-created']
        indexes = [
            models.Index(fields=['output_dir'], name='lwr_run_output_dir_idx'),
        ]

    def __str__(self):
        return f"{self.scenario_name} ({self.engine}) {self.scenario_sha256[:12]}"
