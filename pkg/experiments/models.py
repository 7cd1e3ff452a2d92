from django.db import models


class ExperimentRecord(models.Model):
    KINDS = (
        ("gamma", "gamma estimate"),
        ("sweep", "crossover sweep"),
        ("construct", "construction"),
        ("probe", "estimate probe"),
        ("gammaconv", "gamma-limit trend"),
        ("scaling", "scaling check"),
    )

    kind = models.CharField(max_length=20, choices=KINDS)
    label = models.CharField(max_length=200)
    config_hash = models.CharField(max_length=64, db_index=True)
    seed = models.BigIntegerField(default=0)
    content_id = models.CharField(max_length=40)
    code_version = models.CharField(max_length=120, blank=True)
    payload = models.JSONField(default=dict)
    flagged = models.BooleanField(default=False)
    aborted = models.BooleanField(default=False)
    wall_clock_seconds = models.FloatField(default=0.0)
    output_dir = models.CharField(max_length=500, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ["-created_at"]
        indexes = [
            models.Index(fields=["kind", "config_hash"]),
        ]

    def __str__(self):
        state = "aborted" if self.aborted else ("flagged" if self.flagged else "ok")
        return f"{self.kind}:{self.label} [{self.config_hash[:12]}] {state}"

    def same_result_as(self, other: "ExperimentRecord") -> bool:
        """True when both runs used the same inputs and produced the same payload."""
        return (
            self.config_hash == other.config_hash
            and self.seed == other.seed
            and self.payload == other.payload
        )
