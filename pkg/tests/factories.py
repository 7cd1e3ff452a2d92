import factory

from experiments.models import ExperimentRecord


class ExperimentRecordFactory(factory.django.DjangoModelFactory):
    class Meta:
        model = ExperimentRecord

    kind = "gamma"
    label = factory.Sequence(lambda n: f"elastic-disk-r{n + 1}")
    config_hash = factory.Sequence(lambda n: f"{n:064x}")
    seed = 0
    content_id = factory.Sequence(lambda n: f"{n:040x}")
    code_version = "v0.1.0"
    payload = factory.LazyAttribute(lambda record: {"energy": 1.0, "label": record.label})
    output_dir = factory.LazyAttribute(lambda record: f"var/runs/{record.kind}-{record.label}")
