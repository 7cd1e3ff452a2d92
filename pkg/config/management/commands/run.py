"""
Run one lab experiment from a YAML configuration and persist its record.

    python manage.py run gamma --config runs/gamma.yaml --out var/runs --threads 4 --seed 7

Exit status 2 means the configuration was rejected, 3 that the run aborted
(a diagnostic record is still written).
"""

import logging
import time

from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from config.provenance import code_version
from config.runconfig import COMMANDS, ConfigError, load_run_config, parse_run_config
from constructions.recovery import TraceMismatch
from estimates.reports import ProbeViolation
from experiments.dispatch import PointFailed
from experiments.records import persist
from experiments.runners import RUNNERS
from geometry.circuits import CirculationMismatch
from solver.descent import SolverDivergence

logger = logging.getLogger(__name__)

ABORTS = (SolverDivergence, CirculationMismatch, TraceMismatch, ProbeViolation, PointFailed)


class Command(BaseCommand):
    help = "Runs a lab experiment (gamma, sweep, construct, probe, gammaconv, scaling) and persists its record."

    def add_arguments(self, parser):
        parser.add_argument("experiment", choices=COMMANDS)
        parser.add_argument("--config", help="YAML run configuration; defaults apply to omitted keys.")
        parser.add_argument("--out", help="Output directory; overrides LAB_OUTPUT_DIR and output.dir.")
        parser.add_argument("--threads", type=int, help="Worker threads for sweep points; overrides LAB_THREADS.")
        parser.add_argument("--seed", type=int, help="Seed; overrides solver.seed.")

    def handle(self, *args, **options):
        command = options["experiment"]
        try:
            if options.get("config"):
                config = load_run_config(options["config"], command)
            else:
                config = parse_run_config("", command)
        except ConfigError as exc:
            raise CommandError(f"invalid configuration: {exc}", returncode=2) from exc

        seed = options.get("seed")
        if seed is not None and seed < 0:
            raise CommandError("--seed must be a non-negative integer", returncode=2)
        config = config.with_seed(seed)
        threads = options.get("threads") or settings.LAB_THREADS
        if threads < 1:
            raise CommandError("--threads must be at least 1", returncode=2)
        out = options.get("out") or settings.LAB_OUTPUT_DIR or config.output_dir()
        canonical = config.to_yaml()
        version = code_version()

        started = time.perf_counter()
        try:
            outcome = RUNNERS[command](config, threads)
        except ValidationError as exc:
            raise CommandError(f"invalid configuration: {'; '.join(exc.messages)}", returncode=2) from exc
        except ABORTS as exc:
            elapsed = time.perf_counter() - started
            record = persist(
                command,
                "aborted",
                canonical_config=canonical,
                seed=config.seed,
                payload={"error": type(exc).__name__, "message": str(exc)},
                out=out,
                code_version=version,
                aborted=True,
                wall_clock_seconds=elapsed,
            )
            logger.error("%s aborted: %s", command, exc)
            raise CommandError(f"{command} aborted ({type(exc).__name__}): {exc}; diagnostic in {record.output_dir}", returncode=3) from exc
        elapsed = time.perf_counter() - started

        record = persist(
            command,
            outcome.label,
            canonical_config=canonical,
            seed=config.seed,
            payload=outcome.payload,
            tables=outcome.tables,
            plots=outcome.plots,
            fields=outcome.fields,
            out=out,
            code_version=version,
            flagged=outcome.flagged,
            wall_clock_seconds=elapsed,
        )

        for line in outcome.summary:
            self.stdout.write(line)
        if outcome.flagged:
            self.stdout.write(self.style.WARNING("result flagged; see record.json"))
        self.stdout.write(self.style.SUCCESS(f"{command} done in {elapsed:.1f}s -> {record.output_dir}"))
