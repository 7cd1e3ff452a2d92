"""
Fan-out of independent sweep points.

One thread runs the points in-process. More threads enqueue them on the
configured huey instance and drain the queue with an in-process thread
consumer. Results always come back in input order.
"""

from __future__ import annotations

import logging
from typing import Sequence

from django.conf import settings
from huey.contrib.djhuey import HUEY
from huey.exceptions import TaskException

from .tasks import sweep_point, sweep_point_task

logger = logging.getLogger(__name__)


class PointFailed(RuntimeError):
    """A sweep point raised inside a worker."""


def _collect(results) -> list[dict]:
    collected = []
    for index, result in enumerate(results):
        try:
            collected.append(result.get(blocking=True))
        except TaskException as exc:
            raise PointFailed(f"sweep point {index} failed: {exc.metadata.get('error', exc)}") from exc
    return collected


def run_points(kind: str, payloads: Sequence[dict], threads: int | None = None) -> list[dict]:
    threads = settings.LAB_THREADS if threads is None else int(threads)
    if threads <= 1 or len(payloads) <= 1:
        return [sweep_point(kind, payload) for payload in payloads]

    results = [sweep_point_task(kind, payload) for payload in payloads]
    if HUEY.immediate:
        return _collect(results)

    consumer = HUEY.create_consumer(workers=threads, worker_type="thread")
    logger.info("running %d %s points on %d threads", len(payloads), kind, threads)
    consumer.start()
    try:
        return _collect(results)
    finally:
        consumer.stop(graceful=True)
