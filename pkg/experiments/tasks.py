from __future__ import annotations

from huey.contrib.djhuey import task


def _run_point(kind: str, payload: dict) -> dict:
    from .sweeps import POINT_RUNNERS

    return POINT_RUNNERS[kind](payload)


@task()
def sweep_point_task(kind: str, payload: dict) -> dict:
    return _run_point(kind, payload)


def sweep_point(kind: str, payload: dict) -> dict:
    return _run_point(kind, payload)
