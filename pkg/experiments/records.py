"""
On-disk artifacts of an experiment and its database row.

Files under ``<out>/<slug>/`` are deterministic: record.json has sorted keys
and no wall clock, tables and plot data start with the config hash line.
A rerun whose payload differs from an earlier record with the same config
hash and seed is flagged.
"""

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import Mapping

import numpy as np
import pandas as pd
from django.conf import settings
from django.db import transaction
from slugify import slugify

from fields.storage import save_field

from .models import ExperimentRecord

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12e"


def config_hash(canonical: str) -> str:
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def content_id(data: bytes) -> str:
    """Git blob id of ``data``."""
    sha = hashlib.sha1()
    sha.update(f"blob {len(data)}\0".encode("ascii"))
    sha.update(data)
    return sha.hexdigest()


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    return value


def output_root(out: Path | str | None = None) -> Path:
    """``out`` if given, else the LAB_OUTPUT_DIR override, else var/runs."""
    if out is not None:
        return Path(out)
    return Path(settings.LAB_OUTPUT_DIR or settings.LAB_DEFAULT_OUTPUT_DIR)


def record_dir(kind: str, label: str, hash_: str, out: Path | str | None = None) -> Path:
    return output_root(out) / slugify(f"{kind} {label} {hash_[:12]}")


def write_table(path: Path, table: pd.DataFrame, hash_: str) -> Path:
    with path.open("w", encoding="utf-8", newline="") as handle:
        handle.write(f"# config_hash={hash_}\n")
        table.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_plot_data(path: Path, columns: Mapping[str, np.ndarray], hash_: str) -> Path:
    names = list(columns)
    data = np.column_stack([np.asarray(columns[name], dtype=float) for name in names])
    header = f"config_hash={hash_}\n" + " ".join(names)
    np.savetxt(path, data, fmt=FLOAT_FORMAT, header=header, comments="# ")
    return path


@transaction.atomic
def persist(
    kind: str,
    label: str,
    *,
    canonical_config: str,
    seed: int,
    payload: dict,
    tables: Mapping[str, pd.DataFrame] | None = None,
    plots: Mapping[str, Mapping[str, np.ndarray]] | None = None,
    fields: Mapping[str, tuple] | None = None,
    out: Path | str | None = None,
    code_version: str = "",
    flagged: bool = False,
    aborted: bool = False,
    wall_clock_seconds: float = 0.0,
) -> ExperimentRecord:
    hash_ = config_hash(canonical_config)
    directory = record_dir(kind, label, hash_, out)
    directory.mkdir(parents=True, exist_ok=True)
    record = ExperimentRecord(
        kind=kind,
        label=label,
        config_hash=hash_,
        seed=seed,
        content_id=content_id(canonical_config.encode("utf-8")),
        code_version=code_version,
        payload=_jsonable(payload),
        flagged=flagged,
        aborted=aborted,
        wall_clock_seconds=wall_clock_seconds,
        output_dir=str(directory),
    )
    earlier = (
        ExperimentRecord.objects.filter(kind=kind, config_hash=hash_, seed=seed, aborted=False)
        .order_by("-created_at", "-pk")
        .first()
    )
    if earlier is not None and not aborted and not record.same_result_as(earlier):
        logger.warning("%s run %s does not reproduce record %s with the same inputs", kind, hash_[:12], earlier.pk)
        record.flagged = True

    body = {
        "kind": kind,
        "label": label,
        "config_hash": hash_,
        "content_id": record.content_id,
        "seed": seed,
        "code_version": code_version,
        "flagged": record.flagged,
        "aborted": aborted,
        "payload": record.payload,
    }
    (directory / "record.json").write_text(json.dumps(body, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    (directory / "config.yaml").write_text(f"# config_hash={hash_}\n{canonical_config}", encoding="utf-8")
    for name, table in (tables or {}).items():
        write_table(directory / f"{name}.csv", table, hash_)
    for name, columns in (plots or {}).items():
        write_plot_data(directory / f"{name}.dat", columns, hash_)
    for name, (u, h) in (fields or {}).items():
        save_field(u, directory / f"{name}.npz", h=h, config_hash=hash_)

    record.save()
    logger.info("persisted %s record %s in %s", kind, hash_[:12], directory)
    return record
