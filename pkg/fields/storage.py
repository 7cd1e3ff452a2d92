"""Restart files for fields: one ``.npz`` archive with a JSON header."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
from django.core.exceptions import ValidationError

from geometry.dislocations import DislocationSpec
from geometry.grid import Grid

from .displacement import DisplacementField

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def save_field(u: DisplacementField, path: Path | str, *, h: float = 1.0, config_hash: str | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "format": FORMAT_VERSION,
        "grid": u.grid.digest,
        "h": h,
        "jumps": [spec.describe() for spec in u.jumps],
    }
    if config_hash is not None:
        header["config_hash"] = config_hash
    arrays = {"header": np.array(json.dumps(header, sort_keys=True)), "placement": u.placement}
    for index, spec in enumerate(u.jumps):
        arrays[f"jump{index}_faces"] = spec.faces
        arrays[f"jump{index}_curve"] = spec.curve
        arrays[f"jump{index}_burgers"] = spec.burgers
    with path.open("wb") as handle:
        np.savez(handle, **arrays)
    logger.debug("saved field to %s", path)
    return path


def load_field(path: Path | str, grid: Grid) -> tuple[DisplacementField, float]:
    """Field stored at ``path`` bound to ``grid``; returns (field, h)."""
    with np.load(Path(path)) as archive:
        header = json.loads(str(archive["header"]))
        if header.get("format") != FORMAT_VERSION:
            raise ValidationError(f"unsupported field format {header.get('format')!r}")
        if header["grid"] != grid.digest:
            raise ValidationError("stored field was computed on a different grid")
        jumps = []
        for index, meta in enumerate(header["jumps"]):
            jumps.append(
                DislocationSpec(
                    burgers=archive[f"jump{index}_burgers"],
                    scale=float(meta["scale"]),
                    curve=archive[f"jump{index}_curve"],
                    faces=archive[f"jump{index}_faces"].astype(bool),
                    label=meta["label"],
                )
            )
        placement = archive["placement"]
    return DisplacementField(grid, placement, tuple(jumps)), float(header["h"])
