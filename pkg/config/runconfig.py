"""
Run configuration: a YAML document with one mapping per section.

    command: gamma
    material:   {p: 1.5, alpha: 0.05}
    geometry:   {shape: disk, r: 1.0, M: 1.0, spacing: 0.0625}
    solver:     {restarts: 3, seed: 0}
    experiment: {...}
    output:     {dir: var/runs}

Each section is validated by a form. Unknown keys are rejected and every
diagnostic carries the YAML line of the offending key.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import logging
import math
from pathlib import Path

import yaml
from django import forms
from django.core.exceptions import ValidationError

from material.wells import DEFAULT_ALPHA, DEFAULT_P, ElasticModel, MismatchSpec, mismatch_to_H
from solver.descent import SolverConfig

logger = logging.getLogger(__name__)

COMMANDS = ("gamma", "sweep", "construct", "probe", "gammaconv", "scaling")
SECTIONS = ("command", "material", "geometry", "solver", "experiment", "output")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class FloatListField(forms.Field):
    """List of floats, optionally of fixed length."""

    def __init__(self, *, length: int | None = None, min_length: int = 0, **kwargs):
        self.length = length
        self.min_length = min_length
        kwargs.setdefault("required", False)
        super().__init__(**kwargs)

    def to_python(self, value):
        if value in (None, ""):
            return None
        if not isinstance(value, (list, tuple)):
            raise ValidationError("expected a list of numbers")
        try:
            values = [float(v) for v in value]
        except (TypeError, ValueError):
            raise ValidationError("expected a list of numbers")
        if not all(math.isfinite(v) for v in values):
            raise ValidationError("list entries must be finite")
        if self.length is not None and len(values) != self.length:
            raise ValidationError(f"expected exactly {self.length} entries, got {len(values)}")
        if len(values) < self.min_length:
            raise ValidationError(f"expected at least {self.min_length} entries, got {len(values)}")
        return values


class PolygonField(forms.Field):
    def __init__(self, **kwargs):
        kwargs.setdefault("required", False)
        super().__init__(**kwargs)

    def to_python(self, value):
        if value in (None, ""):
            return None
        try:
            vertices = [[float(x), float(y)] for x, y in value]
        except (TypeError, ValueError):
            raise ValidationError("polygon must be a list of [x2, x3] pairs")
        if len(vertices) < 3:
            raise ValidationError("polygon needs at least three vertices")
        return vertices


class SectionForm(forms.Form):
    """Form whose unset optional fields fall back to their ``initial`` values."""

    def clean(self):
        cleaned = super().clean()
        for name, form_field in self.fields.items():
            if cleaned.get(name) in (None, "") and form_field.initial is not None:
                cleaned[name] = form_field.initial
        return cleaned


class MaterialForm(SectionForm):
    p = forms.FloatField(required=False, initial=DEFAULT_P)
    alpha = forms.FloatField(required=False)
    zeta = FloatListField(length=3)

    def clean(self):
        cleaned = super().clean()
        alpha, zeta = cleaned.get("alpha"), cleaned.get("zeta")
        if alpha is not None and zeta is not None:
            self.add_error("zeta", "give either alpha or zeta, not both")
            return cleaned
        if alpha is None and zeta is None:
            cleaned["alpha"] = DEFAULT_ALPHA
        try:
            if cleaned.get("alpha") is not None:
                mismatch_to_H(cleaned["alpha"])
            else:
                MismatchSpec(zeta=tuple(zeta))
        except ValidationError as exc:
            self.add_error("zeta" if zeta is not None else "alpha", exc)
        if cleaned.get("p") is not None:
            try:
                ElasticModel(p=cleaned["p"])
            except ValidationError as exc:
                self.add_error("p", exc)
        return cleaned


class GeometryForm(SectionForm):
    shape = forms.ChoiceField(choices=[("disk", "disk"), ("square", "square")], required=False, initial="disk")
    r = forms.FloatField(required=False, min_value=0.0, initial=1.0)
    M = forms.FloatField(required=False, min_value=0.0, initial=1.0)
    spacing = forms.FloatField(required=False, min_value=0.0, initial=0.0625)
    slab_depth = forms.IntegerField(required=False, min_value=1, initial=1)
    polygon = PolygonField()
    burgers = FloatListField(length=3)
    burgers_scale = forms.FloatField(required=False, min_value=0.0, initial=1.0)
    tiles_per_side = forms.TypedChoiceField(choices=[(2, "2"), (4, "4")], coerce=int, required=False, initial=2)

    def clean(self):
        cleaned = super().clean()
        for name in ("r", "M", "spacing"):
            if cleaned.get(name) is not None and not cleaned[name] > 0.0:
                self.add_error(name, f"{name} must be positive")
        if (cleaned.get("polygon") is None) != (cleaned.get("burgers") is None):
            self.add_error("burgers" if cleaned.get("polygon") is not None else "polygon", "polygon and burgers go together")
        return cleaned


class SolverForm(SectionForm):
    grad_tol = forms.FloatField(required=False, min_value=0.0)
    max_iter = forms.IntegerField(required=False, min_value=0, initial=50_000)
    memory = forms.IntegerField(required=False, min_value=0, initial=8)
    restarts = forms.IntegerField(required=False, min_value=0, initial=3)
    perturbation = forms.FloatField(required=False, min_value=0.0, initial=1e-3)
    seed = forms.IntegerField(required=False, min_value=0, max_value=2**64 - 1, initial=0)
    log_every = forms.IntegerField(required=False, min_value=1, initial=100)


class ExperimentForm(SectionForm):
    r_list = FloatListField(min_length=1)
    delta = forms.FloatField(required=False, min_value=0.0)
    delta_list = FloatListField(min_length=2)
    cells_per_radius = forms.IntegerField(required=False, min_value=2, initial=16)
    m_factor = forms.FloatField(required=False, min_value=0.0, initial=1.0)
    reference_length = forms.FloatField(required=False, min_value=0.0, initial=1.0 / 64.0)
    sensitivity = forms.BooleanField(required=False)
    strict = forms.BooleanField(required=False)
    checks = forms.MultipleChoiceField(
        choices=[(name, name) for name in ("positivity", "sandwich", "rotation", "sensitivity")], required=False
    )
    rotations = forms.IntegerField(required=False, min_value=1, initial=5)
    construction = forms.ChoiceField(
        choices=[("ramp", "ramp"), ("glued", "glued"), ("recovery", "recovery")], required=False, initial="ramp"
    )
    h_list = FloatListField(min_length=1)
    h = forms.FloatField(required=False, min_value=0.0, initial=0.125)
    probe = forms.ChoiceField(
        choices=[(name, name) for name in ("rigidity", "poincare", "equivalence", "all")], required=False, initial="all"
    )
    mode = forms.ChoiceField(choices=[("classic", "classic"), ("truncated", "truncated")], required=False, initial="truncated")
    samples = forms.IntegerField(required=False, min_value=1, initial=10)
    g_scale = forms.FloatField(required=False, min_value=0.0, initial=5.0)
    epsilon = forms.FloatField(required=False, min_value=0.0, max_value=1.0, initial=1e-2)

    def clean(self):
        cleaned = super().clean()
        for name in ("r_list", "h_list"):
            values = cleaned.get(name)
            if values and any(v <= 0.0 for v in values):
                self.add_error(name, f"{name} entries must be positive")
        if cleaned.get("h") is not None and not 0.0 < cleaned["h"] <= 1.0:
            self.add_error("h", "thickness h must lie in (0, 1]")
        return cleaned


class OutputForm(SectionForm):
    dir = forms.CharField(required=False)


SECTION_FORMS = {
    "material": MaterialForm,
    "geometry": GeometryForm,
    "solver": SolverForm,
    "experiment": ExperimentForm,
    "output": OutputForm,
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    material: dict = field(default_factory=dict)
    geometry: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    experiment: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        document = {"command": self.command}
        for name in SECTION_FORMS:
            section = {key: value for key, value in getattr(self, name).items() if value not in (None, "")}
            if section:
                document[name] = section
        return document

    def to_yaml(self) -> str:
        """Canonical text: sorted keys, block style."""
        return yaml.safe_dump(self.as_dict(), sort_keys=True, default_flow_style=False)

    def model(self) -> ElasticModel:
        material = self.material
        if material.get("zeta") is not None:
            mismatch = MismatchSpec(zeta=tuple(material["zeta"]))
        else:
            mismatch = MismatchSpec.from_alpha(material["alpha"])
        return ElasticModel(mismatch=mismatch, p=material["p"])

    def solver_config(self, seed: int | None = None) -> SolverConfig:
        options = {key: value for key, value in self.solver.items() if value is not None}
        if seed is not None:
            options["seed"] = seed
        return SolverConfig(**options)

    @property
    def seed(self) -> int:
        return int(self.solver.get("seed", 0))

    def with_seed(self, seed: int | None) -> "RunConfig":
        if seed is None:
            return self
        return RunConfig(
            command=self.command,
            material=dict(self.material),
            geometry=dict(self.geometry),
            solver={**self.solver, "seed": int(seed)},
            experiment=dict(self.experiment),
            output=dict(self.output),
        )

    def output_dir(self) -> Path | None:
        value = self.output.get("dir")
        return Path(value) if value else None

    def grid_options(self) -> tuple[float, float, float]:
        return self.geometry["r"], self.geometry["M"], self.geometry["spacing"]


def _key_lines(text: str) -> tuple[dict[tuple[str, ...], int], int]:
    """1-based line of every key, addressed by its path; plus the document's first line."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}", mark.line + 1 if mark else None) from exc
    lines: dict[tuple[str, ...], int] = {}
    if root is None:
        return lines, 1

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                key_path = path + (str(key.value),)
                lines[key_path] = key.start_mark.line + 1
                walk(value, key_path)

    walk(root, ())
    return lines, root.start_mark.line + 1


def _first_error(form: forms.Form) -> tuple[str, str]:
    name, errors = next(iter(form.errors.items()))
    return name, "; ".join(str(message) for message in errors)


def _reconcile_delta(sections: dict, raw_material: dict, lines: dict) -> None:
    """Derive an isotropic material from experiment.delta, or check it against the given one."""
    delta = sections["experiment"].get("delta")
    if delta is None:
        return
    line = lines.get(("experiment", "delta"))
    material = sections["material"]
    if "alpha" not in raw_material and "zeta" not in raw_material:
        alpha = delta / math.sqrt(3.0)
        try:
            mismatch_to_H(alpha)
        except ValidationError as exc:
            raise ConfigError(f"experiment.delta: {'; '.join(exc.messages)}", line) from exc
        material["alpha"] = alpha
        return
    if material.get("zeta") is not None:
        configured = MismatchSpec(zeta=tuple(material["zeta"])).delta
    else:
        configured = MismatchSpec.from_alpha(material["alpha"]).delta
    if not math.isclose(delta, configured, rel_tol=1e-9, abs_tol=1e-12):
        raise ConfigError(f"experiment.delta: {delta:g} disagrees with the material mismatch |H - I| = {configured:.6g}", line)


def parse_run_config(text: str, command: str | None = None) -> RunConfig:
    """Validated RunConfig; ``command`` fills in or must agree with the document's command."""
    lines, first = _key_lines(text)
    data = yaml.safe_load(text)
    if data is None and command is not None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("run configuration must be a mapping of sections", first)

    unknown = [key for key in data if key not in SECTIONS]
    if unknown:
        raise ConfigError(f"unknown section {unknown[0]!r}; expected one of {', '.join(SECTIONS)}", lines.get((unknown[0],)))
    if command is not None and data.get("command", command) != command:
        raise ConfigError(f"configuration is for {data['command']!r}, not {command!r}", lines.get(("command",), first))
    command = data.get("command", command)
    if command not in COMMANDS:
        raise ConfigError(f"command must be one of {', '.join(COMMANDS)}, got {command!r}", lines.get(("command",), first))

    sections = {}
    for name, form_class in SECTION_FORMS.items():
        raw = data.get(name) or {}
        if not isinstance(raw, dict):
            raise ConfigError(f"section {name!r} must be a mapping", lines.get((name,)))
        form = form_class(data=raw)
        extra = [key for key in raw if key not in form.fields]
        if extra:
            raise ConfigError(f"unknown key {name}.{extra[0]}", lines.get((name, str(extra[0]))))
        if not form.is_valid():
            key, message = _first_error(form)
            if key == "__all__":
                raise ConfigError(f"{name}: {message}", lines.get((name,)))
            line = lines.get((name, key), lines.get((name,)))
            raise ConfigError(f"{name}.{key}: {message}", line)
        sections[name] = {key: value for key, value in form.cleaned_data.items() if value not in (None, "")}

    _reconcile_delta(sections, data.get("material") or {}, lines)
    config = RunConfig(command=command, **sections)
    logger.debug("parsed run configuration for %s", command)
    return config


def load_run_config(path: Path | str, command: str | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_run_config(text, command)
