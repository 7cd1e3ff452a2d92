import pytest

from config.runconfig import ConfigError, load_run_config, parse_run_config


@pytest.mark.story("S-108")
def test_empty_document_takes_the_defaults():
    config = parse_run_config("", "gamma")
    assert config.command == "gamma"
    assert config.material == {"p": 1.5, "alpha": 0.05}
    assert config.grid_options() == (1.0, 1.0, 0.0625)
    assert config.geometry["shape"] == "disk"
    assert config.geometry["tiles_per_side"] == 2
    assert config.seed == 0
    cfg = config.solver_config()
    assert cfg.restarts == 3
    assert cfg.grad_tol is None
    assert config.model().mismatch.delta == pytest.approx(0.05 * 3**0.5)


@pytest.mark.story("S-108")
def test_canonical_text_round_trips():
    text = "command: sweep\nexperiment:\n  r_list: [0.5, 1, 2, 4]\n  delta: 0.1\nsolver:\n  seed: 9\n"
    config = parse_run_config(text)
    canonical = config.to_yaml()
    again = parse_run_config(canonical)
    assert again == config
    assert again.to_yaml() == canonical
    assert again.experiment["r_list"] == [0.5, 1.0, 2.0, 4.0]
    assert again.with_seed(11).solver_config().seed == 11
    assert again.with_seed(None) is again


@pytest.mark.story("S-108")
def test_singular_mismatch_is_reported_with_its_line():
    with pytest.raises(ConfigError, match="det H") as excinfo:
        parse_run_config("command: gamma\nmaterial:\n  alpha: 1.2\n")
    assert excinfo.value.line == 3
    assert str(excinfo.value).startswith("line 3: material.alpha")


@pytest.mark.story("S-108")
def test_unknown_keys_and_sections_are_rejected():
    with pytest.raises(ConfigError, match="unknown key geometry.radius") as excinfo:
        parse_run_config("geometry:\n  r: 1.0\n  radius: 2.0\n", "gamma")
    assert excinfo.value.line == 3
    with pytest.raises(ConfigError, match="unknown section 'mesh'"):
        parse_run_config("mesh: {}\n", "gamma")


@pytest.mark.story("S-108")
@pytest.mark.parametrize(
    "text, message",
    [
        ("command: sweep\n", "configuration is for 'sweep'"),
        ("material:\n  p: 2.5\n", "growth exponent"),
        ("material:\n  alpha: 0.1\n  zeta: [1, 1, 1]\n", "either alpha or zeta"),
        ("geometry:\n  polygon: [[0, 0], [0.1, 0], [0, 0.1]]\n", "polygon and burgers"),
        ("experiment:\n  h: 2.0\n", "thickness h"),
        ("- 1\n- 2\n", "mapping of sections"),
        ("material: [\n", "invalid YAML"),
    ],
)
def test_invalid_documents(text, message):
    with pytest.raises(ConfigError, match=message):
        parse_run_config(text, "gamma")


@pytest.mark.story("S-108")
def test_missing_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_run_config(tmp_path / "absent.yaml", "gamma")
    path = tmp_path / "probe.yaml"
    path.write_text("experiment:\n  probe: equivalence\n  samples: 20\n")
    config = load_run_config(path, "probe")
    assert config.experiment["probe"] == "equivalence"
    assert config.experiment["samples"] == 20


@pytest.mark.story("S-108")
def test_experiment_delta_sets_or_checks_the_material():
    config = parse_run_config("experiment:\n  delta: 0.1\n  strict: true\n", "sweep")
    assert config.material["alpha"] == pytest.approx(0.1 / 3**0.5)
    assert config.model().mismatch.delta == pytest.approx(0.1)
    assert config.experiment["strict"] is True
    with pytest.raises(ConfigError, match="disagrees") as excinfo:
        parse_run_config("material:\n  alpha: 0.05\nexperiment:\n  delta: 0.2\n", "sweep")
    assert excinfo.value.line == 4
