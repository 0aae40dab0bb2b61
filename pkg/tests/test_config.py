import json
from pathlib import Path

import pytest

from fxtadapt.config import apply_overrides, load_config, load_experiment, output_root, resolve_config
from fxtadapt.errors import ConfigError


def test_defaults_resolve_to_table_values():
    config = resolve_config(load_config(None))
    assert config.experiment.scenario == "gap"
    assert config.experiment.dt == 1e-3
    assert config.estimator.c1e == config.estimator.c2e == 50.0
    assert config.estimator.mu_e == 5.0
    assert config.gap.theta_true == [-1.0, 1.0]
    assert config.gap.x0 == [3.0, -10.0]
    assert config.gap.u_max == [2.5, 2.5]
    assert config.overtake.M == 1994.0
    assert sum(config.overtake.horizons) == 20.0
    assert config.theta_bar() == 10.0
    assert config.t_final() == config.gap.t_final


def test_file_merges_over_defaults(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"experiment": {"scenario": "overtake"}, "estimator": {"c1e": 20}}))
    config = load_experiment(str(path))
    assert config.experiment.scenario == "overtake"
    assert config.estimator.c1e == 20.0
    assert config.estimator.c2e == 50.0
    assert config.t_final() == 35.0


def test_shipped_configs_resolve():
    root = Path(__file__).resolve().parents[1] / "config"
    for name in (root / "gap.json", root / "overtake.json"):
        config = load_experiment(str(name))
        assert config.experiment.dt == 1e-3


def test_malformed_json_reports_line_and_column(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "experiment": {\n    "dt": ,\n  }\n}')
    with pytest.raises(ConfigError) as info:
        load_config(str(path))
    assert f"{path}:3:" in str(info.value)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "nope.json"))


def test_overrides_parse_json_values():
    cfg = apply_overrides(
        load_config(None),
        ["estimator.c1e=20", "experiment.scenario=overtake", "gap.x0=[3, -3]", "estimator.gamma=auto"],
    )
    config = resolve_config(cfg)
    assert config.estimator.c1e == 20.0
    assert config.experiment.scenario == "overtake"
    assert config.gap.x0 == [3.0, -3.0]
    assert config.estimator.gamma == "auto"


@pytest.mark.parametrize("item", ["nosection=1", "bogus.key=1", "estimator.c1e"])
def test_bad_overrides(item):
    with pytest.raises(ConfigError):
        apply_overrides(load_config(None), [item])


def test_validation_error_names_dotted_field():
    cfg = apply_overrides(load_config(None), ["experiment.dt=-1"])
    with pytest.raises(ConfigError) as info:
        resolve_config(cfg)
    assert "experiment.dt" in str(info.value)


@pytest.mark.parametrize("item", ["gap.typo=5", "estimator.c1=20", "experiment.tfinal=3"])
def test_unknown_keys_are_rejected(item):
    cfg = apply_overrides(load_config(None), [item])
    with pytest.raises(ConfigError) as info:
        resolve_config(cfg)
    assert item.split("=")[0] in str(info.value)


def test_misspelled_file_field_is_rejected(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"overtake": {"v_crusie": 25}}))
    with pytest.raises(ConfigError) as info:
        load_experiment(str(path))
    assert "overtake.v_crusie" in str(info.value)


def test_dimension_checks():
    cfg = apply_overrides(load_config(None), ["overtake.horizons=[3, 5, 7]"])
    with pytest.raises(ConfigError) as info:
        resolve_config(cfg)
    assert "overtake" in str(info.value)


def test_output_root_from_environment(monkeypatch, tmp_path):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("FXTADAPT_OUTPUT_ROOT", raising=False)
    assert output_root() == "artifacts"
    monkeypatch.setenv("FXTADAPT_OUTPUT_ROOT", str(tmp_path / "runs"))
    assert output_root() == str(tmp_path / "runs")
