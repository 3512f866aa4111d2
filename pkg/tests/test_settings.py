"""
Layered configuration: built-in defaults, YAML file, environment.
"""

import pytest

from reduction_tools.errors import DomainError
from reduction_tools.settings import CONFIG_ENV, LOG_LEVEL_ENV, WORKERS_ENV, ToolkitSettings, load_settings


def test_defaults():
    settings = load_settings()
    assert settings == ToolkitSettings()
    assert settings.dimension_range == (3, 20)
    assert settings.grid == (129, 65)


def test_shipped_defaults_file_matches_built_in(get_root_dir_fixture):
    path = get_root_dir_fixture.parent / "config" / "defaults.yml"
    assert load_settings(str(path)) == ToolkitSettings()


def test_yaml_overrides(tmp_path):
    path = tmp_path / "settings.yml"
    path.write_text("audit_mesh: 200\ngrid: [65, 33]\ndimension_range: [3, 8]\n")
    settings = load_settings(str(path))
    assert settings.audit_mesh == 200
    assert settings.grid == (65, 33)
    assert settings.dimension_range == (3, 8)
    assert settings.scan_mesh == ToolkitSettings().scan_mesh


def test_config_path_from_environment(tmp_path, monkeypatch):
    path = tmp_path / "settings.yml"
    path.write_text("eps_steps: 4\n")
    monkeypatch.setenv(CONFIG_ENV, str(path))
    assert load_settings().eps_steps == 4


def test_environment_overrides_file(tmp_path, monkeypatch):
    path = tmp_path / "settings.yml"
    path.write_text("workers: 2\nlog_level: INFO\n")
    monkeypatch.setenv(WORKERS_ENV, "6")
    monkeypatch.setenv(LOG_LEVEL_ENV, "debug")
    settings = load_settings(str(path))
    assert settings.workers == 6
    assert settings.log_level == "DEBUG"


def test_unknown_keys_are_rejected(tmp_path):
    path = tmp_path / "settings.yml"
    path.write_text("audit_mesh: 200\nmesh_size: 3\n")
    with pytest.raises(DomainError, match="mesh_size"):
        load_settings(str(path))


def test_non_mapping_file_is_rejected(tmp_path):
    path = tmp_path / "settings.yml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(DomainError):
        load_settings(str(path))


def test_missing_file_raises_os_error(tmp_path):
    with pytest.raises(OSError):
        load_settings(str(tmp_path / "absent.yml"))


@pytest.mark.parametrize("changes", [
    {"grid": (128, 65)},
    {"dimension_range": (2, 5)},
    {"eps_start": 0.01, "eps_end": 0.1},
    {"log_level": "LOUD"},
    {"guard_offset": 0.0},
])
def test_invalid_values(changes):
    with pytest.raises(DomainError):
        ToolkitSettings(**changes)

