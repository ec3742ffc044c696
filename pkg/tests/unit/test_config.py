"""
Unit tests for configuration loading
"""

import pytest

from src.utils.config import DATA_DIR, PROJECT_ROOT, Settings, get_settings, load_settings, load_yaml_file
from src.utils.error_handler import ValidationError


class TestLoadSettings:

    def test_default_config_file(self):
        settings = load_settings()
        assert settings.bias_namespace == "https://bias-project.x/bias/"
        assert settings.default_data == "seed"
        assert settings.seed_file == str(PROJECT_ROOT / "src" / "data" / "seed_vocabulary.ttl")

    def test_missing_file_uses_builtin_defaults(self, tmp_path, monkeypatch):
        monkeypatch.delenv('LOG_LEVEL', raising=False)
        assert load_settings(str(tmp_path / "absent.yml")) == Settings()

    def test_sections_flatten_and_relative_paths_resolve(self, tmp_path):
        path = tmp_path / "custom.yml"
        path.write_text(
            "vocabulary:\n"
            "  bias_namespace: https://example.org/bias/\n"
            "  seed_file: data/custom.ttl\n"
            "quality:\n"
            "  accessibility_locator: https://example.org/viz\n"
            "monitoring:\n"
            "  slow_operation_ms: 5\n",
            encoding='utf-8',
        )
        settings = load_settings(str(path))
        assert settings.bias_namespace == "https://example.org/bias/"
        assert settings.seed_file == str(PROJECT_ROOT / "data" / "custom.ttl")
        assert settings.accessibility_locator == "https://example.org/viz"
        assert settings.slow_operation_ms == 5
        assert settings.questions_file == str(DATA_DIR / "competency_questions.yml")

    def test_environment_overrides(self, monkeypatch):
        monkeypatch.setenv('BIASDOC_DATA', "/tmp/graph.ttl")
        monkeypatch.setenv('LOG_LEVEL', "ERROR")
        settings = load_settings()
        assert settings.default_data == "/tmp/graph.ttl"
        assert settings.log_level == "ERROR"

    def test_config_path_from_environment(self, tmp_path, monkeypatch):
        path = tmp_path / "env.yml"
        path.write_text("cli:\n  default_data: graph.ttl\n", encoding='utf-8')
        monkeypatch.setenv('BIASDOC_CONFIG', str(path))
        assert get_settings().default_data == "graph.ttl"


class TestLoadYamlFile:

    def test_empty_document(self, tmp_path):
        path = tmp_path / "empty.yml"
        path.write_text("", encoding='utf-8')
        assert load_yaml_file(str(path)) == {}

    def test_malformed_document(self, tmp_path):
        path = tmp_path / "broken.yml"
        path.write_text("questions: [unclosed\n", encoding='utf-8')
        with pytest.raises(ValidationError, match="malformed YAML"):
            load_yaml_file(str(path))

    def test_top_level_must_be_mapping(self, tmp_path):
        path = tmp_path / "list.yml"
        path.write_text("- a\n- b\n", encoding='utf-8')
        with pytest.raises(ValidationError, match="mapping"):
            load_yaml_file(str(path))
