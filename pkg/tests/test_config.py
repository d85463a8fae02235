import pytest

from webcurate.config import PipelineConfig, load_config
from webcurate.errors import ConfigError


class TestDefaults:
    def test_rule_constants(self):
        cfg = PipelineConfig()
        assert cfg.html_range == (640, 10240)
        assert cfg.css_range == (640, 20480)
        assert cfg.score_threshold == 2.0
        assert cfg.nsfw_threshold == 0.04
        assert cfg.bad_word_cap == 20
        assert cfg.per_split == 256
        assert cfg.viewport_width == 1280

    def test_all_stages_default_on(self):
        cfg = PipelineConfig()
        for stage, params in cfg.stage_params().items():
            assert params["enabled"], stage


class TestLoadConfig:
    def test_file_and_overrides(self, tmp_path):
        path = tmp_path / "cfg.txt"
        path.write_text(
            "# pipeline config\n"
            "config_version = 1\n"
            "seed = 99\n"
            "html_range = 100:200\n"
            "render_backend = static\n"
            "safety_enabled = false\n",
            encoding="utf-8",
        )
        cfg = load_config(path)
        assert cfg.seed == 99
        assert cfg.html_range == (100, 200)
        assert cfg.safety_enabled is False
        cfg = load_config(path, {"seed": "7"})
        assert cfg.seed == 7

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "cfg.txt"
        path.write_text("mystery_knob = 3\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_bad_version_rejected(self, tmp_path):
        path = tmp_path / "cfg.txt"
        path.write_text("config_version = 99\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.txt")

    def test_bad_boolean(self, tmp_path):
        path = tmp_path / "cfg.txt"
        path.write_text("safety_enabled = maybe\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_defaults_without_file(self):
        assert load_config(None) == PipelineConfig()


class TestStageHashes:
    def test_change_invalidates_downstream_only(self):
        base = PipelineConfig().stage_hashes()
        changed = PipelineConfig(seed=99).stage_hashes()
        order = list(base)
        partition_index = order.index("partition")
        for stage in order[:partition_index]:
            assert base[stage] == changed[stage], stage
        for stage in order[partition_index:]:
            assert base[stage] != changed[stage], stage

    def test_upstream_change_cascades(self):
        base = PipelineConfig().stage_hashes()
        changed = PipelineConfig(html_range=(1, 2)).stage_hashes()
        assert all(base[s] != changed[s] for s in base)

    def test_same_config_same_hashes(self):
        assert PipelineConfig().stage_hashes() == PipelineConfig().stage_hashes()
