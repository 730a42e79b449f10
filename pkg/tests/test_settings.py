from core.settings import DEFAULT_SETTINGS, load_settings, save_settings


def test_missing_file_gives_defaults(tmp_path):
    assert load_settings(str(tmp_path / "absent.json")) == DEFAULT_SETTINGS


def test_save_then_load(tmp_path):
    path = str(tmp_path / "nested" / "settings.json")
    settings = dict(DEFAULT_SETTINGS, max_exponent=6, seed=7, extra="丢弃")
    save_settings(settings, path)
    loaded = load_settings(path)
    assert loaded["max_exponent"] == 6
    assert loaded["seed"] == 7
    assert "extra" not in loaded


def test_unknown_keys_ignored_and_broken_file_falls_back(tmp_path):
    path = tmp_path / "settings.json"
    path.write_text('{"time_cap": 5, "colour": "red"}', encoding="utf-8")
    loaded = load_settings(str(path))
    assert loaded["time_cap"] == 5
    assert "colour" not in loaded

    path.write_text("{not json", encoding="utf-8")
    assert load_settings(str(path)) == DEFAULT_SETTINGS
