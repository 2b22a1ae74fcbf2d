import pytest

from fisher_quant_bench.config import _load_system_config, get_settings


@pytest.fixture
def fresh_settings():
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


def test_shipped_defaults(fresh_settings, monkeypatch):
    for name in ('FISHER_BENCH_SEED', 'FISHER_BENCH_THREADS', 'FISHER_BENCH_OUTPUT_DIR'):
        monkeypatch.setenv(name, "")
    settings = get_settings()
    assert settings.output.significant_digits == 9
    assert settings.limits.max_exact_tree_bits == 20
    assert settings.output.default_threads >= 1


def test_environment_overrides(fresh_settings, monkeypatch):
    monkeypatch.setenv('FISHER_BENCH_SEED', "42")
    monkeypatch.setenv('FISHER_BENCH_THREADS', "3")
    monkeypatch.setenv('FISHER_BENCH_OUTPUT_DIR', "elsewhere")
    output = get_settings().output
    assert output.default_seed == 42
    assert output.default_threads == 3
    assert output.default_output_dir == "elsewhere"


def test_missing_config_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        _load_system_config(tmp_path / "system_config.json")
