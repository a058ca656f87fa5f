"""Configuration contracts: dataclass validation, INI loading, budget fill-in."""
import pytest

from dualpath.config import ConfigError, ModelConfig, TrainConfig, load_config_file
from dualpath.flops import solve_widths


def test_model_defaults_are_valid():
    cfg = ModelConfig()
    assert cfg.variant == "dual" and cfg.k == 4
    assert cfg.n_rep == 1 and cfg.d_head == 16


def test_model_validation_errors():
    with pytest.raises(ConfigError):
        ModelConfig(variant="wide")
    with pytest.raises(ConfigError):
        ModelConfig(d=65, h_q=4)
    with pytest.raises(ConfigError):
        ModelConfig(h_q=4, h_kv=3)
    with pytest.raises(ConfigError):
        ModelConfig(variant="purewide", k=2)
    with pytest.raises(ConfigError):
        ModelConfig(d_ffn_deep=100)
    with pytest.raises(ConfigError):
        ModelConfig(d_ffn_wide=None)
    with pytest.raises(ConfigError):
        ModelConfig(L=0)


def test_variant_specific_width_requirements():
    # each variant validates only the widths its paths use
    assert ModelConfig(variant="pureloop", d_ffn_wide=None).d_ffn_deep == 128
    assert ModelConfig(variant="purewide", k=1, d_ffn_deep=None).d_ffn_wide == 256
    with pytest.raises(ConfigError):
        ModelConfig(variant="pureloop", d_ffn_deep=None)


def test_grouped_query_ratio():
    cfg = ModelConfig(h_q=4, h_kv=2)
    assert cfg.n_rep == 2


def test_hash_tracks_content():
    a = ModelConfig()
    b = ModelConfig()
    c = ModelConfig(k=3)
    assert a.hash() == b.hash()
    assert a.hash() != c.hash()
    assert len(a.hash()) == 16


def test_dict_round_trip():
    cfg = ModelConfig(L=2, d=32, h_q=2, h_kv=2, variant="pureloop", k=3,
                      d_ffn_wide=None)
    assert ModelConfig.from_dict(cfg.to_dict()) == cfg
    tc = TrainConfig(total_steps=50, warmup_steps=5)
    assert TrainConfig.from_dict(tc.to_dict()) == tc


def test_train_validation_errors():
    with pytest.raises(ConfigError):
        TrainConfig(precision="float16")
    with pytest.raises(ConfigError):
        TrainConfig(total_steps=10, warmup_steps=11)
    with pytest.raises(ConfigError):
        TrainConfig(warmup_steps=0)
    with pytest.raises(ConfigError):
        TrainConfig(batch_size=0)


def _write(tmp_path, text):
    path = tmp_path / "cfg.ini"
    path.write_text(text)
    return str(path)


def test_load_config_file_basic(tmp_path):
    path = _write(tmp_path, """
[model]
L = 2
d = 32
h_q = 2
h_kv = 2
variant = dual
k = 3
d_ffn_deep = 64
d_ffn_wide = 128

[train]
total_steps = 40
warmup_steps = 4
seed = 11
""")
    model, train, budget = load_config_file(path)
    assert model.L == 2 and model.k == 3 and model.d_ffn_wide == 128
    assert train.total_steps == 40 and train.seed == 11
    assert budget == {}


def test_load_config_file_fills_widths_from_budget(tmp_path):
    path = _write(tmp_path, """
[model]
variant = dual
k = 4
d = 768
h_q = 12
h_kv = 12
vocab = 50304
t_max = 1024

[train]
total_steps = 10
warmup_steps = 1

[budget]
budget = 80000000
alpha = 0.5
""")
    model, _, budget = load_config_file(path)
    sol = solve_widths(80_000_000, "dual", 4, 0.5, d=768, n_rep=1)
    assert model.d_ffn_deep == sol["d_ffn"]
    assert model.d_ffn_wide == sol["d_ffn_wide"]
    assert budget == {"budget": 80000000.0, "alpha": 0.5}


def test_load_config_file_explicit_widths_beat_budget(tmp_path):
    path = _write(tmp_path, """
[model]
L = 2
d = 32
h_q = 2
h_kv = 2
d_ffn_deep = 64
d_ffn_wide = 64

[train]
total_steps = 10
warmup_steps = 1

[budget]
budget = 80000000
alpha = 0.25
""")
    model, _, _ = load_config_file(path)
    assert model.d_ffn_deep == 64 and model.d_ffn_wide == 64


def test_load_config_file_rejects_unknown_options(tmp_path):
    with pytest.raises(ConfigError):
        load_config_file(_write(tmp_path, "[model]\nwidth = 64\n"))
    with pytest.raises(ConfigError):
        load_config_file(_write(tmp_path, "[budget]\nflops = 1\n"))
    with pytest.raises(ConfigError):
        load_config_file(str(tmp_path / "missing.ini"))


def test_load_config_file_coercions(tmp_path):
    path = _write(tmp_path, """
[model]
tie_embeddings = yes
rope_base = 1e4

[train]
total_steps = 2e3
warmup_steps = 100
peak_lr = 5e-4
""")
    model, train, _ = load_config_file(path)
    assert model.tie_embeddings is True
    assert model.rope_base == 10000.0
    assert train.total_steps == 2000 and isinstance(train.total_steps, int)
    assert train.peak_lr == 5e-4
