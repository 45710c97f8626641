import pytest

from hetnews.config import RunConfig, format_config, load_config, parse_config
from hetnews.errors import ConfigError


def test_defaults():
    cfg = parse_config("")
    assert cfg == RunConfig()
    assert cfg.train.dim == 128 and cfg.train.dropout_rate == 0.4
    assert cfg.synth.topics == 23


def test_values_are_typed():
    cfg = parse_config("""
[train]
model_kind = HGT
epochs = 12   ; inline comment
learning_rate = 0.0005
hide_targets = true

[synth]
planted_blocks = 2

[data]
attributes = none
""")
    assert cfg.train.model_kind == "HGT" and cfg.train.mode == "mini-batch"
    assert cfg.train.epochs == 12 and cfg.train.learning_rate == 0.0005
    assert cfg.train.hide_targets is True
    assert cfg.synth.planted_blocks == 2
    assert cfg.data.attributes is None


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError, match=r"run.cfg:3: unknown key 'epoch' in \[train\]"):
        parse_config("[train]\ndim = 8\nepoch = 3\n", "run.cfg")


def test_bad_values():
    with pytest.raises(ConfigError, match="cannot parse"):
        parse_config("[train]\ndim = eight\n")
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config("[trainer]\ndim = 8\n")
    with pytest.raises(ConfigError, match=":3:"):
        parse_config("[train]\ndim = 8\ndropout_rate = 1.5\n", "x.cfg")


def test_round_trip(tmp_path):
    cfg = parse_config("[train]\nmodel_kind = HETGNN\ndim = 16\n[split]\nseed = 4\n[eval]\nuse_case = B\n")
    path = tmp_path / "c.cfg"
    path.write_text(format_config(cfg))
    assert load_config(path) == cfg


def test_with_seed_replaces_every_seed():
    cfg = RunConfig().with_seed(17)
    assert set(cfg.seeds().values()) == {17}
