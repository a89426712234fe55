import pytest

from exml.config import ExperimentConfig, FilesSpec, MultiviewSpec, SyntheticSpec
from exml.errors import ConfigError


def test_defaults():
    c = ExperimentConfig()
    assert c.budget_ratio == 0.2 and c.theta_grid == (0.1, 0.2, 0.3, 0.4)
    assert (c.train.c_h, c.train.c_g, c.train.loss_normalization) == (1.0, 1.0, "sum")
    assert isinstance(c.dataset, SyntheticSpec)


def test_round_trip_and_hash():
    c = ExperimentConfig.from_dict({"budget_ratio": 0.3, "strategy": "median", "train": {"c_h": 0.5},
                                    "dataset": {"kind": "synthetic", "angles": [30, 90]}})
    assert c.strategies == ("median",) and c.train.c_h == 0.5 and c.dataset.angles == (30, 90)
    again = ExperimentConfig.from_dict(c.to_dict())
    assert again.config_hash() == c.config_hash()
    assert c.replace(seed=1).config_hash() != c.config_hash()


@pytest.mark.parametrize("raw,key", [
    ({"budget": 0.2}, "budget"),
    ({"budget_ratio": 2.0}, "budget_ratio"),
    ({"budget_ratio": "x"}, "budget_ratio"),
    ({"repetitions": 1.5}, "repetitions"),
    ({"theta_grid": [0.6]}, "theta_grid"),
    ({"strategies": ["greedy"]}, "strategies"),
    ({"variants": ["SL", "X"]}, "variants"),
    ({"train": {"c": 1}}, "train.c"),
    ({"train": {"c_h": -1}}, "train"),
    ({"dataset": {"kind": "mystery"}}, "dataset.kind"),
    ({"dataset": {"kind": "files"}}, "dataset.path"),
    ({"dataset": {"kind": "synthetic", "n_per_class": 0}}, "dataset.n_per_class"),
    ({"dataset": {"kind": "multiview_csv", "path": "x", "views": {}, "original_view": "a",
                  "class_configurations": [{"positive": ["1"]}]}}, "dataset.class_configurations[0]"),
    ({"strategy": "median", "strategies": ["median"]}, "strategy"),
])
def test_errors_name_the_key(raw, key):
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_dict(raw)
    assert info.value.key == key
    assert str(info.value).startswith(key)


def test_load_reports_json_position(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{\n  "seed": 1,\n  "budget_ratio": \n}')
    with pytest.raises(ConfigError, match="line 4 column 1"):
        ExperimentConfig.load(p)
    with pytest.raises(ConfigError):
        ExperimentConfig.load(tmp_path / "missing.json")


def test_dataset_kinds():
    c = ExperimentConfig.from_dict({"dataset": {"kind": "files", "path": "d"}})
    assert isinstance(c.dataset, FilesSpec)
    c = ExperimentConfig.from_dict({"dataset": {
        "kind": "multiview_csv", "path": "m.csv", "views": "views.json", "original_view": "mor",
        "class_configurations": [{"positive": ["0"], "negative": ["1"], "unknown": ["2"]}]}})
    assert isinstance(c.dataset, MultiviewSpec) and c.dataset.train_fraction == pytest.approx(1 / 3)
