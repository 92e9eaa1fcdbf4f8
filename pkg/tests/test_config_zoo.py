import textwrap

import pytest

from chainscope import zoo
from chainscope.config import (
    ConfigError,
    build_model,
    load_config,
    parse_config,
    resolve_schedule,
)

ZOO = ["identity", "rotation", "doubling", "tent", "north_south", "full_shift",
       "golden_mean", "example31"]

BASE = {
    "model": {"kind": "grid", "map": "doubling", "mesh": 0.0625},
    "schedule": {"epsilons": [0.25, 0.125], "deltas": [0.1, "proj_error"], "radii": [0.25]},
}


def test_zoo_has_eight_systems():
    assert zoo.names() == ZOO


@pytest.mark.parametrize("name", ZOO)
def test_zoo_defaults_build(name):
    cfg = zoo.default_config(name)
    m = build_model(cfg.model)
    sched = resolve_schedule(cfg.schedule, m)
    sched.check(m)
    assert cfg.digest() == zoo.default_config(name).digest()


def test_describe_example31():
    text = zoo.describe("example31")
    for key in ("K", "N", "s"):
        assert f"{key} =" in text
    with pytest.raises(KeyError):
        zoo.describe("nosuch")


def test_proj_error_token():
    cfg = parse_config(BASE)
    m = build_model(cfg.model)
    assert resolve_schedule(cfg.schedule, m).deltas[-1] == m.proj_error


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        parse_config({**BASE, "extra": {}})
    with pytest.raises(ConfigError):
        parse_config({**BASE, "model": {**BASE["model"], "colour": 1}})
    with pytest.raises(ConfigError):
        parse_config({**BASE, "analysis": {"thetta": 0.1}})
    with pytest.raises(ConfigError):
        parse_config({**BASE, "schedule": {**BASE["schedule"], "gammas": [1]}})


def test_missing_pieces():
    with pytest.raises(ConfigError):
        parse_config({"model": BASE["model"]})
    with pytest.raises(ConfigError):
        parse_config({**BASE, "schedule": {"epsilons": [0.1], "deltas": [0.1]}})
    with pytest.raises(ConfigError):
        build_model({"kind": "grid", "mesh": 0.25})
    with pytest.raises(ConfigError):
        parse_config({**BASE, "model": {"kind": "spline"}})
    with pytest.raises(ConfigError):
        resolve_schedule({"epsilons": [0.1, 0.2], "deltas": [0.1], "radii": [0.1]}, None)


def test_run_overrides_and_digest():
    cfg = parse_config(BASE)
    other = cfg.with_run(out="elsewhere", jobs=4, seed=None)
    assert other.run.out == "elsewhere" and other.run.seed == cfg.run.seed
    assert other.digest() == cfg.digest()
    assert cfg.with_run(seed=5).digest() != cfg.digest()


def test_load_toml(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(textwrap.dedent("""
        [model]
        kind = "subshift"
        alphabet = ["0", "1"]
        forbidden = ["11"]
        window = 2

        [schedule]
        epsilons = [0.5]
        deltas = [0.1]
        radii = [0.5]

        [analysis]
        n_range = [1, 6]
    """))
    cfg = load_config(path)
    assert cfg.analysis.n_range == (1, 6)
    assert build_model(cfg.model).size == 13
    (tmp_path / "bad.toml").write_text("[model\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.toml")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")


def test_matrix_kind():
    cfg = parse_config({"model": {"kind": "matrix", "dist": [[0, 1], [1, 0]], "image": [1, 0]},
                        "schedule": {"epsilons": [0.5], "deltas": [0.5], "radii": [0.5]}})
    m = build_model(cfg.model)
    assert list(m.image) == [1, 0]
