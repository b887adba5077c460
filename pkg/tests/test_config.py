"""Configuration parsing, validation and serialization."""
import json

import pytest
from hypothesis import given, strategies as st

from zklab import config
from zklab.config import ConfigError, ExperimentConfig, dyadic, parse_ini, parse_json, parse_list


def test_dyadic_range():
    assert dyadic(4, 32) == [4, 8, 16, 32]
    assert dyadic(3, 3) == []
    assert dyadic(1, 1) == [1]


def test_parse_list_range_and_mixed():
    assert parse_list("int", "4..32") == (4, 8, 16, 32)
    assert parse_list("int", "2, 8..16") == (2, 8, 16)
    assert parse_list("float", "0.5, 1") == (0.5, 1.0)
    assert parse_list("optfloat", "default, 0.25") == (None, 0.25)
    with pytest.raises(ConfigError):
        parse_list("int", "32..4", "estimates.N")


def test_empty_sweep_names_the_field():
    text = "[run]\nseed = 1\n[estimates]\nids = L4-main\nN =\n"
    with pytest.raises(ConfigError) as info:
        parse_ini(text)
    assert info.value.field == "estimates.N"


def test_seed_is_mandatory():
    with pytest.raises(ConfigError) as info:
        parse_ini("[estimates]\nids = L4-main\n")
    assert info.value.field == "run.seed"


@pytest.mark.parametrize("text, field", [
    ("[run]\nseed = 1\n[estimates]\nids = L4-nope\n", "estimates.ids"),
    ("[run]\nseed = 1\n[estimates]\nids = L4-main\nN = 3\n", "estimates.N"),
    ("[run]\nseed = 1\n[estimates]\nids = L4-main\nbogus = 1\n", "estimates.bogus"),
    ("[run]\nseed = x\n", "run.seed"),
    ("[run]\nseed = 1\nexperiments = dance\n", "run.experiments"),
    ("[run]\nseed = 1\n[measure]\nfamily = nope\n", "measure.family"),
    ("[run]\nseed = 1\n[simulate]\nsign = 2\n", "simulate.sign"),
    ("[run]\nseed = 1\n[grid]\nNx = 0\n", "grid"),
])
def test_invalid_configs_name_their_field(text, field):
    with pytest.raises(ConfigError) as info:
        parse_ini(text)
    assert info.value.field == field


def test_unknown_section_rejected():
    with pytest.raises(ConfigError) as info:
        parse_ini("[run]\nseed = 1\n[nonsense]\na = 1\n")
    assert info.value.field == "nonsense"


def test_present_sections_become_experiments():
    cfg = parse_ini("[run]\nseed = 3\n[estimates]\nids = L4-main\n[identities]\nsamples = 10\n")
    assert cfg.experiments == ("estimates", "identities")


def test_bundled_smoke_config_parses():
    from pathlib import Path
    import zklab

    path = Path(zklab.__file__).parent / "data" / "smoke.cfg"
    cfg = config.load(path)
    assert cfg.estimates.ids == ("L4-main", "Schr-L4", "MP-bilinear")
    assert cfg.estimates.N == (2, 4, 8, 16)
    assert cfg.estimates.samples == 5


def test_config_hash_is_stable_and_sensitive():
    a = ExperimentConfig(seed=5)
    assert a.config_hash() == ExperimentConfig(seed=5).config_hash()
    assert a.config_hash() != a.replace(seed=6).config_hash()


dyadics = st.lists(st.sampled_from([1, 2, 4, 8, 16, 32, 64]), min_size=1, max_size=4, unique=True)
floats = st.floats(-2, 2, allow_nan=False).map(lambda v: round(v, 6))


@st.composite
def configs(draw):
    ids = draw(st.lists(st.sampled_from(["L4-main", "Schr-L4", "MP-bilinear", "Bilin-refine"]),
                        min_size=1, max_size=3, unique=True))
    est = config.EstimatesSection(
        ids=tuple(ids), N=tuple(draw(dyadics)), samples=draw(st.integers(1, 50)),
        s=tuple(draw(st.lists(st.one_of(st.none(), floats), min_size=1, max_size=3))),
        b=tuple(draw(st.lists(floats, min_size=1, max_size=3))),
    )
    sim = config.SimulateSection(k=tuple(draw(st.lists(st.integers(1, 4), min_size=1, max_size=3))),
                                 dt=draw(st.sampled_from([1e-3, 2.5e-4, 0.01])))
    return ExperimentConfig(seed=draw(st.integers(0, 2**31)), workers=draw(st.integers(1, 8)),
                            plots=draw(st.booleans()), experiments=("estimates", "simulate"),
                            estimates=est, simulate=sim)


@given(configs())
def test_ini_round_trip_is_idempotent(cfg):
    again = parse_ini(cfg.to_ini())
    assert again == cfg
    assert parse_ini(again.to_ini()).to_ini() == cfg.to_ini()


@given(configs())
def test_json_round_trip_is_idempotent(cfg):
    again = parse_json(cfg.to_json())
    assert again == cfg
    assert again.config_hash() == cfg.config_hash()
    assert json.loads(again.to_json()) == json.loads(cfg.to_json())


def test_json_scalar_is_a_one_element_sweep():
    cfg = config.from_dict({"run": {"seed": 1}, "measure": {"eps": 0.05, "K": 4}})
    assert cfg.measure.eps == (0.05,)
    assert cfg.measure.K == (4,)
