import pytest
from hypothesis import given, strategies as st

from hemloss import config as C


def test_parse_types_and_comments():
    text = """
# a comment
trainer.epochs = 5
trainer.shuffle = false
model.hidden = 64, 32
loss.mu =
eval.unknown_sets = uniform_noise,test_set
loss.tau = 0.5
"""
    got = C.parse(text)
    assert got == {
        "trainer.epochs": 5,
        "trainer.shuffle": False,
        "model.hidden": [64, 32],
        "loss.mu": None,
        "eval.unknown_sets": ["uniform_noise", "test_set"],
        "loss.tau": 0.5,
    }


@pytest.mark.parametrize("text", [
    "trainer.epochs = five",
    "nosection = 1",
    "trainer.unknown = 1",
    "trainer.shuffle = yes",
    "trainer.epochs =",
    "just words",
])
def test_parse_errors(text):
    with pytest.raises(C.ConfigError):
        C.parse(text)


def test_resolve_fills_defaults():
    cfg = C.resolve({"loss.name": "hem"})
    assert set(cfg) == set(C.SCHEMA)
    assert cfg["loss.name"] == "hem" and cfg["trainer.epochs"] == 20
    with pytest.raises(C.ConfigError):
        C.resolve({"loss.nmae": "hem"})


def test_defaults_round_trip():
    cfg = C.resolve()
    assert C.parse(C.serialize(cfg)) == cfg


_values = {
    int: st.integers(-10**6, 10**6),
    float: st.floats(allow_nan=False, allow_infinity=False),
    bool: st.booleans(),
    str: st.text("abcXYZ019_+./-", min_size=1, max_size=12),
    "ints": st.lists(st.integers(-1000, 1000), max_size=5),
    "floats": st.lists(st.floats(allow_nan=False, allow_infinity=False), max_size=5),
    "strs": st.lists(st.text("abz09_:.", min_size=1, max_size=8), max_size=4),
}


@st.composite
def configs(draw):
    keys = draw(st.lists(st.sampled_from(sorted(C.SCHEMA)), unique=True, max_size=12))
    return {k: draw(_values[C.SCHEMA[k][1]]) for k in keys}


@given(configs())
def test_serialize_parse_round_trip(values):
    assert C.parse(C.serialize(values)) == values
