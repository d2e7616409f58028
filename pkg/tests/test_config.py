import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracdirac.config import ConfigError, ExperimentConfig, load_config
from fracdirac.config import InverseBlock, ModelBlock, OutputBlock, SolverBlock, SpectrumBlock
from fracdirac.report import dumps, write_csv


def test_defaults_roundtrip():
    c = ExperimentConfig()
    assert ExperimentConfig.from_toml(c.to_toml()) == c
    assert ExperimentConfig.from_json(json.dumps(c.to_dict())) == c


finite = st.floats(min_value=-3, max_value=3, allow_nan=False, allow_infinity=False)
exprs = st.sampled_from(["0", "sin(x)", "cos(2*x) + 0.5", "x^alpha/alpha", "exp(-(x-t))", "1e-3*x*t", "x"])


@settings(max_examples=60, deadline=None)
@given(
    alpha=st.floats(min_value=1e-3, max_value=1.0, allow_nan=False),
    theta=finite, beta=finite, p=exprs, r=exprs, m12=exprs,
    n_lo=st.integers(1, 50), extra=st.integers(0, 50),
    known=st.sampled_from(["L", "pr"]), smoothing=st.integers(0, 9),
    directory=st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=12),
    formats=st.lists(st.sampled_from(["csv", "json"]), unique=True),
)
def test_serialize_parse_roundtrip(alpha, theta, beta, p, r, m12, n_lo, extra, known, smoothing,
                                   directory, formats):
    c = ExperimentConfig(
        model=ModelBlock(alpha, theta, beta, p, r, M12=m12),
        solver=SolverBlock(513, 20),
        spectrum=SpectrumBlock(n_lo, n_lo + extra),
        inverse=InverseBlock(n_max=32, known=known, smoothing=smoothing),
        output=OutputBlock(directory, formats),
    )
    assert ExperimentConfig.from_toml(c.to_toml()) == c


def test_partial_config_uses_defaults():
    c = ExperimentConfig.from_toml('[model]\nalpha = 0.5\np = "sin(x)"\n')
    assert c.model.alpha == 0.5 and c.model.r == "0" and c.spectrum.n_hi == 64


def test_numbers_accepted_for_expressions():
    c = ExperimentConfig.from_toml("[model]\np = 0.3\nr = 1\n")
    assert c.model.p == "0.3" and c.model.r == "1"


@pytest.mark.parametrize("text, match", [
    ("[model]\nalpha = 1.5\n", "alpha"),
    ("[model]\nalpha = 0\n", "alpha"),
    ('[model]\np = "1 + * 2"\n', "offset 4"),
    ('[model]\np = "y"\n', "unknown identifier"),
    ("[spectrum]\nn_lo = 5\nn_hi = 4\n", "n_lo"),
    ("[spectrum]\nn_lo = 0\n", "n_lo"),
    ('[inverse]\nknown = "p"\n', "known"),
    ("[solver]\ngrid_points = 2\n", "grid_points"),
    ("[nonsense]\n", "unknown section"),
    ("[model]\nfoo = 1\n", "unknown key"),
    ('[solver]\ngrid_points = "many"\n', "integer"),
    ("[model]\ntheta = true\n", "number"),
    ('[output]\nformats = ["xml"]\n', "format"),
])
def test_validation_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        ExperimentConfig.from_toml(text)


def test_syntax_error_has_position():
    with pytest.raises(ConfigError, match=r"line 2, column \d+"):
        ExperimentConfig.from_toml("[model]\nalpha = = 1\n")
    with pytest.raises(ConfigError, match="line 1, column"):
        ExperimentConfig.from_json("{bad json}")


def test_load_config_by_suffix(tmp_path):
    c = ExperimentConfig(model=ModelBlock(alpha=0.7, p="sin(x)"))
    (tmp_path / "a.toml").write_text(c.to_toml())
    (tmp_path / "a.json").write_text(json.dumps(c.to_dict()))
    assert load_config(tmp_path / "a.toml") == c == load_config(tmp_path / "a.json")
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.toml")


def test_build_model_grid_override():
    c = ExperimentConfig(model=ModelBlock(alpha=0.5, p="sin(x)"))
    assert c.build_model().grid.n_points == 4097
    assert c.build_model(257).grid.n_points == 257


# -- deterministic writers -----------------------------------------------------------

def test_dumps_is_canonical():
    obj = {"b": [1.0, 2, float("nan")], "a": {"10": 1, "9": 0.1, "x": None}, "c": True}
    text = dumps(obj)
    assert text == dumps(json.loads(json.dumps(obj, allow_nan=True)))
    back = json.loads(text)
    assert back["b"] == [1.0, 2, None] and back["a"]["9"] == 0.1
    assert list(back["a"]) == ["9", "10", "x"]  # numeric keys in numeric order first
    assert "0.10000000000000001" in text  # 17 significant digits


def test_dumps_float_roundtrip():
    vals = [0.1, 1 / 3, 1e-300, 2.0**60, -0.0]
    assert json.loads(dumps(vals)) == vals


def test_write_csv(tmp_path):
    path = write_csv(tmp_path / "t.csv", ("n", "v"), [(1, 0.1), (2, float("nan"))])
    assert path.read_text() == "n,v\n1,0.10000000000000001\n2,nan\n"
