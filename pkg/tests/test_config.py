from pathlib import Path

import numpy as np
import pytest

from gauge_measure.config import load_config, parse_config
from gauge_measure.domain import MeasurableSet
from gauge_measure.errors import ConfigError
from gauge_measure.setvalued import sv_measure_of
from gauge_measure.convex import norm_of_set

DEMO = Path(__file__).resolve().parents[1] / "configs" / "demo.ini"


def test_demo_config_loads():
    cfg = load_config(DEMO)
    assert cfg.settings.dimension == 2 and cfg.settings.tolerance == 1e-9
    assert np.allclose(cfg.measures["mu"].value(MeasurableSet.interval(0, 1)), [1.0, 1.0])
    assert np.allclose(cfg.measures["split"].value(MeasurableSet.interval(0, 2)), [1.0, 1.0])
    assert cfg.measures["mu"].components[1].is_polynomial
    assert cfg.integrands["ramp"].fn(np.array([0.5]))[0] == 0.5
    ball = cfg.setmeasures["ball"]
    assert norm_of_set(sv_measure_of(ball, MeasurableSet.interval(0, 1))) == pytest.approx(1.0)
    assert set(cfg.experiments) == {"dct-custom", "oscillating", "vitali-ball"}
    assert cfg.experiments["vitali-ball"].values["ui"] == [(0.1, 0.05), (0.01, 0.005)]


def test_parsing_is_deterministic():
    a, b = load_config(DEMO), load_config(DEMO)
    assert a.settings == b.settings
    A = MeasurableSet.parse("[0.1, 0.35] U (0.6, 1.7]")
    for name in a.measures:
        assert np.array_equal(a.measures[name].value(A), b.measures[name].value(A))


def test_atoms_nulls_and_unbounded_support():
    cfg = parse_config(
        "[settings]\ndimension = 1\n"
        "[measure m]\ndensity = exp(-t)\nsupport = [0, inf]\natoms = 0.5: 2\n"
        "[measure n]\ndensity = t\nnull = [2, 3]\n"
        "[integrand g]\nexpr = 1/(1+t^2)\nat_infinity = 0\nexempt = 0.1, 0.2\n")
    m = cfg.measures["m"]
    assert m.value(MeasurableSet.parse("[0, inf]"))[0] == pytest.approx(3.0, abs=1e-9)
    assert cfg.measures["n"].null_sets == (MeasurableSet.interval(2, 3),)
    with pytest.raises(ConfigError, match="carries mass"):
        parse_config("[measure n]\ndensity = t\nnull = [0.5, 3]\n")
    assert cfg.integrands["g"].exempt == (0.1, 0.2)
    assert cfg.integrands["g"].fn.at_infinity == 0.0


@pytest.mark.parametrize("text, line, column, fragment", [
    ("[settings]\nfoo = 1\n", 2, 1, "unknown key 'foo'"),
    ("[settings]\n\nnorm = l7\n", 3, 8, "norm must be one of"),
    ("[measure m]\ndensity = 1 + * t\n", 2, 15, "syntax error"),
    ("[measure m]\ndensity = 1; t +\n", 2, 17, "syntax error"),
    ("[bogus]\n", 1, 1, "unknown section"),
    ("[integrand f]\nexpr = t\nexpr = 2\n", 3, 1, "duplicate key"),
    ("x = 1\n", 1, 1, "outside any section"),
    ("[settings]\ntolerance = -1\n", 2, 13, "positive"),
    ("[settings]\ntolerance = 0\n", 2, 13, "positive"),
    ("[measure]\n", 1, 1, "needs a name"),
    ("[experiment e]\ntheorem = fatou\n", 2, 11, "theorem must be one of"),
    ("[experiment e]\ntheorem = dct\nmeasure = nope\n", 3, 11, "unknown measure"),
    ("[setmeasure s]\nshape = blob\ncenter = 0\n", 2, 9, "shape must be"),
])
def test_errors_point_at_the_problem(text, line, column, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    err = info.value
    assert (err.line, err.column) == (line, column)
    assert fragment in str(err)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.ini")
